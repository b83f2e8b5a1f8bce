// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace mimc {

/// Run fn(0..n-1) on up to `workers` threads. Tasks are claimed dynamically,
/// so callers must write results into slots owned by the task index. If any
/// task throws, the exception of the lowest failing task index is rethrown
/// after all threads join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace mimc
