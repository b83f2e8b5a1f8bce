// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mimc/multi_index.hpp"
#include "mimc/random_stream.hpp"

namespace mimc {

/// Sampler contract for a hierarchy of discretized quantities of interest g_l.
///
/// Implementations must be immutable after construction: evaluate() is called
/// concurrently and must return bit-identical values for identical
/// (level, event) pairs. work() is the modeled cost of a single g_l
/// evaluation; it must be positive and nondecreasing in every component.
class ModelProblem {
public:
    virtual ~ModelProblem() = default;

    virtual std::size_t dim() const = 0;

    /// Highest supported level in each dimension.
    virtual std::vector<int> max_levels() const = 0;

    virtual double evaluate(const MultiIndex& level, const EventKey& event) const = 0;

    virtual double work(const MultiIndex& level) const = 0;

    virtual std::string name() const = 0;
};

}  // namespace mimc
