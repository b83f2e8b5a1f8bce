// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "mimc/multi_index.hpp"

namespace mimc {

/// 128-bit key identifying one random event (or a substream of it).
struct EventKey {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    bool operator==(const EventKey&) const = default;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Key for sample `sample` at index `index` under global seed `seed`.
EventKey event_key(std::uint64_t seed, const MultiIndex& index, std::uint64_t sample);

/// Key for sample `sample` that does not depend on the index; used when every
/// index must see the same events (telescoping checks).
EventKey shared_event_key(std::uint64_t seed, std::uint64_t sample);

/// Independent substream of an event, e.g. one per random field.
EventKey substream(const EventKey& key, std::uint64_t stream_id);

/// Counter-based generator: every draw is a pure function of (key, counter),
/// so the r-th normal of a stream does not depend on how many are consumed.
class CounterStream {
public:
    explicit CounterStream(const EventKey& key) noexcept : key_(key) {}

    std::uint64_t bits(std::uint64_t counter) const noexcept;
    /// Uniform on (0, 1).
    double uniform(std::uint64_t counter) const noexcept;
    /// i-th standard normal (Box-Muller on counters 2i and 2i+1).
    double normal(std::uint64_t i) const noexcept;
    /// Fill `out` with normals 0..out.size()-1.
    void normals(std::span<double> out) const noexcept;

private:
    EventKey key_;
};

}  // namespace mimc
