// SPDX-License-Identifier: Apache-2.0
#include "mimc/random_stream.hpp"

#include <cmath>
#include <numbers>

namespace mimc {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
    return mix64(h ^ (v + kGolden + (h << 6) + (h >> 2)));
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

EventKey event_key(std::uint64_t seed, const MultiIndex& index, std::uint64_t sample) {
    std::uint64_t h = combine(mix64(seed), 0x1D);
    h = combine(h, index.dim());
    for (std::size_t i = 0; i < index.dim(); ++i) {
        h = combine(h, static_cast<std::uint64_t>(index[i]));
    }
    return {combine(h, 0xA5A5), combine(h ^ 0x5A5A, sample)};
}

EventKey shared_event_key(std::uint64_t seed, std::uint64_t sample) {
    const std::uint64_t h = combine(mix64(seed), 0x5E);
    return {combine(h, 0xA5A5), combine(h ^ 0x5A5A, sample)};
}

EventKey substream(const EventKey& key, std::uint64_t stream_id) {
    return {combine(key.hi, stream_id), combine(key.lo, ~stream_id)};
}

std::uint64_t CounterStream::bits(std::uint64_t counter) const noexcept {
    // Two keyed rounds so nearby counters and nearby keys decorrelate.
    const std::uint64_t a = mix64(key_.lo ^ mix64(counter * kGolden + key_.hi));
    return mix64(a ^ key_.hi);
}

double CounterStream::uniform(std::uint64_t counter) const noexcept {
    // 53 random bits, shifted by half an ulp so 0 and 1 are excluded.
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterStream::normal(std::uint64_t i) const noexcept {
    const double u1 = uniform(2 * i);
    const double u2 = uniform(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void CounterStream::normals(std::span<double> out) const noexcept {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = normal(i);
}

}  // namespace mimc
