// SPDX-License-Identifier: Apache-2.0
#include "mimc/synthetic_model.hpp"

#include <cmath>
#include <stdexcept>

namespace mimc {

namespace {

std::uint64_t index_code(const MultiIndex& tau) {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (std::size_t i = 0; i < tau.dim(); ++i) h = mix64(h ^ static_cast<std::uint64_t>(tau[i]));
    return h;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (dim == 0) throw std::invalid_argument("synthetic: dim must be at least 1");
    auto check_len = [&](std::size_t n, const char* name) {
        if (n != dim) throw std::invalid_argument(std::string("synthetic: ") + name + " needs dim entries");
    };
    check_len(mean_coeff.size(), "mean_coeff");
    check_len(mean_rate.size(), "mean_rate");
    check_len(noise_scale.size(), "noise_scale");
    check_len(noise_rate.size(), "noise_rate");
    check_len(work_rate.size(), "work_rate");
    check_len(max_levels.size(), "max_levels");
    for (std::size_t i = 0; i < dim; ++i) {
        if (!(mean_coeff[i] >= 0.0 && mean_coeff[i] < 1.0)) {
            throw std::invalid_argument("synthetic: mean_coeff must lie in [0, 1)");
        }
        if (!(mean_rate[i] > 0.0)) throw std::invalid_argument("synthetic: mean_rate must be positive");
        if (!(noise_scale[i] >= 0.0)) throw std::invalid_argument("synthetic: noise_scale must be >= 0");
        if (!(noise_rate[i] >= 0.0)) throw std::invalid_argument("synthetic: noise_rate must be >= 0");
        if (!(work_rate[i] >= 0.0)) throw std::invalid_argument("synthetic: work_rate must be >= 0");
        if (max_levels[i] < 0) throw std::invalid_argument("synthetic: max_levels must be >= 0");
    }
}

SyntheticConfig SyntheticConfig::with_dim(std::size_t d) {
    SyntheticConfig c;
    c.dim = d;
    auto resize = [d](auto& v) { v.resize(d, v.front()); };
    resize(c.mean_coeff);
    resize(c.mean_rate);
    resize(c.noise_scale);
    resize(c.noise_rate);
    resize(c.work_rate);
    resize(c.max_levels);
    return c;
}

SyntheticModel::SyntheticModel(SyntheticConfig config) : config_(std::move(config)) {
    config_.validate();
}

void SyntheticModel::check(const MultiIndex& level) const {
    if (level.dim() != config_.dim) throw std::invalid_argument("synthetic: dimension mismatch");
    for (std::size_t i = 0; i < config_.dim; ++i) {
        if (level[i] > config_.max_levels[i]) {
            throw std::out_of_range("synthetic: level " + level.to_string() + " beyond supported range");
        }
    }
}

double SyntheticModel::level_mean(const MultiIndex& level) const {
    check(level);
    double product = 1.0;
    for (std::size_t i = 0; i < config_.dim; ++i) {
        product *= 1.0 - config_.mean_coeff[i] * std::exp2(-config_.mean_rate[i] * level[i]);
    }
    return config_.limit - 1.0 + product;
}

double SyntheticModel::delta_mean(const MultiIndex& level) const {
    check(level);
    double product = 1.0;
    for (std::size_t i = 0; i < config_.dim; ++i) {
        const double c = config_.mean_coeff[i];
        const double beta = config_.mean_rate[i];
        if (level[i] == 0) {
            product *= 1.0 - c;
        } else {
            product *= c * std::exp2(-beta * (level[i] - 1)) * (1.0 - std::exp2(-beta));
        }
    }
    return level.is_zero() ? product + config_.limit - 1.0 : product;
}

double SyntheticModel::delta_variance(const MultiIndex& level) const {
    check(level);
    double v = 1.0;
    for (std::size_t i = 0; i < config_.dim; ++i) {
        v *= config_.noise_scale[i] * std::exp2(-config_.noise_rate[i] * level[i]);
    }
    return v;
}

double SyntheticModel::evaluate(const MultiIndex& level, const EventKey& event) const {
    double g = level_mean(level);
    // Sum over the rectangle R(level) in a fixed order.
    for (const auto& tau : rectangle(level)) {
        const double sd = std::sqrt(delta_variance(tau));
        if (sd == 0.0) continue;
        g += sd * CounterStream(substream(event, index_code(tau))).normal(0);
    }
    return g;
}

double SyntheticModel::work(const MultiIndex& level) const {
    check(level);
    double e = 0.0;
    for (std::size_t i = 0; i < config_.dim; ++i) e += config_.work_rate[i] * level[i];
    return std::exp2(e);
}

}  // namespace mimc
