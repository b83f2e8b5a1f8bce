// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mimc/model.hpp"

namespace mimc {

struct SyntheticConfig {
    std::size_t dim = 3;
    double limit = 10.0;                         ///< G_inf = lim E[g_l]
    /// c_i in [0, 1). With beta_i = 2, c_i = 1/4 gives E[Delta g_l] = (3/4)^d 4^{-|l|_1} for l != 0.
    std::vector<double> mean_coeff{0.25, 0.25, 0.25};
    std::vector<double> mean_rate{2.0, 2.0, 2.0};   ///< beta_i
    std::vector<double> noise_scale{1.0, 1.0, 1.0}; ///< v_i
    std::vector<double> noise_rate{2.0, 2.0, 2.0};  ///< gamma_v,i
    std::vector<double> work_rate{2.0, 1.0, 1.0};   ///< gamma_w,i
    std::vector<int> max_levels{10, 10, 10};

    /// Throws std::invalid_argument on inconsistent lengths or bad values.
    void validate() const;
    /// The defaults truncated or padded to dimension d.
    static SyntheticConfig with_dim(std::size_t d);
};

/// Closed-form hierarchy with known mean, used as a verification oracle.
///
///   E[g_l] = G_inf - 1 + prod_i (1 - c_i 2^{-beta_i l_i})
///   g_l(w) = E[g_l] + sum_{tau <= l} sqrt(v(tau)) Z_tau(w),
///   v(tau) = prod_i v_i 2^{-gamma_v,i tau_i},
///
/// with Z_tau iid standard normal per event. The noise telescopes, so the
/// mixed difference at l carries exactly the noise sqrt(v(l)) Z_l and
/// V[Delta g_l] = v(l). For d = 1 the mean is G_inf - c 2^{-beta l}.
class SyntheticModel final : public ModelProblem {
public:
    explicit SyntheticModel(SyntheticConfig config);

    std::size_t dim() const override { return config_.dim; }
    std::vector<int> max_levels() const override { return config_.max_levels; }
    double evaluate(const MultiIndex& level, const EventKey& event) const override;
    double work(const MultiIndex& level) const override;
    std::string name() const override { return "synthetic"; }

    double level_mean(const MultiIndex& level) const;
    /// Exact E[Delta g_l].
    double delta_mean(const MultiIndex& level) const;
    /// Exact V[Delta g_l].
    double delta_variance(const MultiIndex& level) const;
    double exact_mean() const { return config_.limit; }

    const SyntheticConfig& config() const noexcept { return config_; }

private:
    void check(const MultiIndex& level) const;

    SyntheticConfig config_;
};

}  // namespace mimc
