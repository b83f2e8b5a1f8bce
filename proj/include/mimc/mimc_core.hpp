// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "mimc/model.hpp"
#include "mimc/multi_index.hpp"
#include "mimc/random_stream.hpp"

namespace mimc {

/// Substituted for a zero sample variance in profit denominators.
inline constexpr double kVarianceFloor = 1e-30;

/// A model evaluation failed; carries the corner index that was being evaluated.
class ModelEvaluationError : public std::runtime_error {
public:
    ModelEvaluationError(MultiIndex corner, const std::string& what);
    const MultiIndex& corner() const noexcept { return corner_; }

private:
    MultiIndex corner_;
};

struct Corner {
    MultiIndex index;
    int sign;  ///< +1 or -1
};

/// Signed corners of the tensor-product difference at `index`: every l - j
/// with j in {0,1}^d, j_i = 0 where l_i = 0, and sign (-1)^{|j|}. The first
/// corner is `index` itself.
std::vector<Corner> difference_corners(const MultiIndex& index);

struct DeltaSample {
    double value = 0.0;
    double work = 0.0;
};

/// One realization of the mixed difference, with every corner evaluated on
/// the same event.
DeltaSample delta_sample(const ModelProblem& model, const MultiIndex& index, const EventKey& event);

/// Modeled work of one mixed-difference realization (sum over corners).
double delta_work(const ModelProblem& model, const MultiIndex& index);

/// Running sums of difference realizations at one index.
///
/// Sums are accumulated with Neumaier compensation; the variance uses the
/// unbiased n/(n-1) correction.
class IndexStats {
public:
    void add(double x);
    /// Combine a disjoint batch.
    void merge(const IndexStats& other);

    std::size_t count() const noexcept { return n_; }
    double sum() const noexcept { return sum_ + sum_c_; }
    double sum_sq() const noexcept { return sum_sq_ + sum_sq_c_; }

    /// Throws std::logic_error when count() == 0.
    double mean() const;
    /// Throws std::logic_error when count() < 2. Never negative.
    double variance() const;

    double work_per_sample = 0.0;  ///< modeled W_l
    double wall_time = 0.0;        ///< seconds spent sampling, reporting only

private:
    static void accumulate(double& s, double& c, double x);

    std::size_t n_ = 0;
    double sum_ = 0.0, sum_c_ = 0.0;
    double sum_sq_ = 0.0, sum_sq_c_ = 0.0;
};

using StatsMap = std::map<MultiIndex, IndexStats>;

/// Real-valued sample counts minimizing sum N_l W_l subject to
/// sum V_l / N_l <= theta_split * eps^2:
///   N_l = sqrt(V_l / W_l) * sum_tau sqrt(V_tau W_tau) / (theta_split eps^2).
/// Every index must appear in both maps. Throws std::invalid_argument on
/// negative variances, nonpositive work, eps <= 0 or theta_split outside (0, 1).
std::map<MultiIndex, double> optimal_samples(const IndexSet& indices,
                                             const std::map<MultiIndex, double>& variances,
                                             const std::map<MultiIndex, double>& works, double eps,
                                             double theta_split);

/// P = E / sqrt(V W), with V replaced by `variance_floor` when it is zero.
double profit(double error, double variance, double work, double variance_floor = kVarianceFloor);

/// sum over `active` of |Q(Delta g_l)|. Throws std::logic_error if an active
/// index has no samples.
double bias_estimate(const StatsMap& stats, const IndexSet& active);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    double bias = 0.0;

    double rmse() const;
};

/// Sum of sample means over `indices`, its standard error, and the heuristic
/// bias over `active`. Throws std::logic_error if any index has fewer than two
/// samples.
Estimate assemble(const StatsMap& stats, const IndexSet& indices, const IndexSet& active);

/// Maps (index, sample number) to the event used for that realization.
using EventKeyFn = std::function<EventKey(const MultiIndex&, std::uint64_t)>;

/// Draws difference realizations for many indices at once on a worker pool.
/// Sample n at index l always uses event_key(l, n), and results are
/// accumulated in sample order, so statistics do not depend on the worker
/// count.
class Sampler {
public:
    Sampler(const ModelProblem& model, std::uint64_t seed, std::size_t workers,
            EventKeyFn keys = {});

    /// Raise every listed index to at least its target sample count, creating
    /// stats entries as needed. Returns the modeled work spent.
    double top_up(StatsMap& stats, const std::map<MultiIndex, std::size_t>& targets) const;

    const ModelProblem& model() const noexcept { return model_; }
    std::size_t workers() const noexcept { return workers_; }

private:
    const ModelProblem& model_;
    std::size_t workers_;
    EventKeyFn keys_;
};

}  // namespace mimc
