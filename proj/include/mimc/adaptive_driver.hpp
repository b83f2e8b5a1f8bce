// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mimc/mimc_core.hpp"
#include "mimc/model.hpp"
#include "mimc/multi_index.hpp"

namespace mimc {

struct DriverConfig {
    double eps = 1e-2;             ///< target tolerance
    bool relative = true;          ///< scale eps by |current estimate|
    double theta = 0.5;            ///< variance share of the squared error budget
    double continuation_ratio = 1.5;
    int n_continuation = 0;        ///< stages run before the target tolerance
    std::size_t n_star = 16;       ///< warm-up samples per newly activated index
    std::vector<double> warm_start_rho;  ///< empty means all ones
    double warm_start_level = 2.0;       ///< warm start is T_rho(level)
    std::vector<int> max_levels;         ///< empty means the model's ranges
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t max_iterations = 1000;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct IterationRecord {
    std::size_t iteration = 0;         ///< promotions so far (0 = warm start)
    int stage = 0;                     ///< continuation stage
    std::optional<MultiIndex> selected;
    double selected_profit = 0.0;
    double max_profit = 0.0;           ///< best profit among eligible active indices
    std::vector<MultiIndex> activated;
    double eps_abs = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    double bias = 0.0;
    double cumulative_work = 0.0;
    std::vector<std::string> warnings;
    IndexSet old_set;
    IndexSet active_set;
};

struct StageSummary {
    double eps = 0.0;      ///< tolerance as configured (relative or absolute)
    double eps_abs = 0.0;  ///< absolute tolerance at the stopping check
    Estimate estimate;
    double total_work = 0.0;
    double wall_time = 0.0;
    std::size_t iterations = 0;
};

struct RunResult {
    Estimate estimate;
    double eps_abs = 0.0;
    double total_work = 0.0;
    double wall_time = 0.0;
    std::size_t iterations = 0;
    StatsMap stats;
    IndexSet old_set;
    IndexSet active_set;
    std::vector<IterationRecord> records;
    std::vector<StageSummary> stages;
};

/// A run stopped before meeting its tolerance.
class DriverError : public std::runtime_error {
public:
    DriverError(const std::string& what, std::vector<IterationRecord> records)
        : std::runtime_error(what), records_(std::move(records)) {}
    const std::vector<IterationRecord>& records() const noexcept { return records_; }

private:
    std::vector<IterationRecord> records_;
};

/// eps_rel * |estimate|. A zero estimate falls back to eps_rel as an absolute
/// tolerance and sets `fell_back`.
double relative_to_absolute(double eps_rel, double estimate, bool* fell_back = nullptr);

/// Continuation ladder eps * ratio^(n - k), k = 0..n.
std::vector<double> tolerance_ladder(double eps, double ratio, int n);

/// Dimension-adaptive MIMC. State (index set, statistics, event counters)
/// persists across solve() calls, so successive tolerances reuse samples.
class AdaptiveMimc {
public:
    AdaptiveMimc(const ModelProblem& model, DriverConfig config);

    /// Grow the index set until the bias estimate is below sqrt(1 - theta) eps
    /// with the variance at most theta eps^2. Throws DriverError on the
    /// iteration cap or when no active index can be refined.
    StageSummary solve(double eps);

    RunResult result() const;
    const AdaptiveIndexSet& index_set() const noexcept { return set_; }
    const StatsMap& stats() const noexcept { return stats_; }

private:
    double absolute(double eps, std::vector<std::string>& warnings) const;
    void allocate(double eps_abs);
    void sample(const std::map<MultiIndex, std::size_t>& targets);
    Estimate estimate() const;
    void record(std::optional<MultiIndex> selected, double selected_profit, double max_profit,
                std::vector<MultiIndex> activated, double eps_abs, std::vector<std::string> warnings);

    const ModelProblem& model_;
    DriverConfig config_;
    std::vector<int> caps_;
    Sampler sampler_;
    AdaptiveIndexSet set_;
    StatsMap stats_;
    double work_ = 0.0;
    double wall_ = 0.0;
    std::size_t iteration_ = 0;
    int stage_ = -1;
    std::vector<IterationRecord> records_;
    std::vector<StageSummary> stages_;
};

/// Single solve at config.eps.
RunResult run(const ModelProblem& model, const DriverConfig& config);

/// Solve the continuation ladder ending at config.eps, reusing state.
RunResult run_continuation(const ModelProblem& model, const DriverConfig& config);

/// Nonadaptive baseline on simplices T_rho(L), L = warm_start_level,
/// warm_start_level + 1, ..., until the bias over the maximal elements of the
/// set is below sqrt(1 - theta) eps. The ladder from n_continuation is honored
/// with shared samples. Each record corresponds to one value of L.
RunResult run_simplex(const ModelProblem& model, const DriverConfig& config);

}  // namespace mimc
