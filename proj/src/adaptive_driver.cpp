// SPDX-License-Identifier: Apache-2.0
#include "mimc/adaptive_driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace mimc {

namespace {

std::vector<int> effective_caps(const ModelProblem& model, const DriverConfig& config) {
    std::vector<int> caps = model.max_levels();
    if (caps.size() != model.dim()) throw std::invalid_argument("model: max_levels has the wrong length");
    if (!config.max_levels.empty()) {
        if (config.max_levels.size() != model.dim()) {
            throw std::invalid_argument("max_levels: expected " + std::to_string(model.dim()) + " entries");
        }
        for (std::size_t i = 0; i < caps.size(); ++i) caps[i] = std::min(caps[i], config.max_levels[i]);
    }
    return caps;
}

std::vector<double> warm_rho(const ModelProblem& model, const DriverConfig& config) {
    if (config.warm_start_rho.empty()) return std::vector<double>(model.dim(), 1.0);
    if (config.warm_start_rho.size() != model.dim()) {
        throw std::invalid_argument("warm_start_rho: expected " + std::to_string(model.dim()) + " entries");
    }
    return config.warm_start_rho;
}

IndexSet capped_simplex(std::span<const double> rho, double level, const std::vector<int>& caps) {
    IndexSet out;
    for (const auto& index : simplex(rho, level)) {
        bool inside = true;
        for (std::size_t i = 0; i < caps.size(); ++i) inside = inside && index[i] <= caps[i];
        if (inside) out.insert(index);
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void DriverConfig::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps: must be positive and finite");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta: must lie in (0, 1)");
    if (!(continuation_ratio > 1.0)) throw std::invalid_argument("continuation_ratio: must exceed 1");
    if (n_continuation < 0) throw std::invalid_argument("n_continuation: must be >= 0");
    if (n_star < 2) throw std::invalid_argument("n_star: must be >= 2");
    for (double r : warm_start_rho) {
        if (!(r > 0.0)) throw std::invalid_argument("warm_start_rho: entries must be positive");
    }
    if (!(warm_start_level >= 0.0)) throw std::invalid_argument("warm_start_level: must be >= 0");
    for (int m : max_levels) {
        if (m < 0) throw std::invalid_argument("max_levels: entries must be >= 0");
    }
    if (workers == 0) throw std::invalid_argument("workers: must be >= 1");
    if (max_iterations == 0) throw std::invalid_argument("max_iterations: must be >= 1");
}

double relative_to_absolute(double eps_rel, double estimate, bool* fell_back) {
    const double scale = std::abs(estimate);
    if (fell_back) *fell_back = scale == 0.0;
    return scale == 0.0 ? eps_rel : eps_rel * scale;
}

std::vector<double> tolerance_ladder(double eps, double ratio, int n) {
    std::vector<double> ladder;
    for (int k = 0; k <= n; ++k) ladder.push_back(eps * std::pow(ratio, n - k));
    return ladder;
}

AdaptiveMimc::AdaptiveMimc(const ModelProblem& model, DriverConfig config)
    : model_(model),
      config_(std::move(config)),
      caps_(effective_caps(model, config_)),
      sampler_(model, config_.seed, config_.workers),
      set_(model.dim()) {
    config_.validate();
    const auto rho = warm_rho(model_, config_);
    set_ = AdaptiveIndexSet::from_admissible(capped_simplex(rho, config_.warm_start_level, caps_));
    std::map<MultiIndex, std::size_t> targets;
    for (const auto& index : set_.all()) targets[index] = config_.n_star;
    sample(targets);
}

void AdaptiveMimc::sample(const std::map<MultiIndex, std::size_t>& targets) {
    const auto start = std::chrono::steady_clock::now();
    work_ += sampler_.top_up(stats_, targets);
    wall_ += seconds_since(start);
}

Estimate AdaptiveMimc::estimate() const { return assemble(stats_, set_.all(), set_.active_set()); }

double AdaptiveMimc::absolute(double eps, std::vector<std::string>& warnings) const {
    if (!config_.relative) return eps;
    bool fell_back = false;
    const double eps_abs = relative_to_absolute(eps, estimate().mean, &fell_back);
    if (fell_back) warnings.emplace_back("zero estimate; tolerance interpreted as absolute");
    return eps_abs;
}

void AdaptiveMimc::allocate(double eps_abs) {
    const IndexSet all = set_.all();
    std::map<MultiIndex, double> v, w;
    for (const auto& index : all) {
        v[index] = stats_.at(index).variance();
        w[index] = stats_.at(index).work_per_sample;
    }
    const auto n = optimal_samples(all, v, w, eps_abs, config_.theta);
    std::map<MultiIndex, std::size_t> targets;
    for (const auto& [index, real] : n) {
        const double up = std::ceil(real);
        const auto want = up >= 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(up);
        targets[index] = std::max<std::size_t>(2, want);
    }
    sample(targets);
}

void AdaptiveMimc::record(std::optional<MultiIndex> selected, double selected_profit, double max_profit,
                          std::vector<MultiIndex> activated, double eps_abs,
                          std::vector<std::string> warnings) {
    const Estimate e = estimate();
    IterationRecord r;
    r.iteration = iteration_;
    r.stage = stage_;
    r.selected = std::move(selected);
    r.selected_profit = selected_profit;
    r.max_profit = max_profit;
    r.activated = std::move(activated);
    r.eps_abs = eps_abs;
    r.mean = e.mean;
    r.std_error = e.std_error;
    r.bias = e.bias;
    r.cumulative_work = work_;
    r.warnings = std::move(warnings);
    r.old_set = set_.old_set();
    r.active_set = set_.active_set();
    records_.push_back(std::move(r));
}

StageSummary AdaptiveMimc::solve(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps: must be positive");
    ++stage_;
    const double wall_before = wall_;
    const std::size_t iterations_before = iteration_;
    const double bias_share = std::sqrt(1.0 - config_.theta);

    std::vector<std::string> warnings;
    double eps_abs = absolute(eps, warnings);
    allocate(eps_abs);
    eps_abs = absolute(eps, warnings);
    record(std::nullopt, 0.0, 0.0, {}, eps_abs, warnings);

    while (!(estimate().bias < bias_share * eps_abs)) {
        if (iteration_ - iterations_before >= config_.max_iterations) {
            throw DriverError("max_iterations reached (" + std::to_string(config_.max_iterations) +
                                  ") before meeting the tolerance",
                              records_);
        }
        // Largest profit wins; ties go to the coarser index, then lexicographic order.
        std::optional<MultiIndex> best;
        double best_profit = -1.0;
        for (const auto& index : set_.active_set()) {
            if (!AdaptiveIndexSet::expandable(index, caps_)) continue;
            const IndexStats& s = stats_.at(index);
            const double p = profit(std::abs(s.mean()), s.variance(), s.work_per_sample);
            if (!best || p > best_profit || (p == best_profit && index.l1() < best->l1())) {
                best = index;
                best_profit = p;
            }
        }
        if (!best) throw DriverError("index space exhausted", records_);

        auto activated = set_.promote(*best, caps_);
        ++iteration_;
        std::map<MultiIndex, std::size_t> warm;
        for (const auto& index : activated) warm[index] = config_.n_star;
        sample(warm);

        warnings.clear();
        eps_abs = absolute(eps, warnings);
        allocate(eps_abs);
        eps_abs = absolute(eps, warnings);
        record(best, best_profit, best_profit, std::move(activated), eps_abs, warnings);
    }

    StageSummary summary;
    summary.eps = eps;
    summary.eps_abs = eps_abs;
    summary.estimate = estimate();
    summary.total_work = work_;
    summary.wall_time = wall_ - wall_before;
    summary.iterations = iteration_ - iterations_before;
    stages_.push_back(summary);
    return summary;
}

RunResult AdaptiveMimc::result() const {
    RunResult r;
    r.estimate = estimate();
    r.eps_abs = stages_.empty() ? 0.0 : stages_.back().eps_abs;
    r.total_work = work_;
    r.wall_time = wall_;
    r.iterations = iteration_;
    r.stats = stats_;
    r.old_set = set_.old_set();
    r.active_set = set_.active_set();
    r.records = records_;
    r.stages = stages_;
    return r;
}

RunResult run(const ModelProblem& model, const DriverConfig& config) {
    AdaptiveMimc mimc(model, config);
    mimc.solve(config.eps);
    return mimc.result();
}

RunResult run_continuation(const ModelProblem& model, const DriverConfig& config) {
    config.validate();
    AdaptiveMimc mimc(model, config);
    for (double eps : tolerance_ladder(config.eps, config.continuation_ratio, config.n_continuation)) {
        mimc.solve(eps);
    }
    return mimc.result();
}

RunResult run_simplex(const ModelProblem& model, const DriverConfig& config) {
    config.validate();
    const auto caps = effective_caps(model, config);
    const auto rho = warm_rho(model, config);
    const Sampler sampler(model, config.seed, config.workers);
    const double bias_share = std::sqrt(1.0 - config.theta);

    RunResult result;
    StatsMap& stats = result.stats;
    double work = 0.0;
    double wall = 0.0;
    auto sample = [&](const std::map<MultiIndex, std::size_t>& targets) {
        const auto start = std::chrono::steady_clock::now();
        work += sampler.top_up(stats, targets);
        wall += seconds_since(start);
    };

    double level = config.warm_start_level;
    IndexSet set = capped_simplex(rho, level, caps);
    IndexSet frontier = maximal_elements(set);
    std::size_t steps = 0;
    int stage = -1;

    auto current = [&] { return assemble(stats, set, frontier); };
    auto absolute = [&](double eps, std::vector<std::string>& warnings) {
        if (!config.relative) return eps;
        bool fell_back = false;
        const double eps_abs = relative_to_absolute(eps, current().mean, &fell_back);
        if (fell_back) warnings.emplace_back("zero estimate; tolerance interpreted as absolute");
        return eps_abs;
    };
    auto allocate = [&](double eps_abs) {
        std::map<MultiIndex, double> v, w;
        for (const auto& index : set) {
            v[index] = stats.at(index).variance();
            w[index] = stats.at(index).work_per_sample;
        }
        std::map<MultiIndex, std::size_t> targets;
        for (const auto& [index, real] : optimal_samples(set, v, w, eps_abs, config.theta)) {
            const double up = std::ceil(real);
            targets[index] = std::max<std::size_t>(
                2, up >= 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(up));
        }
        sample(targets);
    };
    auto record = [&](std::vector<MultiIndex> added, double eps_abs, std::vector<std::string> warnings) {
        const Estimate e = current();
        IterationRecord r;
        r.iteration = steps;
        r.stage = stage;
        r.activated = std::move(added);
        r.eps_abs = eps_abs;
        r.mean = e.mean;
        r.std_error = e.std_error;
        r.bias = e.bias;
        r.cumulative_work = work;
        r.warnings = std::move(warnings);
        for (const auto& index : set) (frontier.contains(index) ? r.active_set : r.old_set).insert(index);
        result.records.push_back(std::move(r));
    };

    {
        std::map<MultiIndex, std::size_t> warm;
        for (const auto& index : set) warm[index] = config.n_star;
        sample(warm);
    }

    for (double eps : tolerance_ladder(config.eps, config.continuation_ratio, config.n_continuation)) {
        ++stage;
        const double wall_before = wall;
        const std::size_t steps_before = steps;
        std::vector<std::string> warnings;
        double eps_abs = absolute(eps, warnings);
        allocate(eps_abs);
        eps_abs = absolute(eps, warnings);
        record({}, eps_abs, warnings);

        while (!(current().bias < bias_share * eps_abs)) {
            if (steps - steps_before >= config.max_iterations) {
                throw DriverError("max_iterations reached (" + std::to_string(config.max_iterations) +
                                      ") before meeting the tolerance",
                                  result.records);
            }
            IndexSet next = capped_simplex(rho, level + 1.0, caps);
            if (next.size() == set.size()) throw DriverError("index space exhausted", result.records);
            level += 1.0;
            std::vector<MultiIndex> added;
            std::map<MultiIndex, std::size_t> warm;
            for (const auto& index : next) {
                if (!set.contains(index)) {
                    added.push_back(index);
                    warm[index] = config.n_star;
                }
            }
            set = std::move(next);
            frontier = maximal_elements(set);
            ++steps;
            sample(warm);

            warnings.clear();
            eps_abs = absolute(eps, warnings);
            allocate(eps_abs);
            eps_abs = absolute(eps, warnings);
            record(std::move(added), eps_abs, warnings);
        }

        StageSummary summary;
        summary.eps = eps;
        summary.eps_abs = eps_abs;
        summary.estimate = current();
        summary.total_work = work;
        summary.wall_time = wall - wall_before;
        summary.iterations = steps - steps_before;
        result.stages.push_back(summary);
    }

    result.estimate = current();
    result.eps_abs = result.stages.back().eps_abs;
    result.total_work = work;
    result.wall_time = wall;
    result.iterations = steps;
    for (const auto& index : set) (frontier.contains(index) ? result.active_set : result.old_set).insert(index);
    return result;
}

}  // namespace mimc
