// SPDX-License-Identifier: Apache-2.0
#include "mimc/mimc_core.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "mimc/parallel.hpp"

namespace mimc {

ModelEvaluationError::ModelEvaluationError(MultiIndex corner, const std::string& what)
    : std::runtime_error("model evaluation failed at corner " + corner.to_string() + ": " + what),
      corner_(std::move(corner)) {}

std::vector<Corner> difference_corners(const MultiIndex& index) {
    std::vector<std::size_t> active_dims;
    for (std::size_t i = 0; i < index.dim(); ++i) {
        if (index[i] > 0) active_dims.push_back(i);
    }
    const std::size_t n = active_dims.size();
    std::vector<Corner> corners;
    corners.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<int> levels(index.levels().begin(), index.levels().end());
        int sign = 1;
        for (std::size_t b = 0; b < n; ++b) {
            if (mask & (std::size_t{1} << b)) {
                --levels[active_dims[b]];
                sign = -sign;
            }
        }
        corners.push_back({MultiIndex(std::move(levels)), sign});
    }
    return corners;
}

DeltaSample delta_sample(const ModelProblem& model, const MultiIndex& index, const EventKey& event) {
    DeltaSample out;
    for (const auto& corner : difference_corners(index)) {
        double g = 0.0;
        try {
            g = model.evaluate(corner.index, event);
        } catch (const ModelEvaluationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ModelEvaluationError(corner.index, e.what());
        }
        out.value += corner.sign * g;
        out.work += model.work(corner.index);
    }
    return out;
}

double delta_work(const ModelProblem& model, const MultiIndex& index) {
    double w = 0.0;
    for (const auto& corner : difference_corners(index)) w += model.work(corner.index);
    return w;
}

void IndexStats::accumulate(double& s, double& c, double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x)) {
        c += (s - t) + x;
    } else {
        c += (x - t) + s;
    }
    s = t;
}

void IndexStats::add(double x) {
    ++n_;
    accumulate(sum_, sum_c_, x);
    accumulate(sum_sq_, sum_sq_c_, x * x);
}

void IndexStats::merge(const IndexStats& other) {
    n_ += other.n_;
    accumulate(sum_, sum_c_, other.sum_);
    sum_c_ += other.sum_c_;
    accumulate(sum_sq_, sum_sq_c_, other.sum_sq_);
    sum_sq_c_ += other.sum_sq_c_;
    wall_time += other.wall_time;
}

double IndexStats::mean() const {
    if (n_ == 0) throw std::logic_error("IndexStats: mean of zero samples");
    return sum() / static_cast<double>(n_);
}

double IndexStats::variance() const {
    if (n_ < 2) throw std::logic_error("IndexStats: variance needs at least two samples");
    const double n = static_cast<double>(n_);
    const double m = sum() / n;
    const double v = (sum_sq() - n * m * m) / (n - 1.0);
    return v > 0.0 ? v : 0.0;
}

std::map<MultiIndex, double> optimal_samples(const IndexSet& indices,
                                             const std::map<MultiIndex, double>& variances,
                                             const std::map<MultiIndex, double>& works, double eps,
                                             double theta_split) {
    if (!(eps > 0.0)) throw std::invalid_argument("optimal_samples: eps must be positive");
    if (!(theta_split > 0.0 && theta_split < 1.0)) {
        throw std::invalid_argument("optimal_samples: theta_split must lie in (0, 1)");
    }
    double total = 0.0;
    for (const auto& index : indices) {
        if (!variances.contains(index) || !works.contains(index)) {
            throw std::invalid_argument("optimal_samples: missing variance or work for " + index.to_string());
        }
        const double v = variances.at(index);
        const double w = works.at(index);
        if (!(v >= 0.0)) throw std::invalid_argument("optimal_samples: negative variance");
        if (!(w > 0.0)) throw std::invalid_argument("optimal_samples: work must be positive");
        total += std::sqrt(v * w);
    }
    const double scale = total / (theta_split * eps * eps);
    std::map<MultiIndex, double> out;
    for (const auto& index : indices) {
        out[index] = scale * std::sqrt(variances.at(index) / works.at(index));
    }
    return out;
}

double profit(double error, double variance, double work, double variance_floor) {
    if (!(work > 0.0)) throw std::invalid_argument("profit: work must be positive");
    if (error == 0.0) return 0.0;
    const double v = variance > 0.0 ? variance : variance_floor;
    return error / std::sqrt(v * work);
}

double bias_estimate(const StatsMap& stats, const IndexSet& active) {
    double bias = 0.0;
    for (const auto& index : active) {
        auto it = stats.find(index);
        if (it == stats.end() || it->second.count() == 0) {
            throw std::logic_error("bias_estimate: active index " + index.to_string() +
                                   " has no samples");
        }
        bias += std::abs(it->second.mean());
    }
    return bias;
}

double Estimate::rmse() const { return std::sqrt(std_error * std_error + bias * bias); }

Estimate assemble(const StatsMap& stats, const IndexSet& indices, const IndexSet& active) {
    Estimate out;
    double var = 0.0;
    for (const auto& index : indices) {
        auto it = stats.find(index);
        if (it == stats.end() || it->second.count() < 2) {
            throw std::logic_error("assemble: index " + index.to_string() +
                                   " has fewer than two samples");
        }
        out.mean += it->second.mean();
        var += it->second.variance() / static_cast<double>(it->second.count());
    }
    out.std_error = std::sqrt(var);
    out.bias = bias_estimate(stats, active);
    return out;
}

Sampler::Sampler(const ModelProblem& model, std::uint64_t seed, std::size_t workers,
                 EventKeyFn keys)
    : model_(model), workers_(workers == 0 ? 1 : workers), keys_(std::move(keys)) {
    if (!keys_) {
        keys_ = [seed](const MultiIndex& index, std::uint64_t n) { return event_key(seed, index, n); };
    }
}

double Sampler::top_up(StatsMap& stats, const std::map<MultiIndex, std::size_t>& targets) const {
    struct Task {
        const MultiIndex* index;
        std::uint64_t sample;
    };
    std::vector<Task> tasks;
    for (const auto& [index, target] : targets) {
        auto& entry = stats[index];
        if (entry.work_per_sample == 0.0) entry.work_per_sample = delta_work(model_, index);
        for (std::size_t n = entry.count(); n < target; ++n) tasks.push_back({&index, n});
    }
    if (tasks.empty()) return 0.0;

    std::vector<double> values(tasks.size());
    std::vector<double> seconds(tasks.size());
    parallel_for(tasks.size(), workers_, [&](std::size_t t) {
        const auto start = std::chrono::steady_clock::now();
        const Task& task = tasks[t];
        values[t] = delta_sample(model_, *task.index, keys_(*task.index, task.sample)).value;
        seconds[t] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    // Tasks are grouped by index in sample order, so sequential accumulation
    // is independent of scheduling.
    double work = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        auto& entry = stats[*tasks[t].index];
        entry.add(values[t]);
        entry.wall_time += seconds[t];
        work += entry.work_per_sample;
    }
    return work;
}

}  // namespace mimc
