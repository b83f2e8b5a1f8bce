// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimc/adaptive_driver.hpp"
#include "mimc/heat_slice.hpp"
#include "mimc/synthetic_model.hpp"

namespace mimc {

/// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)), message_(message) {}
    const std::string& field() const noexcept { return field_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string field_;
    std::string message_;
};

struct ExperimentSpec {
    std::string model = "synthetic";  ///< "synthetic" or "heat"
    SyntheticConfig synthetic;
    HeatSliceConfig heat;

    std::vector<std::string> modes{"adaptive"};  ///< "adaptive" and/or "simplex"
    DriverConfig driver;
    std::vector<double> simplex_rho;  ///< empty means all ones
    double simplex_start_level = 2.0;

    std::vector<double> tolerances{1e-1, 5e-2};  ///< strictly decreasing
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path output_dir = "mimc_out";
    std::vector<std::size_t> snapshots{3, 4, 5, 8, 12, 16, 23, 25, 29, 33, 37, 40};
    std::optional<double> reference;  ///< enables rmse.csv

    /// Throws ConfigError.
    void validate() const;
};

/// Parse a config document; absent keys keep their defaults, unknown keys are
/// rejected. Throws ConfigError.
ExperimentSpec parse_experiment(const nlohmann::json& doc);
ExperimentSpec load_experiment(const std::filesystem::path& path);

/// The full configuration with every key present.
nlohmann::json to_json(const ExperimentSpec& spec);

/// Markdown table of every configuration key with its default.
std::string config_reference();

std::unique_ptr<ModelProblem> make_model(const ExperimentSpec& spec);

struct ExperimentRow {
    double eps = 0.0;
    std::string mode;
    std::uint64_t seed = 0;
    Estimate estimate;
    double total_work = 0.0;
    double wall_time = 0.0;
};

/// Runs every (mode, tolerance, seed) combination and writes into
/// spec.output_dir:
///   summary.csv                     one row per run, flushed as it completes
///   indices/<run>.csv               per-index statistics
///   iterations/<run>.jsonl          one record per iteration
///   snapshots/<run>_iter<L>_{old,active}.txt
///   rmse.csv                        when a reference is configured
/// with <run> = <mode>_eps<k>_seed<s>. A run that stops early still gets its
/// iteration log before the error propagates.
std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, const ModelProblem& model,
                                          std::ostream* log = nullptr);

/// sqrt(mean((estimate - reference)^2)). Throws std::invalid_argument for
/// fewer than two estimates.
double estimate_rmse(std::span<const double> estimates, double reference);

/// Summary CSV columns, in order.
inline constexpr const char* kSummaryHeader =
    "eps_rel,mode,seed,mean,std_error,est_bias,est_rmse,total_work,wall_time";

nlohmann::json to_json(const IterationRecord& record);

}  // namespace mimc
