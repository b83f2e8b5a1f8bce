// SPDX-License-Identifier: Apache-2.0
#include "mimc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mimc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads an object while tracking which keys were consumed, so leftovers can
// be reported as unknown fields.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return node_.contains(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!node_.contains(key)) return;
        try {
            out = node_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(field(key), "wrong type");
        }
    }

    void skip(const std::string& key) { seen_.insert(key); }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(node_.at(key), field(key));
    }

    void finish() const {
        for (const auto& item : node_.items()) {
            if (!seen_.contains(item.key())) throw ConfigError(field(item.key()), "unknown field");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

// Runs a validate() call and maps its failure onto a config field.
template <typename F>
void checked(const std::string& field, F&& validate) {
    try {
        validate();
    } catch (const std::invalid_argument& e) {
        std::string message = e.what();
        // Messages of the form "key: reason" name a subfield.
        const auto colon = message.find(": ");
        if (colon != std::string::npos && message.find(' ') > colon) {
            const std::string key = message.substr(0, colon);
            const bool own_prefix = key == "heat" || key == "synthetic" || key == "MaternParams";
            throw ConfigError(own_prefix ? field : field + "." + key, message.substr(colon + 2));
        }
        throw ConfigError(field, message);
    }
}

void read_matern(Reader r, MaternParams& params, double& mean) {
    r.get("variance", params.variance);
    r.get("correlation_length", params.correlation_length);
    r.get("smoothness", params.smoothness);
    r.get("norm_p", params.norm_p);
    r.get("mean", mean);
    r.finish();
}

json matern_json(const MaternParams& p, double mean) {
    return {{"variance", p.variance},
            {"correlation_length", p.correlation_length},
            {"smoothness", p.smoothness},
            {"norm_p", p.norm_p},
            {"mean", mean}};
}

void read_synthetic(Reader r, SyntheticConfig& c) {
    if (r.has("dim")) {
        std::size_t dim = 0;
        r.get("dim", dim);
        if (dim == 0) throw ConfigError(r.field("dim"), "must be at least 1");
        c = SyntheticConfig::with_dim(dim);
    } else {
        r.get("dim", c.dim);
    }
    r.get("limit", c.limit);
    r.get("mean_coeff", c.mean_coeff);
    r.get("mean_rate", c.mean_rate);
    r.get("noise_scale", c.noise_scale);
    r.get("noise_rate", c.noise_rate);
    r.get("work_rate", c.work_rate);
    r.get("max_levels", c.max_levels);
    r.finish();
}

void read_heat(Reader r, HeatSliceConfig& c) {
    r.get("base_cells", c.base_cells);
    r.get("flux", c.flux);
    r.get("t_cool", c.t_cool);
    r.get("t_ext", c.t_ext);
    r.get("insulator_edges_dirichlet", c.insulator_edges_dirichlet);
    r.get("ext_dirichlet_from", c.ext_dirichlet_from);
    if (r.has("interior")) read_matern(r.child("interior"), c.interior, c.interior_mean);
    if (r.has("exterior")) read_matern(r.child("exterior"), c.exterior, c.exterior_mean);
    r.get("s0_interior", c.s0_interior);
    r.get("s0_exterior", c.s0_exterior);
    r.get("kl_level", c.kl_level);
    r.get("max_levels", c.max_levels);
    r.get("c1", c.c1);
    r.get("c2", c.c2);
    r.get("gamma", c.gamma);
    r.get("elements", c.elements);
    r.get("nodes", c.nodes);
    r.get("kl_cache_dir", c.kl_cache_dir);
    r.finish();
}

void read_driver(Reader r, DriverConfig& c) {
    r.get("relative", c.relative);
    r.get("theta", c.theta);
    r.get("continuation_ratio", c.continuation_ratio);
    r.get("n_continuation", c.n_continuation);
    r.get("n_star", c.n_star);
    r.get("warm_start_rho", c.warm_start_rho);
    r.get("warm_start_level", c.warm_start_level);
    r.get("max_levels", c.max_levels);
    r.get("max_iterations", c.max_iterations);
    r.get("workers", c.workers);
    r.finish();
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string run_name(const std::string& mode, std::size_t eps_index, std::uint64_t seed) {
    return mode + "_eps" + std::to_string(eps_index) + "_seed" + std::to_string(seed);
}

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

json index_json(const MultiIndex& index) { return json(std::vector<int>(index.levels().begin(), index.levels().end())); }

void write_iterations(const fs::path& dir, const std::string& name, const std::vector<IterationRecord>& records,
                      const std::vector<std::size_t>& schedule) {
    auto out = open_out(dir / "iterations" / (name + ".jsonl"));
    for (const auto& r : records) out << to_json(r).dump() << '\n';

    // The last record of an iteration reflects the set after its top-up.
    std::map<std::size_t, const IterationRecord*> last;
    for (const auto& r : records) last[r.iteration] = &r;
    for (std::size_t it : schedule) {
        const auto found = last.find(it);
        if (found == last.end()) continue;
        const std::string stem = name + "_iter" + std::to_string(it);
        auto old_out = open_out(dir / "snapshots" / (stem + "_old.txt"));
        write_index_lines(old_out, found->second->old_set);
        auto active_out = open_out(dir / "snapshots" / (stem + "_active.txt"));
        write_index_lines(active_out, found->second->active_set);
    }
}

void write_indices(const fs::path& dir, const std::string& name, const RunResult& result, std::size_t dim) {
    auto out = open_out(dir / "indices" / (name + ".csv"));
    for (std::size_t i = 0; i < dim; ++i) out << 'l' << i + 1 << ',';
    out << "set,n,mean,variance,work,profit\n";
    for (const auto& [index, s] : result.stats) {
        for (std::size_t i = 0; i < dim; ++i) out << index[i] << ',';
        const double v = s.count() >= 2 ? s.variance() : 0.0;
        out << (result.active_set.contains(index) ? "active" : "old") << ',' << s.count() << ','
            << fmt(s.mean()) << ',' << fmt(v) << ',' << fmt(s.work_per_sample) << ','
            << fmt(profit(std::abs(s.mean()), v, s.work_per_sample)) << '\n';
    }
}

struct KeyDoc {
    const char* key;
    const char* doc;
};

constexpr KeyDoc kKeyDocs[] = {
    {"model", "\"synthetic\" or \"heat\""},
    {"modes", "estimators to run: \"adaptive\", \"simplex\""},
    {"tolerances", "target tolerances, strictly decreasing"},
    {"seeds", "one run per seed and tolerance"},
    {"output_dir", "directory for all artifacts"},
    {"snapshots", "iterations at which index sets are written"},
    {"reference", "reference mean for rmse.csv, or null"},
    {"driver.relative", "scale tolerances by the current estimate"},
    {"driver.theta", "variance share of the squared error budget"},
    {"driver.continuation_ratio", "ratio between continuation tolerances"},
    {"driver.n_continuation", "looser tolerances solved before each target"},
    {"driver.n_star", "warm-up samples per new index"},
    {"driver.warm_start_rho", "warm start simplex weights, empty for all ones"},
    {"driver.warm_start_level", "warm start simplex level"},
    {"driver.max_levels", "per-dimension caps, empty for the model ranges"},
    {"driver.max_iterations", "iteration cap per tolerance stage"},
    {"driver.workers", "sampling threads; results do not depend on it"},
    {"simplex.rho", "baseline simplex weights, empty for all ones"},
    {"simplex.start_level", "first simplex level of the baseline"},
    {"synthetic.dim", "number of refinement dimensions"},
    {"synthetic.limit", "exact limit of the quantity of interest"},
    {"synthetic.mean_coeff", "bias coefficient per dimension, in [0, 1)"},
    {"synthetic.mean_rate", "bias decay exponent per dimension"},
    {"synthetic.noise_scale", "difference variance scale per dimension"},
    {"synthetic.noise_rate", "difference variance decay exponent per dimension"},
    {"synthetic.work_rate", "work growth exponent per dimension"},
    {"synthetic.max_levels", "level range per dimension"},
    {"heat.base_cells", "cells per side on mesh level 0, a multiple of 6"},
    {"heat.flux", "influx through the left edge"},
    {"heat.t_cool", "temperature on the right edge"},
    {"heat.t_ext", "temperature on the top and bottom of the insulator"},
    {"heat.insulator_edges_dirichlet", "hold the insulator top and bottom at t_ext"},
    {"heat.ext_dirichlet_from", "x coordinate where the t_ext edges begin, in [2/3, 1]"},
    {"heat.interior", "Matern parameters and mean of the conductor log-conductivity"},
    {"heat.exterior", "Matern parameters and mean of the insulator log-conductivity"},
    {"heat.s0_interior", "conductor KL terms at level 0"},
    {"heat.s0_exterior", "insulator KL terms at level 0"},
    {"heat.kl_level", "mesh level whose cells are the Nystrom nodes"},
    {"heat.max_levels", "caps for mesh, conductor terms, insulator terms"},
    {"heat.c1", "cost per element and KL term"},
    {"heat.c2", "cost coefficient of the linear solve"},
    {"heat.gamma", "cost exponent of the linear solve"},
    {"heat.elements", "elements per mesh level, empty for cell counts"},
    {"heat.nodes", "nodes per mesh level, empty for cell counts"},
    {"heat.kl_cache_dir", "directory for cached KL bases, empty to disable"},
};

}  // namespace

void ExperimentSpec::validate() const {
    if (model != "synthetic" && model != "heat") throw ConfigError("model", "must be \"synthetic\" or \"heat\"");
    if (model == "synthetic") checked("synthetic", [&] { synthetic.validate(); });
    if (model == "heat") checked("heat", [&] { heat.validate(); });
    if (modes.empty()) throw ConfigError("modes", "needs at least one mode");
    for (const auto& m : modes) {
        if (m != "adaptive" && m != "simplex") throw ConfigError("modes", "unknown mode \"" + m + "\"");
    }
    if (tolerances.empty()) throw ConfigError("tolerances", "needs at least one tolerance");
    for (std::size_t i = 0; i < tolerances.size(); ++i) {
        if (!(tolerances[i] > 0.0)) throw ConfigError("tolerances", "entries must be positive");
        if (i > 0 && !(tolerances[i] < tolerances[i - 1])) {
            throw ConfigError("tolerances", "must be strictly decreasing");
        }
    }
    if (seeds.empty()) throw ConfigError("seeds", "needs at least one seed");
    if (reference && seeds.size() < 2) throw ConfigError("reference", "rmse needs at least two seeds");
    for (double r : simplex_rho) {
        if (!(r > 0.0)) throw ConfigError("simplex.rho", "entries must be positive");
    }
    if (!(simplex_start_level >= 0.0)) throw ConfigError("simplex.start_level", "must be >= 0");
    DriverConfig probe = driver;
    probe.eps = tolerances.front();
    checked("driver", [&] { probe.validate(); });
}

ExperimentSpec parse_experiment(const json& doc) {
    ExperimentSpec spec;
    Reader r(doc, "");
    r.get("model", spec.model);
    if (r.has("synthetic")) read_synthetic(r.child("synthetic"), spec.synthetic);
    if (r.has("heat")) read_heat(r.child("heat"), spec.heat);
    r.get("modes", spec.modes);
    if (r.has("driver")) read_driver(r.child("driver"), spec.driver);
    if (r.has("simplex")) {
        Reader s = r.child("simplex");
        s.get("rho", spec.simplex_rho);
        s.get("start_level", spec.simplex_start_level);
        s.finish();
    }
    r.get("tolerances", spec.tolerances);
    r.get("seeds", spec.seeds);
    std::string out = spec.output_dir.string();
    r.get("output_dir", out);
    spec.output_dir = out;
    r.get("snapshots", spec.snapshots);
    if (r.has("reference") && !doc.at("reference").is_null()) {
        double ref = 0.0;
        r.get("reference", ref);
        spec.reference = ref;
    } else {
        r.skip("reference");
    }
    r.finish();
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("JSON parse error: ") + e.what());
    }
    return parse_experiment(doc);
}

json to_json(const ExperimentSpec& spec) {
    const auto& s = spec.synthetic;
    const auto& h = spec.heat;
    const auto& d = spec.driver;
    return {
        {"model", spec.model},
        {"synthetic",
         {{"dim", s.dim},
          {"limit", s.limit},
          {"mean_coeff", s.mean_coeff},
          {"mean_rate", s.mean_rate},
          {"noise_scale", s.noise_scale},
          {"noise_rate", s.noise_rate},
          {"work_rate", s.work_rate},
          {"max_levels", s.max_levels}}},
        {"heat",
         {{"base_cells", h.base_cells},
          {"flux", h.flux},
          {"t_cool", h.t_cool},
          {"t_ext", h.t_ext},
          {"insulator_edges_dirichlet", h.insulator_edges_dirichlet},
          {"ext_dirichlet_from", h.ext_dirichlet_from},
          {"interior", matern_json(h.interior, h.interior_mean)},
          {"exterior", matern_json(h.exterior, h.exterior_mean)},
          {"s0_interior", h.s0_interior},
          {"s0_exterior", h.s0_exterior},
          {"kl_level", h.kl_level},
          {"max_levels", h.max_levels},
          {"c1", h.c1},
          {"c2", h.c2},
          {"gamma", h.gamma},
          {"elements", h.elements},
          {"nodes", h.nodes},
          {"kl_cache_dir", h.kl_cache_dir}}},
        {"modes", spec.modes},
        {"driver",
         {{"relative", d.relative},
          {"theta", d.theta},
          {"continuation_ratio", d.continuation_ratio},
          {"n_continuation", d.n_continuation},
          {"n_star", d.n_star},
          {"warm_start_rho", d.warm_start_rho},
          {"warm_start_level", d.warm_start_level},
          {"max_levels", d.max_levels},
          {"max_iterations", d.max_iterations},
          {"workers", d.workers}}},
        {"simplex", {{"rho", spec.simplex_rho}, {"start_level", spec.simplex_start_level}}},
        {"tolerances", spec.tolerances},
        {"seeds", spec.seeds},
        {"output_dir", spec.output_dir.string()},
        {"snapshots", spec.snapshots},
        {"reference", spec.reference ? json(*spec.reference) : json(nullptr)},
    };
}

std::string config_reference() {
    const json defaults = to_json(ExperimentSpec{});
    std::ostringstream out;
    out << "| key | default | meaning |\n|---|---|---|\n";
    for (const auto& [key, doc] : kKeyDocs) {
        std::string pointer = "/" + std::string(key);
        std::replace(pointer.begin(), pointer.end(), '.', '/');
        out << "| `" << key << "` | `" << defaults.at(json::json_pointer(pointer)).dump() << "` | " << doc
            << " |\n";
    }
    return out.str();
}

std::unique_ptr<ModelProblem> make_model(const ExperimentSpec& spec) {
    if (spec.model == "synthetic") return std::make_unique<SyntheticModel>(spec.synthetic);
    if (spec.model == "heat") return std::make_unique<HeatSliceModel>(spec.heat);
    throw ConfigError("model", "must be \"synthetic\" or \"heat\"");
}

json to_json(const IterationRecord& r) {
    json activated = json::array();
    for (const auto& index : r.activated) activated.push_back(index_json(index));
    return {{"iteration", r.iteration},
            {"stage", r.stage},
            {"selected", r.selected ? index_json(*r.selected) : json(nullptr)},
            {"selected_profit", r.selected_profit},
            {"max_profit", r.max_profit},
            {"activated", activated},
            {"eps_abs", r.eps_abs},
            {"mean", r.mean},
            {"std_error", r.std_error},
            {"bias", r.bias},
            {"cumulative_work", r.cumulative_work},
            {"old_size", r.old_set.size()},
            {"active_size", r.active_set.size()},
            {"warnings", r.warnings}};
}

double estimate_rmse(std::span<const double> estimates, double reference) {
    if (estimates.size() < 2) throw std::invalid_argument("estimate_rmse: needs at least two runs");
    double sum = 0.0;
    for (double e : estimates) sum += (e - reference) * (e - reference);
    return std::sqrt(sum / static_cast<double>(estimates.size()));
}

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, const ModelProblem& model,
                                          std::ostream* log) {
    spec.validate();
    const fs::path& dir = spec.output_dir;
    fs::create_directories(dir);
    auto summary = open_out(dir / "summary.csv");
    summary << kSummaryHeader << '\n' << std::flush;

    std::vector<ExperimentRow> rows;
    for (const auto& mode : spec.modes) {
        for (std::size_t k = 0; k < spec.tolerances.size(); ++k) {
            for (std::uint64_t seed : spec.seeds) {
                DriverConfig config = spec.driver;
                config.eps = spec.tolerances[k];
                config.seed = seed;
                if (mode == "simplex") {
                    config.warm_start_rho = spec.simplex_rho;
                    config.warm_start_level = spec.simplex_start_level;
                }
                const std::string name = run_name(mode, k, seed);
                RunResult result;
                try {
                    result = mode == "adaptive" ? run_continuation(model, config) : run_simplex(model, config);
                } catch (const DriverError& e) {
                    write_iterations(dir, name, e.records(), spec.snapshots);
                    throw;
                }
                write_iterations(dir, name, result.records, spec.snapshots);
                write_indices(dir, name, result, model.dim());

                ExperimentRow row{config.eps, mode, seed, result.estimate, result.total_work, result.wall_time};
                summary << fmt(row.eps) << ',' << mode << ',' << seed << ',' << fmt(row.estimate.mean) << ','
                        << fmt(row.estimate.std_error) << ',' << fmt(row.estimate.bias) << ','
                        << fmt(row.estimate.rmse()) << ',' << fmt(row.total_work) << ',' << fmt(row.wall_time)
                        << '\n'
                        << std::flush;
                if (log) {
                    *log << name << ": mean " << row.estimate.mean << ", rmse " << row.estimate.rmse()
                         << ", work " << row.total_work << ", iterations " << result.iterations << '\n';
                }
                rows.push_back(std::move(row));
            }
        }
    }

    if (spec.reference) {
        auto out = open_out(dir / "rmse.csv");
        out << "eps_rel,mode,runs,reference,rmse\n";
        for (const auto& mode : spec.modes) {
            for (double eps : spec.tolerances) {
                std::vector<double> estimates;
                for (const auto& row : rows) {
                    if (row.mode == mode && row.eps == eps) estimates.push_back(row.estimate.mean);
                }
                out << fmt(eps) << ',' << mode << ',' << estimates.size() << ',' << fmt(*spec.reference) << ','
                    << fmt(estimate_rmse(estimates, *spec.reference)) << '\n';
            }
        }
    }
    return rows;
}

}  // namespace mimc
