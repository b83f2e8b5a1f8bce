// SPDX-License-Identifier: Apache-2.0
#include "mimc/heat_slice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "mimc/kl_cache.hpp"

namespace mimc {

namespace {

constexpr std::uint64_t kInteriorStream = 1;
constexpr std::uint64_t kExteriorStream = 2;

using SparseMatrix = Eigen::SparseMatrix<double>;
using Solver = Eigen::SimplicialLDLT<SparseMatrix>;

// Matern covariance between cell centers of a `columns` x `rows` grid with
// spacing h. With the 1-norm the distance is h times the sum of the integer
// offsets, so a single table covers every pair.
Eigen::MatrixXd grid_covariance(const MaternParams& params, int columns, int rows, double h) {
    const int cells = columns * rows;
    std::vector<double> table(static_cast<std::size_t>(columns + rows));
    const bool one_norm = params.norm_p == 1.0;
    if (one_norm) {
        for (std::size_t s = 0; s < table.size(); ++s) {
            table[s] = matern_from_distance(params, h * static_cast<double>(s));
        }
    }
    Eigen::MatrixXd cov(cells, cells);
    for (int a = 0; a < cells; ++a) {
        const int ia = a % columns;
        const int ja = a / columns;
        for (int b = 0; b <= a; ++b) {
            const int di = std::abs(ia - b % columns);
            const int dj = std::abs(ja - b / columns);
            double c;
            if (one_norm) {
                c = table[static_cast<std::size_t>(di + dj)];
            } else {
                const double r = h * std::pow(std::pow(di, params.norm_p) + std::pow(dj, params.norm_p),
                                              1.0 / params.norm_p);
                c = matern_from_distance(params, r);
            }
            cov(a, b) = c;
            cov(b, a) = c;
        }
    }
    return cov;
}

SparseMatrix assemble(int n, int dirichlet_column, const Eigen::VectorXd& k, bool insulator_dirichlet,
                      double flux, double t_cool, double t_ext, Eigen::VectorXd& rhs) {
    const double h = 1.0 / n;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(5 * n * n));
    rhs = Eigen::VectorXd::Zero(n * n);
    auto id = [n](int i, int j) { return j * n + i; };
    auto harmonic = [](double a, double b) { return 2.0 * a * b / (a + b); };

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int p = id(i, j);
            const double kp = k[p];
            double diag = 0.0;
            auto link = [&](int q) {
                const double c = harmonic(kp, k[q]);
                diag += c;
                entries.emplace_back(p, q, -c);
            };
            if (i > 0) link(id(i - 1, j));
            else rhs[p] += flux * h;
            if (i + 1 < n) link(id(i + 1, j));
            else {
                diag += 2.0 * kp;
                rhs[p] += 2.0 * kp * t_cool;
            }
            const bool dirichlet_rows = insulator_dirichlet && i >= dirichlet_column;
            if (j > 0) link(id(i, j - 1));
            else if (dirichlet_rows) {
                diag += 2.0 * kp;
                rhs[p] += 2.0 * kp * t_ext;
            }
            if (j + 1 < n) link(id(i, j + 1));
            else if (dirichlet_rows) {
                diag += 2.0 * kp;
                rhs[p] += 2.0 * kp * t_ext;
            }
            entries.emplace_back(p, p, diag);
        }
    }
    SparseMatrix a(n * n, n * n);
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
}

// The sparsity pattern depends only on n, so the symbolic analysis is reused.
Solver& solver_for(int n, const SparseMatrix& a) {
    thread_local std::map<int, std::unique_ptr<Solver>> solvers;
    auto& slot = solvers[n];
    if (!slot) {
        slot = std::make_unique<Solver>();
        slot->analyzePattern(a);
    }
    return *slot;
}

}  // namespace

void HeatSliceConfig::validate() const {
    if (base_cells <= 0 || base_cells % 6 != 0) {
        throw std::invalid_argument("heat: base_cells must be a positive multiple of 6");
    }
    if (!(flux >= 0.0) || !std::isfinite(t_cool) || !std::isfinite(t_ext)) {
        throw std::invalid_argument("heat: boundary data must be finite with nonnegative flux");
    }
    interior.validate();
    exterior.validate();
    if (s0_interior <= 0 || s0_exterior <= 0) {
        throw std::invalid_argument("heat: base KL term counts must be positive");
    }
    if (!(ext_dirichlet_from >= 2.0 / 3.0 - 1e-12 && ext_dirichlet_from <= 1.0)) {
        throw std::invalid_argument("heat: ext_dirichlet_from must lie in [2/3, 1]");
    }
    if (kl_level < 0 || kl_level > 8) throw std::invalid_argument("heat: kl_level must lie in [0, 8]");
    if (max_levels.size() != 3) throw std::invalid_argument("heat: max_levels needs 3 entries");
    for (int m : max_levels) {
        if (m < 0 || m > 12) throw std::invalid_argument("heat: max_levels entries must lie in [0, 12]");
    }
    if (elements.size() != nodes.size()) {
        throw std::invalid_argument("heat: elements and nodes tables must have equal length");
    }
    if (!elements.empty() && elements.size() < static_cast<std::size_t>(max_levels[0]) + 1) {
        throw std::invalid_argument("heat: mesh tables must cover every mesh level");
    }
}

HeatSliceModel::HeatSliceModel(HeatSliceConfig config) : config_(std::move(config)) {
    config_.validate();

    cost_.c1 = config_.c1;
    cost_.c2 = config_.c2;
    cost_.gamma = config_.gamma;
    cost_.s0_interior = config_.s0_interior;
    cost_.s0_exterior = config_.s0_exterior;
    if (config_.elements.empty()) {
        for (int l = 0; l <= config_.max_levels[0]; ++l) {
            const double cells = static_cast<double>(cells_per_side(l)) * cells_per_side(l);
            cost_.elements.push_back(cells);
            cost_.nodes.push_back(cells);
        }
    } else {
        cost_.elements = config_.elements;
        cost_.nodes = config_.nodes;
    }
    cost_.validate();

    const int n = cells_per_side(config_.kl_level);
    const int split = conductor_columns(config_.kl_level);
    interior_ = build_field(config_.interior, config_.interior_mean, 0, split,
                            interior_terms(config_.max_levels[1]));
    exterior_ = build_field(config_.exterior, config_.exterior_mean, split, n - split,
                            exterior_terms(config_.max_levels[2]));
}

int HeatSliceModel::dirichlet_column(int mesh_level) const {
    const int n = cells_per_side(mesh_level);
    return std::max(conductor_columns(mesh_level),
                    static_cast<int>(std::ceil(config_.ext_dirichlet_from * n - 1e-9)));
}

std::size_t HeatSliceModel::interior_terms(int level) const {
    return static_cast<std::size_t>(config_.s0_interior) << level;
}

std::size_t HeatSliceModel::exterior_terms(int level) const {
    return static_cast<std::size_t>(config_.s0_exterior) << level;
}

HeatSliceModel::Field HeatSliceModel::build_field(const MaternParams& params, double mean,
                                                  int first_column, int columns,
                                                  std::size_t rank) const {
    const int n = cells_per_side(config_.kl_level);
    const double h = 1.0 / n;
    const int cells = columns * n;
    if (rank > static_cast<std::size_t>(cells)) {
        throw std::invalid_argument("heat: " + std::to_string(rank) + " KL terms exceed the " +
                                    std::to_string(cells) + " nodes at kl_level; raise kl_level");
    }
    Eigen::MatrixXd points(cells, 2);
    for (int c = 0; c < cells; ++c) {
        points(c, 0) = (first_column + c % columns + 0.5) * h;
        points(c, 1) = (c / columns + 0.5) * h;
    }
    const Eigen::VectorXd weights = Eigen::VectorXd::Constant(cells, h * h);

    Field field;
    field.mean = mean;
    field.columns_kl = columns;
    field.basis = cached_kl_basis(config_.kl_cache_dir, params, mean, points, weights, rank,
                                  [&] { return grid_covariance(params, columns, n, h); });
    field.scaled_modes = field.basis.eigenfunctions *
                         field.basis.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal();

    // Block averages for coarser meshes: level l merges 2^(kl - l) cells per side.
    for (int l = 0; l < config_.kl_level; ++l) {
        const int f = 1 << (config_.kl_level - l);
        const int cols_l = columns / f;
        const int rows_l = n / f;
        Eigen::MatrixXd coarse = Eigen::MatrixXd::Zero(cols_l * rows_l, field.scaled_modes.cols());
        for (int c = 0; c < cells; ++c) {
            const int ci = (c % columns) / f;
            const int cj = (c / columns) / f;
            coarse.row(cj * cols_l + ci) += field.scaled_modes.row(c);
        }
        coarse /= static_cast<double>(f * f);
        field.coarse_modes.push_back(std::move(coarse));
    }
    return field;
}

Eigen::VectorXd HeatSliceModel::field_values(const Field& field, int mesh_level, int columns,
                                             std::span<const double> xi) const {
    const auto s = static_cast<Eigen::Index>(xi.size());
    if (s > field.scaled_modes.cols()) throw std::invalid_argument("heat: more KL terms than stored");
    const Eigen::Map<const Eigen::VectorXd> x(xi.data(), s);
    const int n = cells_per_side(mesh_level);
    if (mesh_level <= config_.kl_level) {
        const Eigen::MatrixXd& modes =
            mesh_level == config_.kl_level ? field.scaled_modes : field.coarse_modes[mesh_level];
        Eigen::VectorXd z = modes.leftCols(s) * x;
        z.array() += field.mean;
        return z;
    }
    // Finer meshes inherit piecewise-constant values from the KL grid.
    Eigen::VectorXd coarse = field.scaled_modes.leftCols(s) * x;
    coarse.array() += field.mean;
    const int f = 1 << (mesh_level - config_.kl_level);
    Eigen::VectorXd z(columns * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < columns; ++i) {
            z[j * columns + i] = coarse[(j / f) * field.columns_kl + i / f];
        }
    }
    return z;
}

Eigen::VectorXd HeatSliceModel::conductivity(int mesh_level, std::span<const double> xi_interior,
                                             std::span<const double> xi_exterior) const {
    const int n = cells_per_side(mesh_level);
    const int split = conductor_columns(mesh_level);
    const Eigen::VectorXd zi = field_values(interior_, mesh_level, split, xi_interior);
    const Eigen::VectorXd ze = field_values(exterior_, mesh_level, n - split, xi_exterior);
    Eigen::VectorXd k(n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            k[j * n + i] = i < split ? std::exp(zi[j * split + i]) : std::exp(ze[j * (n - split) + i - split]);
        }
    }
    return k;
}

Eigen::VectorXd HeatSliceModel::solve_temperature(int mesh_level, const Eigen::VectorXd& k) const {
    const int n = cells_per_side(mesh_level);
    if (k.size() != n * n) throw std::invalid_argument("heat: conductivity has the wrong size");
    if (!(k.minCoeff() > 0.0) || !k.allFinite()) {
        throw std::invalid_argument("heat: conductivity must be positive and finite");
    }
    Eigen::VectorXd rhs;
    const SparseMatrix a = assemble(n, dirichlet_column(mesh_level), k, config_.insulator_edges_dirichlet,
                                    config_.flux, config_.t_cool, config_.t_ext, rhs);
    Solver& solver = solver_for(n, a);
    solver.factorize(a);
    if (solver.info() != Eigen::Success) throw std::runtime_error("heat: factorization failed");
    Eigen::VectorXd t = solver.solve(rhs);
    // High conductivity contrast leaves residuals well above 1e-10 after the
    // direct solve; a few refinement sweeps recover them.
    Eigen::VectorXd r = rhs - a * t;
    double residual = r.norm() / rhs.norm();
    for (int sweep = 0; sweep < 4 && residual > 1e-12; ++sweep) {
        t += solver.solve(r);
        r = rhs - a * t;
        residual = r.norm() / rhs.norm();
    }
    if (solver.info() != Eigen::Success || !(residual <= 1e-10)) {
        std::ostringstream msg;
        msg << "heat: linear solve did not converge, relative residual " << residual;
        throw std::runtime_error(msg.str());
    }
    return t;
}

double HeatSliceModel::qoi(int mesh_level, const Eigen::VectorXd& temperature,
                           const Eigen::VectorXd& k) const {
    const int n = cells_per_side(mesh_level);
    const double half_h = 0.5 / n;
    double sum = 0.0;
    for (int j : {n / 2 - 1, n / 2}) {
        const int p = j * n;
        sum += temperature[p] + config_.flux * half_h / k[p];
    }
    return 0.5 * sum;
}

double HeatSliceModel::evaluate_with_draws(int mesh_level, std::span<const double> xi_interior,
                                           std::span<const double> xi_exterior) const {
    const Eigen::VectorXd k = conductivity(mesh_level, xi_interior, xi_exterior);
    return qoi(mesh_level, solve_temperature(mesh_level, k), k);
}

void HeatSliceModel::check(const MultiIndex& level) const {
    if (level.dim() != 3) throw std::invalid_argument("heat: expects a three-dimensional index");
    for (std::size_t i = 0; i < 3; ++i) {
        if (level[i] > config_.max_levels[i]) {
            throw std::out_of_range("heat: level " + level.to_string() + " beyond supported range");
        }
    }
}

std::pair<std::vector<double>, std::vector<double>> HeatSliceModel::draws(const MultiIndex& level,
                                                                          const EventKey& event) const {
    check(level);
    std::vector<double> xi_int(interior_terms(level[1]));
    std::vector<double> xi_ext(exterior_terms(level[2]));
    CounterStream(substream(event, kInteriorStream)).normals(xi_int);
    CounterStream(substream(event, kExteriorStream)).normals(xi_ext);
    return {std::move(xi_int), std::move(xi_ext)};
}

double HeatSliceModel::evaluate(const MultiIndex& level, const EventKey& event) const {
    const auto [xi_int, xi_ext] = draws(level, event);
    return evaluate_with_draws(level[0], xi_int, xi_ext);
}

double HeatSliceModel::work(const MultiIndex& level) const {
    check(level);
    return work_model(cost_, level);
}

}  // namespace mimc
