// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimc/cost_model.hpp"
#include "mimc/gaussian_field.hpp"
#include "mimc/model.hpp"

namespace mimc {

/// Two-region steady diffusion on the unit square.
///
/// The left two thirds conduct (k_int = exp(Z_int)); the right third
/// insulates (k_ext = exp(Z_ext)). Heat enters through the left edge at rate
/// `flux`; the right edge is held at `t_cool` and, when
/// `insulator_edges_dirichlet` is set, the top and bottom of the insulator
/// strip at `t_ext` for x >= `ext_dirichlet_from`. All other boundary pieces
/// are insulated.
struct HeatSliceConfig {
    int base_cells = 6;  ///< cells per side at mesh level 0; a multiple of 6
    double flux = 125.0 / std::numbers::pi;
    double t_cool = 7.5;
    double t_ext = 20.0;
    bool insulator_edges_dirichlet = true;
    /// Starting at the material interface (2/3) puts a Dirichlet-Neumann
    /// junction next to the conductor, where mesh differences decay only
    /// like 0.8^l1; starting inside the insulator restores first order.
    double ext_dirichlet_from = 5.0 / 6.0;

    /// Euclidean norm: with nu = 1 the 1-norm kernel is indefinite in 2D.
    MaternParams interior{0.1, 1.0, 1.0, 2.0};
    double interior_mean = 0.0;
    MaternParams exterior{1.0, 0.3, 0.5, 1.0};
    double exterior_mean = -4.605170185988091;  // log(0.01)

    int s0_interior = 4;
    int s0_exterior = 64;
    /// Mesh level whose cell centers serve as Nystrom nodes for both fields.
    int kl_level = 3;
    /// Caps for (mesh, interior terms, exterior terms).
    std::vector<int> max_levels{5, 5, 3};

    double c1 = 1.596e-8;
    double c2 = 1.426e-6;
    double gamma = 1.664;
    /// Optional per-level mesh tables; empty means cells per level.
    std::vector<double> elements;
    std::vector<double> nodes;

    /// Directory for KL basis files; empty disables caching.
    std::string kl_cache_dir;

    void validate() const;
};

class HeatSliceModel final : public ModelProblem {
public:
    explicit HeatSliceModel(HeatSliceConfig config);

    std::size_t dim() const override { return 3; }
    std::vector<int> max_levels() const override { return config_.max_levels; }
    double evaluate(const MultiIndex& level, const EventKey& event) const override;
    double work(const MultiIndex& level) const override;
    std::string name() const override { return "heat"; }

    /// Draws used by evaluate(): the first s_int interior and s_ext exterior
    /// normals of two independent substreams of `event`.
    std::pair<std::vector<double>, std::vector<double>> draws(const MultiIndex& level,
                                                              const EventKey& event) const;

    /// QoI for explicit KL coefficients; sizes select the truncations.
    double evaluate_with_draws(int mesh_level, std::span<const double> xi_interior,
                               std::span<const double> xi_exterior) const;

    /// Cellwise conductivity (row-major, cell (i, j) at j * n + i).
    Eigen::VectorXd conductivity(int mesh_level, std::span<const double> xi_interior,
                                 std::span<const double> xi_exterior) const;

    /// Cell temperatures for a given conductivity. Throws std::runtime_error
    /// if the factorization fails or the residual exceeds 1e-10 relative.
    Eigen::VectorXd solve_temperature(int mesh_level, const Eigen::VectorXd& k) const;

    /// Temperature at (0, 1/2), a grid vertex on every level, from the
    /// boundary-face values of the two adjacent cells.
    double qoi(int mesh_level, const Eigen::VectorXd& temperature, const Eigen::VectorXd& k) const;

    int cells_per_side(int mesh_level) const { return config_.base_cells << mesh_level; }
    int conductor_columns(int mesh_level) const { return 2 * cells_per_side(mesh_level) / 3; }
    /// First column whose top and bottom faces carry t_ext.
    int dirichlet_column(int mesh_level) const;
    std::size_t interior_terms(int level) const;
    std::size_t exterior_terms(int level) const;

    const KLBasis& interior_basis() const noexcept { return interior_.basis; }
    const KLBasis& exterior_basis() const noexcept { return exterior_.basis; }
    const CostModel& cost_model() const noexcept { return cost_; }
    const HeatSliceConfig& config() const noexcept { return config_; }

private:
    struct Field {
        KLBasis basis;
        double mean = 0.0;
        int columns_kl = 0;             ///< subgrid width at the KL level
        Eigen::MatrixXd scaled_modes;   ///< f_r sqrt(theta_r) at KL-level cells
        std::vector<Eigen::MatrixXd> coarse_modes;  ///< cell averages for levels below kl_level
    };

    Field build_field(const MaternParams& params, double mean, int first_column, int columns,
                      std::size_t rank) const;
    /// Gaussian field on the subgrid of `columns` x n cells at `mesh_level`.
    Eigen::VectorXd field_values(const Field& field, int mesh_level, int columns,
                                 std::span<const double> xi) const;
    void check(const MultiIndex& level) const;

    HeatSliceConfig config_;
    CostModel cost_;
    Field interior_;
    Field exterior_;
};

}  // namespace mimc
