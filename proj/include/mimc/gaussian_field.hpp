// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace mimc {

/// Modified Bessel function of the second kind. Throws std::domain_error for
/// z <= 0 or nu < 0.
double bessel_k(double nu, double z);

/// Matern covariance parameters.
struct MaternParams {
    double variance = 1.0;            ///< marginal variance sigma^2
    double correlation_length = 1.0;  ///< lambda
    double smoothness = 0.5;          ///< nu
    double norm_p = 2.0;              ///< order of the distance norm, p >= 1

    /// Throws std::invalid_argument when a parameter is out of range.
    void validate() const;
};

/// ||x - y||_p.
double p_distance(std::span<const double> x, std::span<const double> y, double p);

/// Matern covariance as a function of the distance r >= 0.
double matern_from_distance(const MaternParams& params, double r);

/// C(x, y) with r = ||x - y||_p.
double matern_cov(const MaternParams& params, std::span<const double> x,
                  std::span<const double> y);

/// Truncated Karhunen-Loeve basis on a set of quadrature nodes.
struct KLBasis {
    Eigen::MatrixXd points;          ///< M x dim node coordinates
    Eigen::VectorXd weights;         ///< M quadrature weights
    Eigen::VectorXd eigenvalues;     ///< R eigenvalues, descending, >= 0
    Eigen::MatrixXd eigenfunctions;  ///< M x R, weighted-L2 normalized columns
    Eigen::VectorXd mean;            ///< mean function at the nodes

    std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(weights.size()); }
    std::size_t rank() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// Solve the Nystrom-discretized eigenproblem sum_j w_j C_ij f(x_j) = theta f(x_i)
/// for the R largest eigenpairs of a given symmetric covariance matrix.
/// Throws std::invalid_argument on bad sizes or weights, std::runtime_error if
/// the eigensolver fails or an eigenvalue is below -1e-12.
KLBasis nystrom_eigs_from_matrix(const Eigen::MatrixXd& covariance, const Eigen::MatrixXd& points,
                                 const Eigen::VectorXd& weights, const Eigen::VectorXd& mean,
                                 std::size_t rank);

/// Assemble the Matern covariance on `points` and solve for `rank` eigenpairs.
KLBasis nystrom_eigs(const MaternParams& params, const Eigen::MatrixXd& points,
                     const Eigen::VectorXd& weights, std::size_t rank, double mean_value = 0.0);

Eigen::MatrixXd covariance_matrix(const MaternParams& params, const Eigen::MatrixXd& points);

/// Field values mu + sum_{r < s} sqrt(theta_r) f_r xi_r at the basis nodes.
/// Throws std::invalid_argument if s exceeds the stored rank or xi.size() != s.
Eigen::VectorXd kl_sample(const KLBasis& basis, std::size_t s, std::span<const double> xi);

/// Values at arbitrary points through the Nystrom interpolation formula
/// f_r(x) = theta_r^{-1} sum_j w_j C(x, x_j) f_r(x_j). Modes with theta_r = 0
/// evaluate to zero. `mean_value` is used for the constant mean at the new points;
/// the returned weights are NaN since the new points carry no quadrature.
KLBasis nystrom_extend(const KLBasis& basis, const MaternParams& params,
                       const Eigen::MatrixXd& eval_points, double mean_value);

}  // namespace mimc
