// SPDX-License-Identifier: Apache-2.0
#include "mimc/gaussian_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimc {

void MaternParams::validate() const {
    if (!(variance > 0.0)) throw std::invalid_argument("MaternParams: variance must be positive");
    if (!(correlation_length > 0.0)) {
        throw std::invalid_argument("MaternParams: correlation_length must be positive");
    }
    if (!(smoothness > 0.0)) throw std::invalid_argument("MaternParams: smoothness must be positive");
    if (!(norm_p >= 1.0)) throw std::invalid_argument("MaternParams: norm_p must be at least 1");
}

double p_distance(std::span<const double> x, std::span<const double> y, double p) {
    if (x.size() != y.size()) throw std::invalid_argument("p_distance: dimension mismatch");
    if (p == 1.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
        return s;
    }
    if (p == 2.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return std::sqrt(s);
    }
    if (std::isinf(p)) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s = std::max(s, std::abs(x[i] - y[i]));
        return s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] - y[i]), p);
    return std::pow(s, 1.0 / p);
}

double matern_from_distance(const MaternParams& params, double r) {
    if (r <= 0.0) return params.variance;
    const double nu = params.smoothness;
    const double z = std::sqrt(2.0 * nu) * r / params.correlation_length;
    const double k = bessel_k(nu, z);
    if (k == 0.0) return 0.0;
    // Combine the z^nu prefactor in log space to avoid overflow for small z.
    const double log_prefactor = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(z);
    return params.variance * std::exp(log_prefactor) * k;
}

double matern_cov(const MaternParams& params, std::span<const double> x,
                  std::span<const double> y) {
    return matern_from_distance(params, p_distance(x, y, params.norm_p));
}

Eigen::MatrixXd covariance_matrix(const MaternParams& params, const Eigen::MatrixXd& points) {
    params.validate();
    const Eigen::Index m = points.rows();
    const Eigen::Index dim = points.cols();
    Eigen::MatrixXd cov(m, m);
    std::vector<double> xi(dim), xj(dim);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < dim; ++k) xi[k] = points(i, k);
        cov(i, i) = params.variance;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            for (Eigen::Index k = 0; k < dim; ++k) xj[k] = points(j, k);
            const double c = matern_cov(params, xi, xj);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    }
    return cov;
}

KLBasis nystrom_eigs_from_matrix(const Eigen::MatrixXd& covariance, const Eigen::MatrixXd& points,
                                 const Eigen::VectorXd& weights, const Eigen::VectorXd& mean,
                                 std::size_t rank) {
    const Eigen::Index m = weights.size();
    if (covariance.rows() != m || covariance.cols() != m || points.rows() != m ||
        mean.size() != m) {
        throw std::invalid_argument("nystrom_eigs: inconsistent sizes");
    }
    if (rank == 0 || rank > static_cast<std::size_t>(m)) {
        throw std::invalid_argument("nystrom_eigs: rank must be in [1, " + std::to_string(m) + "]");
    }
    if ((weights.array() <= 0.0).any()) {
        throw std::invalid_argument("nystrom_eigs: weights must be positive");
    }

    // Similarity transform with sqrt(W) gives a symmetric matrix with the same
    // spectrum as C W.
    const Eigen::VectorXd sw = weights.cwiseSqrt();
    Eigen::MatrixXd a = sw.asDiagonal() * covariance * sw.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw std::runtime_error("nystrom_eigs: eigensolver failed");
    const Eigen::VectorXd& values = solver.eigenvalues();
    const Eigen::MatrixXd& vectors = solver.eigenvectors();

    KLBasis basis;
    basis.points = points;
    basis.weights = weights;
    basis.mean = mean;
    basis.eigenvalues.resize(static_cast<Eigen::Index>(rank));
    basis.eigenfunctions.resize(m, static_cast<Eigen::Index>(rank));
    for (std::size_t r = 0; r < rank; ++r) {
        // Eigenvalues come back in ascending order.
        const Eigen::Index src = m - 1 - static_cast<Eigen::Index>(r);
        const Eigen::Index dst = static_cast<Eigen::Index>(r);
        double theta = values(src);
        if (theta < 0.0) {
            if (theta < -1e-12) {
                throw std::runtime_error("nystrom_eigs: eigenvalue " + std::to_string(theta) +
                                         " is negative; covariance is not positive semidefinite");
            }
            theta = 0.0;
        }
        basis.eigenvalues(dst) = theta;
        Eigen::VectorXd f = vectors.col(src).cwiseQuotient(sw);
        // Deterministic sign: the largest-magnitude entry is positive.
        Eigen::Index arg = 0;
        f.cwiseAbs().maxCoeff(&arg);
        if (f(arg) < 0.0) f = -f;
        basis.eigenfunctions.col(dst) = f;
    }
    return basis;
}

KLBasis nystrom_eigs(const MaternParams& params, const Eigen::MatrixXd& points,
                     const Eigen::VectorXd& weights, std::size_t rank, double mean_value) {
    const Eigen::MatrixXd cov = covariance_matrix(params, points);
    return nystrom_eigs_from_matrix(cov, points, weights,
                                    Eigen::VectorXd::Constant(points.rows(), mean_value), rank);
}

Eigen::VectorXd kl_sample(const KLBasis& basis, std::size_t s, std::span<const double> xi) {
    if (s > basis.rank()) {
        throw std::invalid_argument("kl_sample: truncation " + std::to_string(s) +
                                    " exceeds stored rank " + std::to_string(basis.rank()));
    }
    if (xi.size() != s) throw std::invalid_argument("kl_sample: need exactly s normal draws");
    const Eigen::Index n = static_cast<Eigen::Index>(s);
    const Eigen::Map<const Eigen::VectorXd> xi_vec(xi.data(), n);
    const Eigen::VectorXd scaled = basis.eigenvalues.head(n).cwiseSqrt().cwiseProduct(xi_vec);
    return basis.mean + basis.eigenfunctions.leftCols(n) * scaled;
}

KLBasis nystrom_extend(const KLBasis& basis, const MaternParams& params,
                       const Eigen::MatrixXd& eval_points, double mean_value) {
    if (eval_points.cols() != basis.points.cols()) {
        throw std::invalid_argument("nystrom_extend: point dimension mismatch");
    }
    const Eigen::Index m = eval_points.rows();
    const Eigen::Index nodes = basis.points.rows();
    const Eigen::Index dim = basis.points.cols();
    Eigen::MatrixXd cross(m, nodes);
    std::vector<double> x(dim), y(dim);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < dim; ++k) x[k] = eval_points(i, k);
        for (Eigen::Index j = 0; j < nodes; ++j) {
            for (Eigen::Index k = 0; k < dim; ++k) y[k] = basis.points(j, k);
            cross(i, j) = matern_cov(params, x, y) * basis.weights(j);
        }
    }
    KLBasis out;
    out.points = eval_points;
    out.weights = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
    out.eigenvalues = basis.eigenvalues;
    out.mean = Eigen::VectorXd::Constant(m, mean_value);
    out.eigenfunctions = cross * basis.eigenfunctions;
    for (Eigen::Index r = 0; r < out.eigenvalues.size(); ++r) {
        const double theta = out.eigenvalues(r);
        if (theta > 0.0) {
            out.eigenfunctions.col(r) /= theta;
        } else {
            out.eigenfunctions.col(r).setZero();
        }
    }
    return out;
}

}  // namespace mimc
