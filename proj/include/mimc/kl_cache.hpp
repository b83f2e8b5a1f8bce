// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mimc/gaussian_field.hpp"

namespace mimc {

/// FNV-1a hash of the covariance parameters, mean, nodes, weights and rank.
std::uint64_t kl_basis_key(const MaternParams& params, double mean_value,
                           const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                           std::size_t rank);

/// Binary layout (native endianness):
///   char[8] "MIMCKLB1", uint64 key, uint64 M, uint64 dim, uint64 R,
///   then row-major doubles: points (M x dim), weights (M), mean (M),
///   eigenvalues (R), eigenfunctions (M x R).
void save_kl_basis(const std::filesystem::path& path, const KLBasis& basis, std::uint64_t key);

/// Returns std::nullopt if the file is missing, malformed, or stores a
/// different key.
std::optional<KLBasis> load_kl_basis(const std::filesystem::path& path, std::uint64_t key);

/// Solve with a covariance supplied by `assemble`, reading from and writing to
/// `cache_dir` when it is non-empty.
template <typename Assemble>
KLBasis cached_kl_basis(const std::filesystem::path& cache_dir, const MaternParams& params,
                        double mean_value, const Eigen::MatrixXd& points,
                        const Eigen::VectorXd& weights, std::size_t rank, Assemble&& assemble) {
    const std::uint64_t key = kl_basis_key(params, mean_value, points, weights, rank);
    std::filesystem::path file;
    if (!cache_dir.empty()) {
        file = cache_dir / ("kl_" + std::to_string(key) + ".bin");
        if (auto hit = load_kl_basis(file, key)) return std::move(*hit);
    }
    const Eigen::MatrixXd cov = assemble();
    KLBasis basis = nystrom_eigs_from_matrix(
        cov, points, weights, Eigen::VectorXd::Constant(points.rows(), mean_value), rank);
    if (!file.empty()) {
        std::filesystem::create_directories(cache_dir);
        save_kl_basis(file, basis, key);
    }
    return basis;
}

}  // namespace mimc
