// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "mimc/gaussian_field.hpp"
#include "mimc/kl_cache.hpp"
#include "mimc/random_stream.hpp"
#include "oracles.hpp"

using mimc::KLBasis;
using mimc::MaternParams;
using mimc_test::bessel_k_oracle;
using mimc_test::exponential_kernel_eigenvalues;

namespace {

struct Grid1d {
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;
};

Grid1d midpoint_grid(int m) {
    Grid1d g{Eigen::MatrixXd(m, 1), Eigen::VectorXd::Constant(m, 1.0 / m)};
    for (int i = 0; i < m; ++i) g.points(i, 0) = (i + 0.5) / m;
    return g;
}

}  // namespace

TEST(Bessel, ClosedFormHalfOrder) {
    EXPECT_NEAR(mimc::bessel_k(0.5, 1.0), 0.461068504447894, 1e-14);
    EXPECT_NEAR(mimc::bessel_k(0.5, 2.0), 0.119937771968061, 1e-14);
}

TEST(Bessel, MatchesIntegralOracleOnGrid) {
    for (double nu : {0.5, 1.0, 1.5, 2.5}) {
        for (int i = 0; i <= 60; ++i) {
            const double z = 1e-6 * std::pow(50.0 / 1e-6, i / 60.0);
            const double want = bessel_k_oracle(nu, z);
            const double got = mimc::bessel_k(nu, z);
            EXPECT_LE(std::abs(got - want), 1e-10 * want) << "nu=" << nu << " z=" << z;
            EXPECT_NEAR(got, boost::math::cyl_bessel_k(nu, z), 1e-10 * want);
        }
    }
    EXPECT_NEAR(mimc::bessel_k(1.0, 1.0), bessel_k_oracle(1.0, 1.0), 1e-14);
    EXPECT_NEAR(mimc::bessel_k(1.0, 1.0), 0.601907230197235, 1e-13);
}

TEST(Bessel, NonIntegerOrders) {
    for (double nu : {0.3, 0.75, 3.7}) {
        for (double z : {1e-3, 0.2, 1.0, 7.5, 30.0}) {
            const double want = bessel_k_oracle(nu, z);
            EXPECT_LE(std::abs(mimc::bessel_k(nu, z) - want), 1e-10 * want) << nu << " " << z;
        }
    }
}

TEST(Bessel, DomainErrors) {
    EXPECT_THROW(mimc::bessel_k(1.0, 0.0), std::domain_error);
    EXPECT_THROW(mimc::bessel_k(1.0, -1.0), std::domain_error);
    EXPECT_THROW(mimc::bessel_k(-0.5, 1.0), std::domain_error);
}

TEST(Matern, ExponentialCase) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ur(0.0, 5.0), ul(0.05, 3.0), us(0.01, 4.0);
    for (int i = 0; i < 10000; ++i) {
        const MaternParams p{us(rng), ul(rng), 0.5, 2.0};
        const double r = ur(rng);
        ASSERT_NEAR(mimc::matern_from_distance(p, r), p.variance * std::exp(-r / p.correlation_length), 1e-12);
    }
}

TEST(Matern, HalfIntegerClosedForms) {
    for (double r : {0.01, 0.3, 1.0, 2.7}) {
        const double s3 = std::sqrt(3.0) * r / 0.8;
        EXPECT_NEAR(mimc::matern_from_distance({2.0, 0.8, 1.5, 2.0}, r), 2.0 * (1 + s3) * std::exp(-s3), 1e-12);
        const double s5 = std::sqrt(5.0) * r / 0.8;
        EXPECT_NEAR(mimc::matern_from_distance({2.0, 0.8, 2.5, 2.0}, r),
                    2.0 * (1 + s5 + s5 * s5 / 3.0) * std::exp(-s5), 1e-12);
    }
}

TEST(Matern, InteriorFieldValueAtUnitDistance) {
    // nu = 1: C(r) = sigma^2 z K_1(z), z = sqrt(2) r / lambda.
    const double z = std::sqrt(2.0);
    const std::vector<double> x{0.0, 0.0}, y{0.5, 0.5};
    const double got = mimc::matern_cov({0.1, 1.0, 1.0, 1.0}, x, y);
    EXPECT_NEAR(got, 0.1 * z * bessel_k_oracle(1.0, z), 1e-14);
}

TEST(Matern, BasicProperties) {
    const MaternParams p{0.7, 0.4, 1.0, 1.0};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> x{u(rng), u(rng)}, y{u(rng), u(rng)};
        EXPECT_EQ(mimc::matern_cov(p, x, y), mimc::matern_cov(p, y, x));
        const double c = mimc::matern_cov(p, x, y);
        EXPECT_GT(c, 0.0);
        EXPECT_LE(c, p.variance);
        EXPECT_EQ(mimc::matern_cov(p, x, x), p.variance);
    }
}

TEST(Matern, Distances) {
    const std::vector<double> x{0, 0}, y{3, 4};
    EXPECT_DOUBLE_EQ(mimc::p_distance(x, y, 1.0), 7.0);
    EXPECT_DOUBLE_EQ(mimc::p_distance(x, y, 2.0), 5.0);
    EXPECT_NEAR(mimc::p_distance(x, y, 3.0), std::cbrt(91.0), 1e-14);
}

TEST(Matern, ParameterValidation) {
    EXPECT_THROW((MaternParams{0.0, 1, 1, 1}.validate()), std::invalid_argument);
    EXPECT_THROW((MaternParams{1, -1, 1, 1}.validate()), std::invalid_argument);
    EXPECT_THROW((MaternParams{1, 1, 0, 1}.validate()), std::invalid_argument);
    EXPECT_THROW((MaternParams{1, 1, 1, 0.5}.validate()), std::invalid_argument);
}

TEST(Nystrom, ExponentialKernelEigenvalues) {
    const auto grid = midpoint_grid(512);
    const KLBasis basis = mimc::nystrom_eigs({1.0, 1.0, 0.5, 2.0}, grid.points, grid.weights, 10);
    const auto exact = exponential_kernel_eigenvalues(1.0, 0.5, 10);
    for (int r = 0; r < 10; ++r) {
        EXPECT_LE(std::abs(basis.eigenvalues[r] - exact[r]), 1e-3 * exact[r]) << "mode " << r;
    }
}

TEST(Nystrom, NormalizationOrderingAndTrace) {
    Eigen::MatrixXd points(120, 2);
    Eigen::VectorXd weights(120);
    for (int i = 0; i < 120; ++i) {
        points(i, 0) = (i % 12 + 0.5) / 12.0;
        points(i, 1) = (i / 12 + 0.5) / 10.0 * 0.5;
        weights[i] = (1.0 / 12.0) * (0.05);
    }
    const MaternParams p{1.3, 0.3, 0.5, 1.0};
    const KLBasis b = mimc::nystrom_eigs(p, points, weights, 120, 0.25);
    EXPECT_NEAR(b.eigenvalues.sum(), 1.3 * 0.5, 1e-6 * 0.65);
    for (Eigen::Index r = 0; r < 120; ++r) {
        if (r > 0) EXPECT_GE(b.eigenvalues[r - 1], b.eigenvalues[r]);
        EXPECT_GE(b.eigenvalues[r], 0.0);
        const Eigen::VectorXd fr = b.eigenfunctions.col(r);
        EXPECT_NEAR((fr.array().square() * weights.array()).sum(), 1.0, 1e-10);
        for (Eigen::Index q = 0; q < r && r < 20; ++q) {
            EXPECT_LE(std::abs((fr.array() * b.eigenfunctions.col(q).array() * weights.array()).sum()), 1e-8);
        }
    }
    EXPECT_TRUE((b.mean.array() == 0.25).all());
}

TEST(Nystrom, ConstantKernelIsRankOne) {
    const auto grid = midpoint_grid(40);
    const Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(40, 40, 2.0);
    const KLBasis b = mimc::nystrom_eigs_from_matrix(cov, grid.points, grid.weights, Eigen::VectorXd::Zero(40), 5);
    EXPECT_NEAR(b.eigenvalues[0], 2.0, 1e-12);
    for (int r = 1; r < 5; ++r) EXPECT_NEAR(b.eigenvalues[r], 0.0, 1e-12);
}

TEST(Nystrom, RejectsIndefiniteMatricesAndBadInput) {
    const auto grid = midpoint_grid(2);
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(mimc::nystrom_eigs_from_matrix(cov, grid.points, grid.weights, Eigen::VectorXd::Zero(2), 2),
                 std::runtime_error);
    EXPECT_NO_THROW(mimc::nystrom_eigs_from_matrix(cov, grid.points, grid.weights, Eigen::VectorXd::Zero(2), 1));
    EXPECT_THROW(mimc::nystrom_eigs_from_matrix(cov, grid.points, grid.weights, Eigen::VectorXd::Zero(2), 3),
                 std::invalid_argument);
    EXPECT_THROW(mimc::nystrom_eigs_from_matrix(cov, grid.points, -grid.weights, Eigen::VectorXd::Zero(2), 1),
                 std::invalid_argument);
}

TEST(Nystrom, TruncationErrorDecreases) {
    const auto grid = midpoint_grid(100);
    const MaternParams p{1.0, 0.2, 1.0, 2.0};
    const KLBasis b = mimc::nystrom_eigs(p, grid.points, grid.weights, 100);
    const Eigen::MatrixXd cov = mimc::covariance_matrix(p, grid.points);
    double previous = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 40; s += 4) {
        const Eigen::MatrixXd f = b.eigenfunctions.leftCols(s);
        const Eigen::MatrixXd approx = f * b.eigenvalues.head(s).asDiagonal() * f.transpose();
        const double err = (cov - approx).norm();
        EXPECT_LT(err, previous);
        previous = err;
    }
}

TEST(Nystrom, ExtensionReproducesNodes) {
    const auto grid = midpoint_grid(60);
    const MaternParams p{1.0, 0.5, 1.0, 2.0};
    const KLBasis b = mimc::nystrom_eigs(p, grid.points, grid.weights, 8, 1.5);
    const KLBasis e = mimc::nystrom_extend(b, p, grid.points, 1.5);
    EXPECT_LE((e.eigenfunctions - b.eigenfunctions).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(e.weights.array().isNaN().all());
    EXPECT_TRUE((e.mean.array() == 1.5).all());
}

TEST(KLSample, ZeroSingleAndNested) {
    const auto grid = midpoint_grid(50);
    const KLBasis b = mimc::nystrom_eigs({1.0, 0.3, 0.5, 2.0}, grid.points, grid.weights, 16, -1.0);
    const std::vector<double> zeros(16, 0.0);
    EXPECT_TRUE((mimc::kl_sample(b, 16, zeros).array() == -1.0).all());
    const std::vector<double> one{1.0};
    const Eigen::VectorXd single = mimc::kl_sample(b, 1, one);
    EXPECT_LE((single - (b.mean + std::sqrt(b.eigenvalues[0]) * b.eigenfunctions.col(0))).cwiseAbs().maxCoeff(),
              1e-14);

    std::vector<double> xi(16);
    mimc::CounterStream(mimc::shared_event_key(5, 0)).normals(xi);
    const Eigen::VectorXd full = mimc::kl_sample(b, 16, xi);
    const Eigen::VectorXd half = mimc::kl_sample(b, 8, std::span<const double>(xi).first(8));
    Eigen::VectorXd tail = Eigen::VectorXd::Zero(50);
    for (int r = 8; r < 16; ++r) tail += std::sqrt(b.eigenvalues[r]) * b.eigenfunctions.col(r) * xi[r];
    EXPECT_LE((full - half - tail).cwiseAbs().maxCoeff(), 1e-13);

    EXPECT_THROW(mimc::kl_sample(b, 17, std::vector<double>(17)), std::invalid_argument);
    EXPECT_THROW(mimc::kl_sample(b, 4, std::vector<double>(3)), std::invalid_argument);
}

TEST(KLSample, EmpiricalVarianceMatchesSpectrum) {
    const auto grid = midpoint_grid(24);
    const KLBasis b = mimc::nystrom_eigs({0.8, 0.4, 1.0, 2.0}, grid.points, grid.weights, 24);
    const int node = 5;
    double expected = 0.0;
    for (int r = 0; r < 24; ++r) expected += b.eigenvalues[r] * b.eigenfunctions(node, r) * b.eigenfunctions(node, r);
    const int n = 100000;
    std::vector<double> xi(24);
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        mimc::CounterStream(mimc::shared_event_key(17, i)).normals(xi);
        const double z = mimc::kl_sample(b, 24, xi)[node];
        s += z;
        s2 += z * z;
    }
    const double var = (s2 - s * s / n) / (n - 1);
    EXPECT_NEAR(var, expected, 3.0 * expected * std::sqrt(2.0 / (n - 1)));
    EXPECT_NEAR(expected, 0.8, 0.01);
}

TEST(KLCache, RoundTripAndKeyMismatch) {
    const auto grid = midpoint_grid(30);
    const MaternParams p{1.0, 0.3, 1.0, 2.0};
    const KLBasis b = mimc::nystrom_eigs(p, grid.points, grid.weights, 6, 0.5);
    const auto dir = std::filesystem::temp_directory_path() / "mimc_kl_cache_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto key = mimc::kl_basis_key(p, 0.5, grid.points, grid.weights, 6);
    EXPECT_NE(key, mimc::kl_basis_key(p, 0.5, grid.points, grid.weights, 7));
    EXPECT_NE(key, mimc::kl_basis_key({1.0, 0.31, 1.0, 2.0}, 0.5, grid.points, grid.weights, 6));
    mimc::save_kl_basis(dir / "b.bin", b, key);
    const auto back = mimc::load_kl_basis(dir / "b.bin", key);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->eigenvalues, b.eigenvalues);
    EXPECT_EQ(back->eigenfunctions, b.eigenfunctions);
    EXPECT_EQ(back->points, b.points);
    EXPECT_EQ(back->mean, b.mean);
    EXPECT_FALSE(mimc::load_kl_basis(dir / "b.bin", key + 1).has_value());
    EXPECT_FALSE(mimc::load_kl_basis(dir / "missing.bin", key).has_value());

    int assembled = 0;
    auto assemble = [&] {
        ++assembled;
        return mimc::covariance_matrix(p, grid.points);
    };
    const KLBasis c1 = mimc::cached_kl_basis(dir / "sub", p, 0.5, grid.points, grid.weights, 6, assemble);
    const KLBasis c2 = mimc::cached_kl_basis(dir / "sub", p, 0.5, grid.points, grid.weights, 6, assemble);
    EXPECT_EQ(assembled, 1);
    EXPECT_EQ(c1.eigenfunctions, c2.eigenfunctions);
    EXPECT_EQ(c1.eigenvalues, b.eigenvalues);
    std::filesystem::remove_all(dir);
}
