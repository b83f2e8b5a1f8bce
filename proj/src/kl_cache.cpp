// SPDX-License-Identifier: Apache-2.0
#include "mimc/kl_cache.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mimc {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'I', 'M', 'C', 'K', 'L', 'B', '1'};

class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001B3ULL;
        }
    }
    void value(double x) { bytes(&x, sizeof x); }
    void value(std::uint64_t x) { bytes(&x, sizeof x); }
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

bool read_u64(std::istream& is, std::uint64_t& v) {
    return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof v));
}

void write_doubles(std::ostream& os, const double* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

bool read_doubles(std::istream& is, double* p, std::size_t n) {
    return static_cast<bool>(
        is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double))));
}

}  // namespace

std::uint64_t kl_basis_key(const MaternParams& params, double mean_value,
                           const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                           std::size_t rank) {
    Fnv1a h;
    h.value(params.variance);
    h.value(params.correlation_length);
    h.value(params.smoothness);
    h.value(params.norm_p);
    h.value(mean_value);
    h.value(static_cast<std::uint64_t>(points.rows()));
    h.value(static_cast<std::uint64_t>(points.cols()));
    for (Eigen::Index i = 0; i < points.size(); ++i) h.value(points.data()[i]);
    for (Eigen::Index i = 0; i < weights.size(); ++i) h.value(weights(i));
    h.value(static_cast<std::uint64_t>(rank));
    return h.digest();
}

void save_kl_basis(const std::filesystem::path& path, const KLBasis& basis, std::uint64_t key) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("save_kl_basis: cannot open " + tmp.string());
        os.write(kMagic.data(), kMagic.size());
        const std::size_t m = basis.num_nodes();
        const std::size_t dim = static_cast<std::size_t>(basis.points.cols());
        const std::size_t r = basis.rank();
        write_u64(os, key);
        write_u64(os, m);
        write_u64(os, dim);
        write_u64(os, r);
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts = basis.points;
        write_doubles(os, pts.data(), m * dim);
        write_doubles(os, basis.weights.data(), m);
        write_doubles(os, basis.mean.data(), m);
        write_doubles(os, basis.eigenvalues.data(), r);
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f =
            basis.eigenfunctions;
        write_doubles(os, f.data(), m * r);
        if (!os) throw std::runtime_error("save_kl_basis: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::optional<KLBasis> load_kl_basis(const std::filesystem::path& path, std::uint64_t key) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) return std::nullopt;
    std::uint64_t stored = 0, m = 0, dim = 0, r = 0;
    if (!read_u64(is, stored) || stored != key) return std::nullopt;
    if (!read_u64(is, m) || !read_u64(is, dim) || !read_u64(is, r)) return std::nullopt;
    if (m == 0 || r == 0 || r > m || dim == 0 || dim > 16) return std::nullopt;

    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto em = static_cast<Eigen::Index>(m);
    const auto er = static_cast<Eigen::Index>(r);
    RowMatrix pts(em, static_cast<Eigen::Index>(dim));
    KLBasis basis;
    basis.weights.resize(em);
    basis.mean.resize(em);
    basis.eigenvalues.resize(er);
    RowMatrix f(em, er);
    if (!read_doubles(is, pts.data(), m * dim) || !read_doubles(is, basis.weights.data(), m) ||
        !read_doubles(is, basis.mean.data(), m) || !read_doubles(is, basis.eigenvalues.data(), r) ||
        !read_doubles(is, f.data(), m * r)) {
        return std::nullopt;
    }
    basis.points = pts;
    basis.eigenfunctions = f;
    return basis;
}

}  // namespace mimc
