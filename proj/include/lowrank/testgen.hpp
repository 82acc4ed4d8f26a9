#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "lowrank/matop.hpp"
#include "lowrank/rangefinder.hpp"

/**
 * @file testgen.hpp
 * @brief Test matrices with prescribed singular values.
 *
 * Five of the spectra put σ₁ = 1 and σ_{k+1} = 1e-5, so the best rank-k
 * spectral-norm error is known exactly; the sixth uses absolute values of
 * standard Gaussians. Singular vectors come from orthonormalized Gaussian
 * blocks. Also provides the diagonal matrices on which Lanczos bidiagonalization
 * without reorthogonalization returns spurious singular values, and a
 * sign-flipped Gaussian matrix with two dominant singular values.
 */

namespace lowrank {

enum class Distribution {
    inv_j = 1,      // σⱼ = 1/j
    step,           // 1, then 2e-5 through k, then 1e-5·(k+1)/j
    exp_decay,      // 10^(-5(j-1)/(k-1)) through k, then 1e-5·(k+1)/j
    exp_decay_cut,  // 10^(-5(j-1)/(k-1)) through k, 1e-5 at k+1, then 0
    linear,         // 1e-5 + (1-1e-5)(k-j)/(k-1) through k, then 1e-5·sqrt((k+1)/j)
    gaussian_abs,   // |N(0,1)|, sorted
};

/// Parses "1".."6" or the enumerator names ("inv-j", "step", ...).
inline std::optional<Distribution> parse_distribution(const std::string& text) {
    static const char* const names[] = {"inv-j", "step", "exp-decay", "exp-decay-cut", "linear", "gaussian-abs"};
    for (int i = 0; i < 6; ++i) {
        if (text == std::to_string(i + 1) || text == names[i]) {
            return static_cast<Distribution>(i + 1);
        }
    }
    return std::nullopt;
}

struct SpectrumSpec {
    Distribution dist = Distribution::inv_j;
    Index m = 0;
    Index n = 0;
    /// Head length; ignored by inv_j and gaussian_abs.
    Index k = 0;
};

/// σ₁..σ_min(m,n), nonincreasing. `seed` only matters for gaussian_abs.
inline Vector spectrum(const SpectrumSpec& spec, std::uint64_t seed = 0) {
    const Index p = std::min(spec.m, spec.n);
    if (p < 1) {
        throw ConfigError("spectrum: dimensions must be positive");
    }
    const Index k = spec.k;
    const bool needs_k = spec.dist != Distribution::inv_j && spec.dist != Distribution::gaussian_abs;
    if (needs_k && (k < 1 || k >= p)) {
        throw ConfigError("spectrum: k must satisfy 1 <= k < min(m, n)");
    }
    const bool needs_k2 = spec.dist == Distribution::exp_decay || spec.dist == Distribution::exp_decay_cut ||
                          spec.dist == Distribution::linear;
    if (needs_k2 && k < 2) {
        throw ConfigError("spectrum: this distribution needs k >= 2");
    }

    Vector sigma(p);
    const double kd = static_cast<double>(k);
    for (Index idx = 0; idx < p; ++idx) {
        const double j = static_cast<double>(idx + 1);
        const bool head = idx + 1 <= k;
        double v = 0.0;
        switch (spec.dist) {
        case Distribution::inv_j:
            v = 1.0 / j;
            break;
        case Distribution::step:
            v = idx == 0 ? 1.0 : (head ? 2e-5 : 1e-5 * (kd + 1.0) / j);
            break;
        case Distribution::exp_decay:
            v = head ? std::pow(10.0, -5.0 * (j - 1.0) / (kd - 1.0)) : 1e-5 * (kd + 1.0) / j;
            break;
        case Distribution::exp_decay_cut:
            v = head ? std::pow(10.0, -5.0 * (j - 1.0) / (kd - 1.0)) : (idx == k ? 1e-5 : 0.0);
            break;
        case Distribution::linear:
            v = head ? 1e-5 + (1.0 - 1e-5) * (kd - j) / (kd - 1.0) : 1e-5 * std::sqrt((kd + 1.0) / j);
            break;
        case Distribution::gaussian_abs:
            break;
        }
        sigma[idx] = v;
    }
    if (spec.dist == Distribution::gaussian_abs) {
        std::mt19937_64 gen(detail::mix_seed(seed, 7));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index i = 0; i < p; ++i) {
            sigma[i] = std::abs(normal(gen));
        }
        std::sort(sigma.data(), sigma.data() + p, std::greater<>());
    }
    return sigma;
}

/// dim x cols block with orthonormal columns: a Gaussian block orthonormalized
/// by QR, with signs fixed so that R has a positive diagonal (Haar measure).
inline Matrix random_orthonormal(Index dim, Index cols, std::uint64_t seed) {
    if (cols < 1 || dim < cols) {
        throw ConfigError("random_orthonormal: need 1 <= cols <= dim");
    }
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(dim, cols);
    double* data = g.data();
    for (Index i = 0, total = dim * cols; i < total; ++i) {
        data[i] = normal(gen);
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = Matrix::Identity(dim, cols);
    q.applyOnTheLeft(qr.householderQ());
    for (Index j = 0; j < cols; ++j) {
        if (qr.matrixQR()(j, j) < 0.0) {
            q.col(j) = -q.col(j);
        }
    }
    return q;
}

/// A = U·diag(σ)·Vᴴ together with its exact SVD.
struct SyntheticMatrix {
    Matrix a;
    Matrix u;
    Vector sigma;
    Matrix v;
};

inline SyntheticMatrix synth(const SpectrumSpec& spec, std::uint64_t seed) {
    SyntheticMatrix out;
    out.sigma = spectrum(spec, seed);
    const Index p = out.sigma.size();
    out.u = random_orthonormal(spec.m, p, detail::mix_seed(seed, 1));
    out.v = random_orthonormal(spec.n, p, detail::mix_seed(seed, 2));
    out.a.noalias() = out.u * out.sigma.asDiagonal() * out.v.transpose();
    return out;
}

/// Nonnegative-definite variant A = U·diag(σ)·Uᴴ (square specs only).
inline SyntheticMatrix synth_psd(const SpectrumSpec& spec, std::uint64_t seed) {
    if (spec.m != spec.n) {
        throw ConfigError("synth_psd: matrix must be square");
    }
    SyntheticMatrix out;
    out.sigma = spectrum(spec, seed);
    out.u = random_orthonormal(spec.m, spec.m, detail::mix_seed(seed, 1));
    out.v = out.u;
    out.a.noalias() = out.u * out.sigma.asDiagonal() * out.u.transpose();
    out.a = (0.5 * (out.a + out.a.transpose())).eval();
    return out;
}

/// n x n diagonal: three 1s, seventeen .999s, zeros after.
inline SparseMatrix propack_hard_diag(Index n) {
    if (n < 20) {
        throw ConfigError("propack_hard_diag: n must be at least 20");
    }
    SparseMatrix::Storage d(n, n);
    d.reserve(Eigen::VectorXi::Constant(n, 1));
    for (Index i = 0; i < 20; ++i) {
        d.insert(i, i) = i < 3 ? 1.0 : 0.999;
    }
    return SparseMatrix(std::move(d));
}

/// n x n matrix of i.i.d. N(sqrt(30/n), 1) entries whose sign is flipped
/// where i·j is odd (1-based indices).
inline Matrix sign_flipped_gaussian(Index n, std::uint64_t seed) {
    if (n < 2) {
        throw ConfigError("sign_flipped_gaussian: n must be at least 2");
    }
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(std::sqrt(30.0 / static_cast<double>(n)), 1.0);
    Matrix a(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const double v = normal(gen);
            const bool flip = ((i + 1) * (j + 1)) % 2 == 1;
            a(i, j) = flip ? -v : v;
        }
    }
    return a;
}

} // namespace lowrank
