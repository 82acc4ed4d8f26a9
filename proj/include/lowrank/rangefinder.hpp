#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "lowrank/matop.hpp"

/**
 * @file rangefinder.hpp
 * @brief Randomized construction of an orthonormal basis for the approximate
 * range of an operator.
 *
 * The basis comes from applying the operator to a block of uniform [-1, 1]
 * test vectors, followed by `its` power/subspace iterations. Interior
 * iterates are renormalized with the unit-lower-trapezoidal factor of a
 * partially pivoted LU decomposition, which is cheaper than QR and enough to
 * keep the dynamic range under control; only the last iterate is
 * orthonormalized with QR.
 */

namespace lowrank {

/// Parameters of a randomized sketch.
struct SketchConfig {
    /// Target rank.
    Index k = 1;
    /// Sketch width (number of random test vectors). Zero means k + 2.
    Index l = 0;
    /// Number of power/subspace iterations.
    int its = 2;
    std::uint64_t seed = 0;

    Index width() const { return l == 0 ? k + 2 : l; }
};

/// Validates `cfg` against an m x n operator; throws ConfigError.
inline void validate(const SketchConfig& cfg, Index m, Index n) {
    if (cfg.k < 1) {
        throw ConfigError("rank k must be at least 1");
    }
    if (cfg.width() < cfg.k) {
        throw ConfigError("sketch width l must be at least k");
    }
    if (cfg.k > std::min(m, n)) {
        throw ConfigError("rank k = " + std::to_string(cfg.k) + " exceeds min(m, n) = " +
                          std::to_string(std::min(m, n)));
    }
    if (cfg.its < 0) {
        throw ConfigError("iteration count must be nonnegative");
    }
}

/// Orthonormal block Q, m x l.
struct RangeBasis {
    Matrix q;
    /// Set when some renormalization met a (numerically) rank-deficient block.
    bool rank_deficient = false;
};

namespace detail {

/// Independent seed for sub-stream `stream` of `seed`.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// rows x cols block of i.i.d. uniform [-1, 1] entries, filled column by
/// column from a 64-bit Mersenne twister seeded with `seed`.
inline Matrix random_test_block(Index rows, Index cols, std::uint64_t seed) {
    if (rows < 1 || cols < 1) {
        throw ShapeError("random_test_block: dimensions must be positive");
    }
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix out(rows, cols);
    double* data = out.data();
    for (Index i = 0, total = rows * cols; i < total; ++i) {
        data[i] = dist(gen);
    }
    return out;
}

/**
 * Orthonormal basis for the column space of `x` (rows >= cols) via a
 * Householder QR, optionally with column pivoting. Columns beyond the
 * numerical rank are completed to an orthonormal set by the Householder
 * reflectors, and `rank_deficient` is raised.
 */
inline RangeBasis orthonormalize(const Eigen::Ref<const Matrix>& x, bool pivoted = false) {
    const Index m = x.rows();
    const Index l = x.cols();
    if (l < 1 || m < l) {
        throw ShapeError("orthonormalize: block must have at least as many rows as columns");
    }
    RangeBasis out;
    out.q = Matrix::Identity(m, l);

    const double scale = x.colwise().norm().maxCoeff();
    const double tol = static_cast<double>(std::max(m, l)) * std::numeric_limits<double>::epsilon() * scale;
    auto deficient = [&](const auto& r) {
        for (Index j = 0; j < l; ++j) {
            if (std::abs(r(j, j)) <= tol) {
                return true;
            }
        }
        return false;
    };

    if (pivoted) {
        Eigen::ColPivHouseholderQR<Matrix> qr(x);
        out.q.applyOnTheLeft(qr.householderQ());
        out.rank_deficient = deficient(qr.matrixQR());
    } else {
        Eigen::HouseholderQR<Matrix> qr(x);
        out.q.applyOnTheLeft(qr.householderQ());
        out.rank_deficient = deficient(qr.matrixQR());
    }
    return out;
}

/// Lower factor of a partially pivoted LU decomposition.
struct LuFactor {
    /// Pᵀ·L: unit lower trapezoidal up to the row permutation, |entries| <= 1.
    Matrix lower;
    /// Set when a pivot column was exactly zero.
    bool singular = false;
};

/**
 * Partially pivoted LU of an m x l block (m >= l), returning the permuted
 * unit-lower-trapezoidal factor, as MATLAB's two-output `lu` does. The
 * column space is preserved whenever `x` has full column rank. A zero pivot
 * column leaves its multipliers at zero (the column of L is a unit vector).
 */
inline LuFactor lu_renormalize(const Eigen::Ref<const Matrix>& x) {
    const Index m = x.rows();
    const Index l = x.cols();
    if (l < 1 || m < l) {
        throw ShapeError("lu_renormalize: block must have at least as many rows as columns");
    }
    Matrix work = x;
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});
    LuFactor out;

    for (Index j = 0; j < l; ++j) {
        Index p = 0;
        const double pivot_abs = work.col(j).tail(m - j).cwiseAbs().maxCoeff(&p);
        p += j;
        if (p != j) {
            work.row(j).swap(work.row(p));
            std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(p)]);
        }
        const Index below = m - j - 1;
        if (pivot_abs == 0.0) {
            out.singular = true;
            continue;
        }
        if (below == 0) {
            continue;
        }
        work.col(j).tail(below) /= work(j, j);
        const Index right = l - j - 1;
        if (right > 0) {
            work.bottomRightCorner(below, right).noalias() -=
                work.col(j).tail(below) * work.row(j).tail(right);
        }
    }

    out.lower.resize(m, l);
    for (Index j = 0; j < l; ++j) {
        for (Index i = 0; i < m; ++i) {
            const double v = i > j ? work(i, j) : (i == j ? 1.0 : 0.0);
            out.lower(perm[static_cast<std::size_t>(i)], j) = v;
        }
    }
    return out;
}

enum class RangeMode {
    /// Iterate with A·Aᴴ; any shape.
    plain,
    /// Iterate with A alone; A must be square and self-adjoint.
    self_adjoint,
};

struct RangeOptions {
    /// Use column pivoting in the final QR.
    bool pivoted_qr = false;
};

/**
 * Orthonormal m x l basis Q with A ≈ Q·Qᴴ·A.
 *
 * The first product A·Ω is LU-renormalized when its > 0. Each iteration
 * applies A (self-adjoint mode) or Aᴴ then A (plain mode, with an LU
 * renormalization between the two halves). Every iterate but the last is
 * LU-renormalized; the last is orthonormalized by QR.
 *
 * When l exceeds min(m, n) the width is clamped to min(m, n), at which point
 * the sketch spans the entire range.
 */
inline RangeBasis find_range(const LinearOperator& op, const SketchConfig& cfg, RangeMode mode,
                             const RangeOptions& options = {}) {
    const Index m = op.rows();
    const Index n = op.cols();
    validate(cfg, m, n);
    if (mode == RangeMode::self_adjoint && m != n) {
        throw ShapeError("find_range: self-adjoint mode requires a square operator");
    }
    const Index width = std::min({cfg.width(), m, n});

    Matrix y = op.apply(random_test_block(n, width, cfg.seed));
    if (cfg.its == 0) {
        return orthonormalize(y, options.pivoted_qr);
    }

    bool deficient = false;
    auto renormalize = [&deficient](const Matrix& block) {
        LuFactor f = lu_renormalize(block);
        deficient = deficient || f.singular;
        return std::move(f.lower);
    };

    y = renormalize(y);
    for (int it = 1; it <= cfg.its; ++it) {
        if (mode == RangeMode::plain) {
            y = op.apply(renormalize(op.apply_adjoint(y)));
        } else {
            y = op.apply(y);
        }
        if (it < cfg.its) {
            y = renormalize(y);
        }
    }
    RangeBasis basis = orthonormalize(y, options.pivoted_qr);
    basis.rank_deficient = basis.rank_deficient || deficient;
    return basis;
}

} // namespace lowrank
