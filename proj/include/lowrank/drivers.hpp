#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lowrank/matop.hpp"
#include "lowrank/rangefinder.hpp"

namespace lowrank {

/// Truncated SVD A ≈ U·diag(s)·Vᴴ; s nonnegative and nonincreasing.
struct LowRankSVD {
    Matrix u;
    Vector s;
    Matrix v;
};

/// Self-adjoint factorization A ≈ U·diag(lam)·Uᴴ; lam ordered by |lam|,
/// largest first.
struct EigenApprox {
    Matrix u;
    Vector lam;
};

namespace detail {

// Thin SVD of a tall block (rows >= cols).
inline Eigen::JacobiSVD<Matrix> thin_svd(const Matrix& tall) {
    return Eigen::JacobiSVD<Matrix>(tall, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

/**
 * Random-probe check that op is self-adjoint: compares Yᴴ(AX) with (AY)ᴴX on
 * a couple of uniform test vectors. When `require_nonnegative` is set, also
 * checks xᴴAx >= -tol for each probe. Throws DomainError on failure.
 */
inline void probe_self_adjoint(const LinearOperator& op, std::uint64_t seed, bool require_nonnegative) {
    if (op.rows() != op.cols()) {
        throw ShapeError("operator must be square");
    }
    const Index n = op.cols();
    constexpr Index probes = 2;
    const Matrix x = random_test_block(n, probes, mix_seed(seed, 101));
    const Matrix y = random_test_block(n, probes, mix_seed(seed, 102));
    const Matrix ax = op.apply(x);
    const Matrix ay = op.apply(y);

    // Lower bound on ‖A‖ from the probes themselves.
    double norm_est = 0.0;
    for (Index j = 0; j < probes; ++j) {
        norm_est = std::max({norm_est, ax.col(j).norm() / x.col(j).norm(), ay.col(j).norm() / y.col(j).norm()});
    }
    if (norm_est == 0.0) {
        return;
    }
    const Matrix lhs = y.transpose() * ax;
    const Matrix rhs = ay.transpose() * x;
    for (Index i = 0; i < probes; ++i) {
        for (Index j = 0; j < probes; ++j) {
            const double tol = 1e-8 * norm_est * y.col(i).norm() * x.col(j).norm();
            if (std::abs(lhs(i, j) - rhs(i, j)) > tol) {
                throw DomainError("operator is not self-adjoint");
            }
        }
    }
    if (require_nonnegative) {
        for (Index j = 0; j < probes; ++j) {
            if (x.col(j).dot(ax.col(j)) < -1e-8 * norm_est * x.col(j).squaredNorm() ||
                y.col(j).dot(ay.col(j)) < -1e-8 * norm_est * y.col(j).squaredNorm()) {
                throw DomainError("operator is not nonnegative definite");
            }
        }
    }
}

} // namespace detail

/**
 * Randomized truncated SVD.
 *
 * Wide operators (m < n) are sketched through their adjoint so the dense SVD
 * always acts on an l x min(m, n) block; U and V are swapped back at the end.
 * The l - k oversampling columns are dropped only after the small SVD.
 */
inline LowRankSVD rsvd(const LinearOperator& op, const SketchConfig& cfg, const RangeOptions& options = {}) {
    validate(cfg, op.rows(), op.cols());
    const bool swapped = op.rows() < op.cols();
    const LinearOperator work = swapped ? adjoint(op) : op;

    const RangeBasis basis = find_range(work, cfg, RangeMode::plain, options);
    // Bᴴ = Aᴴ·Q, so B = Qᴴ·A = W·S·Vᴴ  <=>  Bᴴ = V·S·Wᴴ.
    const Matrix bt = work.apply_adjoint(basis.q);
    const auto svd = detail::thin_svd(bt);

    const Index k = cfg.k;
    LowRankSVD out;
    out.s = svd.singularValues().head(k);
    Matrix left = basis.q * svd.matrixV().leftCols(k);
    Matrix right = svd.matrixU().leftCols(k);
    if (swapped) {
        std::swap(left, right);
    }
    out.u = std::move(left);
    out.v = std::move(right);
    return out;
}

/// Principal component analysis: rsvd of the column-centered operator when
/// `center` is set. The centered matrix is never formed.
inline LowRankSVD rpca(const LinearOperator& op, const SketchConfig& cfg, bool center,
                       const RangeOptions& options = {}) {
    if (!center) {
        return rsvd(op, cfg, options);
    }
    return rsvd(centered(op), cfg, options);
}

/**
 * Randomized eigendecomposition of a self-adjoint operator, which may be
 * indefinite. The Rayleigh-Ritz block T = Qᴴ·A·Q is symmetrized before its
 * dense eigendecomposition; eigenpairs are kept in order of decreasing
 * |lam| with signs preserved.
 */
inline EigenApprox reig(const LinearOperator& op, const SketchConfig& cfg, const RangeOptions& options = {}) {
    validate(cfg, op.rows(), op.cols());
    detail::probe_self_adjoint(op, cfg.seed, false);

    const RangeBasis basis = find_range(op, cfg, RangeMode::self_adjoint, options);
    const Matrix aq = op.apply(basis.q);
    Matrix t = basis.q.transpose() * aq;
    t = (0.5 * (t + t.transpose())).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(t);
    const Vector& values = eig.eigenvalues();
    std::vector<Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(values[a]) > std::abs(values[b]); });

    const Index k = cfg.k;
    Matrix vecs(t.rows(), k);
    EigenApprox out;
    out.lam.resize(k);
    for (Index j = 0; j < k; ++j) {
        const Index src = order[static_cast<std::size_t>(j)];
        out.lam[j] = values[src];
        vecs.col(j) = eig.eigenvectors().col(src);
    }
    out.u = basis.q * vecs;
    return out;
}

} // namespace lowrank
