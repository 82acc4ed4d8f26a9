#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lowrank/drivers.hpp"
#include "lowrank/matop.hpp"
#include "lowrank/rangefinder.hpp"

/**
 * @file nystrom.hpp
 * @brief Nyström factorization of nonnegative-definite self-adjoint operators.
 *
 * Given an orthonormal Q with A ≈ Q·Qᴴ·A, forms B₁ = A·Q and B₂ = Qᴴ·B₁ and
 * factors B₂ = C² with C the self-adjoint square root rather than a Cholesky
 * factor, so a B₂ that is only semidefinite (rank-deficient A, roundoff) does
 * not break the method. F = B₁·C⁺ uses a truncated pseudoinverse, and the SVD
 * F = U·S·Vᴴ gives A ≈ U·S²·Uᴴ.
 */

namespace lowrank {

/// Relative eigenvalue below which B₂ is declared indefinite.
inline constexpr double kIndefiniteThreshold = 1e-6;
/// Relative cutoff of the pseudoinverse of C.
inline constexpr double kPseudoinverseCutoff = 1e-12;

struct NystromIntermediate {
    Matrix b1;
    Matrix b2;
    Matrix c;
    Matrix f;
    Vector s;
};

/**
 * Self-adjoint square root C of a self-adjoint B₂, C² = B₂. Eigenvalues
 * slightly below zero (roundoff) are clamped to zero; anything below
 * -1e-6·‖B₂‖ throws DomainError.
 */
inline Matrix selfadjoint_sqrt(const Eigen::Ref<const Matrix>& b2) {
    if (b2.rows() != b2.cols()) {
        throw ShapeError("selfadjoint_sqrt: block must be square");
    }
    const double scale = b2.cwiseAbs().maxCoeff();
    if ((b2 - b2.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw DomainError("selfadjoint_sqrt: block is not self-adjoint");
    }
    const Matrix sym = 0.5 * (b2 + b2.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const Vector& values = eig.eigenvalues();
    const double norm = values.cwiseAbs().maxCoeff();
    if (values.minCoeff() < -kIndefiniteThreshold * norm) {
        throw DomainError("selfadjoint_sqrt: block is not nonnegative definite");
    }
    const Vector roots = values.cwiseMax(0.0).cwiseSqrt();
    const Matrix& w = eig.eigenvectors();
    return w * roots.asDiagonal() * w.transpose();
}

/// F = B₁·C⁺ for self-adjoint C, where C⁺ discards eigenvalues of magnitude
/// at most 1e-12·‖C‖.
inline Matrix stable_solve_right(const Eigen::Ref<const Matrix>& b1, const Eigen::Ref<const Matrix>& c) {
    if (c.rows() != c.cols() || b1.cols() != c.rows()) {
        throw ShapeError("stable_solve_right: incompatible shapes");
    }
    const Matrix sym = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const Vector& mu = eig.eigenvalues();
    const double cutoff = kPseudoinverseCutoff * mu.cwiseAbs().maxCoeff();
    Vector inv(mu.size());
    for (Index i = 0; i < mu.size(); ++i) {
        inv[i] = std::abs(mu[i]) > cutoff ? 1.0 / mu[i] : 0.0;
    }
    const Matrix& w = eig.eigenvectors();
    return (b1 * w) * inv.asDiagonal() * w.transpose();
}

/// Intermediates of the Nyström scheme for a given orthonormal basis.
inline NystromIntermediate nystrom_intermediate(const LinearOperator& op, const Eigen::Ref<const Matrix>& q) {
    NystromIntermediate out;
    out.b1 = op.apply(q);
    out.b2 = q.transpose() * out.b1;
    out.b2 = (0.5 * (out.b2 + out.b2.transpose())).eval();
    out.c = selfadjoint_sqrt(out.b2);
    out.f = stable_solve_right(out.b1, out.c);
    return out;
}

/**
 * Nyström approximation A ≈ U·diag(lam)·Uᴴ with lam >= 0, for a
 * nonnegative-definite self-adjoint operator. Both properties are
 * probe-checked; a failed probe throws DomainError.
 */
inline EigenApprox nystrom(const LinearOperator& op, const SketchConfig& cfg, const RangeOptions& options = {}) {
    validate(cfg, op.rows(), op.cols());
    detail::probe_self_adjoint(op, cfg.seed, true);

    const RangeBasis basis = find_range(op, cfg, RangeMode::self_adjoint, options);
    NystromIntermediate parts = nystrom_intermediate(op, basis.q);
    const auto svd = detail::thin_svd(parts.f);

    const Index k = cfg.k;
    EigenApprox out;
    out.u = svd.matrixU().leftCols(k);
    out.lam = svd.singularValues().head(k).array().square();
    return out;
}

} // namespace lowrank
