#pragma once

#include <cstdint>
#include <memory>
#include <utility>

#include "lowrank/drivers.hpp"
#include "lowrank/matop.hpp"
#include "lowrank/rangefinder.hpp"

// Spectral-norm estimation by the power method on AᴴA from a random start.
// Estimates are Rayleigh quotients of unit vectors, so they never exceed the
// true norm; with a random start they land within a factor of two with
// overwhelming probability. Double the value for a probabilistic upper bound.

namespace lowrank {

inline constexpr int kDefaultNormIterations = 20;

struct SpectralEstimate {
    double value = 0.0;
    int its_used = 0;
    std::uint64_t seed = 0;
};

/// ‖A·x‖ for x = (AᴴA)^its·x₀ normalized, x₀ uniform on [-1, 1].
inline SpectralEstimate snorm(const LinearOperator& op, int its = kDefaultNormIterations, std::uint64_t seed = 0) {
    if (its < 1) {
        throw ConfigError("snorm: iteration count must be at least 1");
    }
    SpectralEstimate out;
    out.seed = seed;
    Matrix x = random_test_block(op.cols(), 1, seed);
    x /= x.norm();
    for (int it = 1; it <= its; ++it) {
        const Matrix z = op.apply_adjoint(op.apply(x));
        const double nz = z.norm();
        out.its_used = it;
        if (nz == 0.0) {
            return out;
        }
        x = z / nz;
    }
    out.value = op.apply(x).norm();
    return out;
}

namespace detail {

// x ↦ A·x - U·diag(s)·Vᴴ·x and its adjoint.
class ResidualImpl final : public OperatorImpl {
public:
    ResidualImpl(LinearOperator a, Matrix u, Vector s, Matrix v)
        : a_(std::move(a)), u_(std::move(u)), s_(std::move(s)), v_(std::move(v)) {}

    Index rows() const override { return a_.rows(); }
    Index cols() const override { return a_.cols(); }

    Matrix apply(const Eigen::Ref<const Matrix>& x) const override {
        Matrix out = a_.apply(x);
        const Matrix coeffs = s_.asDiagonal() * (v_.transpose() * x);
        out.noalias() -= u_ * coeffs;
        return out;
    }

    Matrix apply_adjoint(const Eigen::Ref<const Matrix>& y) const override {
        Matrix out = a_.apply_adjoint(y);
        const Matrix coeffs = s_.asDiagonal() * (u_.transpose() * y);
        out.noalias() -= v_ * coeffs;
        return out;
    }

    // ‖A - U·S·Vᴴ‖²_F = ‖A‖²_F - 2·Σ sⱼ·uⱼᴴ·A·vⱼ + ‖S‖²_F, using orthonormal U, V.
    double frobenius_norm_squared() const override {
        double cross = 0.0;
        if (s_.size() > 0) {
            const Matrix av = a_.apply(v_);
            for (Index j = 0; j < s_.size(); ++j) {
                cross += s_[j] * u_.col(j).dot(av.col(j));
            }
        }
        const double v = a_.frobenius_norm_squared() - 2.0 * cross + s_.squaredNorm();
        return v > 0.0 ? v : 0.0;
    }

private:
    LinearOperator a_;
    Matrix u_;
    Vector s_;
    Matrix v_;
};

} // namespace detail

/// Implicit operator A - U·diag(s)·Vᴴ. Nothing of size m x n is formed.
inline LinearOperator residual_operator(const LinearOperator& op, Matrix u, Vector s, Matrix v) {
    if (u.rows() != op.rows() || v.rows() != op.cols() || u.cols() != s.size() || v.cols() != s.size()) {
        throw ShapeError("factors are not compatible with the operator");
    }
    return LinearOperator(
        std::make_shared<detail::ResidualImpl>(op, std::move(u), std::move(s), std::move(v)),
        LinearOperator::Kind::custom);
}

inline LinearOperator residual_operator(const LinearOperator& op, const LowRankSVD& f) {
    return residual_operator(op, f.u, f.s, f.v);
}

inline LinearOperator residual_operator(const LinearOperator& op, const EigenApprox& f) {
    return residual_operator(op, f.u, f.lam, f.u);
}

/// Estimate of ‖A - U·diag(s)·Vᴴ‖.
inline SpectralEstimate diffsnorm(const LinearOperator& op, const LowRankSVD& f, int its = kDefaultNormIterations,
                                  std::uint64_t seed = 0) {
    return snorm(residual_operator(op, f), its, seed);
}

/// Estimate of ‖A - U·diag(lam)·Uᴴ‖.
inline SpectralEstimate diffsnorm(const LinearOperator& op, const EigenApprox& f, int its = kDefaultNormIterations,
                                  std::uint64_t seed = 0) {
    return snorm(residual_operator(op, f), its, seed);
}

} // namespace lowrank
