#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lowrank/errors.hpp"

/**
 * @file matop.hpp
 * @brief Matrix storage and the linear-operator abstraction.
 *
 * Every algorithm in this library touches its input only through
 * `LinearOperator::apply` and `LinearOperator::apply_adjoint`, both acting on
 * blocks of column vectors. Dense, sparse, column-centered and adjoint views
 * share that interface, so a centered sparse matrix is never densified.
 */

namespace lowrank {

using Index = Eigen::Index;
/// Column-major dense block. All scalars are double precision.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/**
 * Compressed-column sparse matrix.
 *
 * With `symmetric()` set, only the lower triangle (diagonal included) is
 * stored and the upper triangle is implied; products act with both.
 */
class SparseMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::ColMajor>;

    SparseMatrix() = default;

    /// Takes ownership of `data`, compresses it and drops explicit zeros.
    /// Throws DomainError on non-finite values; when `symmetric` is set,
    /// `data` must be square and hold only its lower triangle.
    explicit SparseMatrix(Storage data, bool symmetric = false)
        : data_(std::move(data)), symmetric_(symmetric) {
        data_.prune(0.0);
        data_.makeCompressed();
        for (Index j = 0; j < data_.outerSize(); ++j) {
            for (Storage::InnerIterator it(data_, j); it; ++it) {
                if (!std::isfinite(it.value())) {
                    throw DomainError("sparse matrix has a non-finite entry");
                }
                if (symmetric_ && it.row() < it.col()) {
                    throw ShapeError("symmetric sparse storage must be lower triangular");
                }
            }
        }
        if (symmetric_ && data_.rows() != data_.cols()) {
            throw ShapeError("symmetric sparse matrix must be square");
        }
    }

    Index rows() const { return data_.rows(); }
    Index cols() const { return data_.cols(); }
    bool symmetric() const { return symmetric_; }
    const Storage& storage() const { return data_; }

    /// Number of values held in memory.
    Index stored_nnz() const { return data_.nonZeros(); }

    /// Number of nonzeros of the full matrix (mirrored entries counted twice).
    Index logical_nnz() const {
        if (!symmetric_) {
            return data_.nonZeros();
        }
        Index diag = 0;
        for (Index j = 0; j < data_.outerSize(); ++j) {
            for (Storage::InnerIterator it(data_, j); it; ++it) {
                diag += (it.row() == it.col());
            }
        }
        return 2 * data_.nonZeros() - diag;
    }

    Matrix multiply(const Eigen::Ref<const Matrix>& x) const {
        if (symmetric_) {
            return data_.selfadjointView<Eigen::Lower>() * x;
        }
        return data_ * x;
    }

    Matrix multiply_adjoint(const Eigen::Ref<const Matrix>& y) const {
        if (symmetric_) {
            return data_.selfadjointView<Eigen::Lower>() * y;
        }
        return data_.transpose() * y;
    }

    Matrix to_dense() const {
        Matrix out = Matrix(data_);
        if (symmetric_) {
            out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
        }
        return out;
    }

    double frobenius_norm_squared() const {
        double total = 0.0;
        for (Index j = 0; j < data_.outerSize(); ++j) {
            for (Storage::InnerIterator it(data_, j); it; ++it) {
                const double sq = it.value() * it.value();
                total += (symmetric_ && it.row() != it.col()) ? 2.0 * sq : sq;
            }
        }
        return total;
    }

private:
    Storage data_;
    bool symmetric_ = false;
};

namespace detail {

/// Backing implementation of a LinearOperator. Immutable after construction.
class OperatorImpl {
public:
    virtual ~OperatorImpl() = default;
    virtual Index rows() const = 0;
    virtual Index cols() const = 0;
    virtual Matrix apply(const Eigen::Ref<const Matrix>& x) const = 0;
    virtual Matrix apply_adjoint(const Eigen::Ref<const Matrix>& y) const = 0;
    virtual double frobenius_norm_squared() const = 0;
};

} // namespace detail

/**
 * Shared, immutable handle to something that can be applied to blocks of
 * vectors along with its adjoint. Cheap to copy; safe for concurrent
 * read-only use.
 */
class LinearOperator {
public:
    enum class Kind { dense, sparse, centered, adjoint, custom };

    explicit LinearOperator(Matrix a);
    explicit LinearOperator(SparseMatrix a);
    LinearOperator(std::shared_ptr<const detail::OperatorImpl> impl, Kind kind)
        : impl_(std::move(impl)), kind_(kind) {}

    Index rows() const { return impl_->rows(); }
    Index cols() const { return impl_->cols(); }
    Kind kind() const { return kind_; }

    /// A·X. Throws ShapeError if X has the wrong row count or no columns,
    /// DomainError if X holds a non-finite value.
    Matrix apply(const Eigen::Ref<const Matrix>& x) const {
        check_block(x, cols(), "apply");
        return impl_->apply(x);
    }

    /// Aᴴ·Y, never forming Aᴴ.
    Matrix apply_adjoint(const Eigen::Ref<const Matrix>& y) const {
        check_block(y, rows(), "apply_adjoint");
        return impl_->apply_adjoint(y);
    }

    double frobenius_norm_squared() const { return impl_->frobenius_norm_squared(); }

    /// Explicit form, obtained by applying the operator to the identity.
    Matrix to_dense() const { return impl_->apply(Matrix::Identity(cols(), cols())); }

    /// Direct storage access; null unless kind() matches.
    const Matrix* dense_storage() const;
    const SparseMatrix* sparse_storage() const;
    /// Wrapped operator of a centered or adjoint view; null otherwise.
    const LinearOperator* inner() const;

private:
    static void check_block(const Eigen::Ref<const Matrix>& x, Index expected, const char* what) {
        if (x.rows() != expected || x.cols() < 1) {
            throw ShapeError(std::string(what) + ": block is " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + ", expected " + std::to_string(expected) +
                             " rows and at least one column");
        }
        if (!x.allFinite()) {
            throw DomainError(std::string(what) + ": block has a non-finite entry");
        }
    }

    std::shared_ptr<const detail::OperatorImpl> impl_;
    Kind kind_;
};

namespace detail {

class DenseImpl final : public OperatorImpl {
public:
    explicit DenseImpl(Matrix a) : a_(std::move(a)) {
        if (!a_.allFinite()) {
            throw DomainError("dense matrix has a non-finite entry");
        }
    }
    Index rows() const override { return a_.rows(); }
    Index cols() const override { return a_.cols(); }
    Matrix apply(const Eigen::Ref<const Matrix>& x) const override { return a_ * x; }
    Matrix apply_adjoint(const Eigen::Ref<const Matrix>& y) const override { return a_.transpose() * y; }
    double frobenius_norm_squared() const override { return a_.squaredNorm(); }
    const Matrix& matrix() const { return a_; }

private:
    Matrix a_;
};

class SparseImpl final : public OperatorImpl {
public:
    explicit SparseImpl(SparseMatrix a) : a_(std::move(a)) {}
    Index rows() const override { return a_.rows(); }
    Index cols() const override { return a_.cols(); }
    Matrix apply(const Eigen::Ref<const Matrix>& x) const override { return a_.multiply(x); }
    Matrix apply_adjoint(const Eigen::Ref<const Matrix>& y) const override { return a_.multiply_adjoint(y); }
    double frobenius_norm_squared() const override { return a_.frobenius_norm_squared(); }
    const SparseMatrix& matrix() const { return a_; }

private:
    SparseMatrix a_;
};

// A - 1·c, with c the row of column means.
class CenteredImpl final : public OperatorImpl {
public:
    CenteredImpl(LinearOperator inner, RowVector means) : inner_(std::move(inner)), means_(std::move(means)) {
        if (means_.size() != inner_.cols()) {
            throw ShapeError("centering vector length must match the column count");
        }
    }
    Index rows() const override { return inner_.rows(); }
    Index cols() const override { return inner_.cols(); }

    Matrix apply(const Eigen::Ref<const Matrix>& x) const override {
        Matrix out = inner_.apply(x);
        const RowVector shift = means_ * x;
        out.rowwise() -= shift;
        return out;
    }

    Matrix apply_adjoint(const Eigen::Ref<const Matrix>& y) const override {
        Matrix out = inner_.apply_adjoint(y);
        const RowVector sums = y.colwise().sum();
        out.noalias() -= means_.transpose() * sums;
        return out;
    }

    // ‖A - 1c‖²_F = ‖A‖²_F - m‖c‖² since c holds the column means.
    double frobenius_norm_squared() const override {
        const double v = inner_.frobenius_norm_squared() - static_cast<double>(rows()) * means_.squaredNorm();
        return v > 0.0 ? v : 0.0;
    }

    const LinearOperator& inner() const { return inner_; }
    const RowVector& means() const { return means_; }

private:
    LinearOperator inner_;
    RowVector means_;
};

class AdjointImpl final : public OperatorImpl {
public:
    explicit AdjointImpl(LinearOperator inner) : inner_(std::move(inner)) {}
    Index rows() const override { return inner_.cols(); }
    Index cols() const override { return inner_.rows(); }
    Matrix apply(const Eigen::Ref<const Matrix>& x) const override { return inner_.apply_adjoint(x); }
    Matrix apply_adjoint(const Eigen::Ref<const Matrix>& y) const override { return inner_.apply(y); }
    double frobenius_norm_squared() const override { return inner_.frobenius_norm_squared(); }
    const LinearOperator& inner() const { return inner_; }

private:
    LinearOperator inner_;
};

} // namespace detail

inline LinearOperator::LinearOperator(Matrix a)
    : impl_(std::make_shared<detail::DenseImpl>(std::move(a))), kind_(Kind::dense) {}

inline LinearOperator::LinearOperator(SparseMatrix a)
    : impl_(std::make_shared<detail::SparseImpl>(std::move(a))), kind_(Kind::sparse) {}

inline const Matrix* LinearOperator::dense_storage() const {
    if (kind_ != Kind::dense) {
        return nullptr;
    }
    return &static_cast<const detail::DenseImpl&>(*impl_).matrix();
}

inline const SparseMatrix* LinearOperator::sparse_storage() const {
    if (kind_ != Kind::sparse) {
        return nullptr;
    }
    return &static_cast<const detail::SparseImpl&>(*impl_).matrix();
}

inline const LinearOperator* LinearOperator::inner() const {
    if (kind_ == Kind::centered) {
        return &static_cast<const detail::CenteredImpl&>(*impl_).inner();
    }
    if (kind_ == Kind::adjoint) {
        return &static_cast<const detail::AdjointImpl&>(*impl_).inner();
    }
    return nullptr;
}

inline Matrix apply(const LinearOperator& op, const Eigen::Ref<const Matrix>& x) { return op.apply(x); }

inline Matrix apply_adjoint(const LinearOperator& op, const Eigen::Ref<const Matrix>& y) {
    return op.apply_adjoint(y);
}

/// Mean of each column, c[j] = (Σᵢ A[i,j]) / m.
inline RowVector column_means(const LinearOperator& op) {
    const double m = static_cast<double>(op.rows());
    if (const Matrix* a = op.dense_storage()) {
        return a->colwise().sum() / m;
    }
    if (const SparseMatrix* s = op.sparse_storage()) {
        if (!s->symmetric()) {
            RowVector sums = RowVector::Zero(s->cols());
            for (Index j = 0; j < s->storage().outerSize(); ++j) {
                for (SparseMatrix::Storage::InnerIterator it(s->storage(), j); it; ++it) {
                    sums[j] += it.value();
                }
            }
            return sums / m;
        }
    }
    return op.apply_adjoint(Vector::Ones(op.rows())).transpose() / m;
}

/// View of `op` with its column means subtracted. Nothing is materialized.
inline LinearOperator centered(const LinearOperator& op) {
    return LinearOperator(std::make_shared<detail::CenteredImpl>(op, column_means(op)),
                          LinearOperator::Kind::centered);
}

/// View of `op` with apply and apply_adjoint exchanged.
inline LinearOperator adjoint(const LinearOperator& op) {
    if (op.kind() == LinearOperator::Kind::adjoint) {
        return *op.inner();
    }
    return LinearOperator(std::make_shared<detail::AdjointImpl>(op), LinearOperator::Kind::adjoint);
}

} // namespace lowrank
