#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lowrank/matop.hpp"

// Matrix Market exchange format: real field, general or symmetric,
// coordinate (sparse) or array (dense). Values are written with 17
// significant digits so that reading a file back is exact.

namespace lowrank {

namespace mm_detail {

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

struct LineReader {
    std::istream& in;
    std::size_t number = 0;

    // Next non-comment, non-blank line; false at end of input.
    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++number;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty() || line[0] == '%' || blank(line)) {
                continue;
            }
            return true;
        }
        return false;
    }
};

template <class T>
T parse_field(std::istringstream& fields, std::size_t line, const char* what) {
    T value{};
    if (!(fields >> value)) {
        throw ParseError(line, std::string("expected ") + what);
    }
    return value;
}

inline void expect_end(std::istringstream& fields, std::size_t line) {
    std::string extra;
    if (fields >> extra) {
        throw ParseError(line, "unexpected trailing token '" + extra + "'");
    }
}

inline void write_value(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

} // namespace mm_detail

/**
 * Parses a Matrix Market stream. Coordinate files become sparse operators
 * (symmetric ones keep only the lower triangle in memory), array files become
 * dense operators. Duplicate coordinate entries are summed; explicit zeros
 * are dropped. Throws ParseError with the offending line number.
 */
inline LinearOperator read_matrix_market(std::istream& in) {
    mm_detail::LineReader reader{in};
    std::string header;
    if (!std::getline(in, header)) {
        throw ParseError(1, "empty input");
    }
    reader.number = 1;
    if (!header.empty() && header.back() == '\r') {
        header.pop_back();
    }

    std::istringstream hs(header);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") {
        throw ParseError(1, "missing %%MatrixMarket banner");
    }
    object = mm_detail::lowercase(object);
    format = mm_detail::lowercase(format);
    field = mm_detail::lowercase(field);
    symmetry = mm_detail::lowercase(symmetry);
    if (object != "matrix") {
        throw ParseError(1, "unsupported object '" + object + "'");
    }
    if (format != "coordinate" && format != "array") {
        throw ParseError(1, "unsupported format '" + format + "'");
    }
    if (field == "complex") {
        throw ParseError(1, "complex matrices are not supported");
    }
    if (field != "real" && field != "integer" && field != "double") {
        throw ParseError(1, "unsupported field '" + field + "'");
    }
    if (symmetry != "general" && symmetry != "symmetric") {
        throw ParseError(1, "unsupported symmetry '" + symmetry + "'");
    }
    const bool symmetric = symmetry == "symmetric";

    std::string line;
    if (!reader.next(line)) {
        throw ParseError(reader.number + 1, "missing size line");
    }
    std::istringstream size_fields(line);
    const auto m = mm_detail::parse_field<long long>(size_fields, reader.number, "row count");
    const auto n = mm_detail::parse_field<long long>(size_fields, reader.number, "column count");
    if (m < 0 || n < 0) {
        throw ParseError(reader.number, "negative dimension");
    }
    if (symmetric && m != n) {
        throw ParseError(reader.number, "symmetric matrix must be square");
    }

    auto read_value = [&](std::istringstream& fields) {
        const auto v = mm_detail::parse_field<double>(fields, reader.number, "value");
        if (!std::isfinite(v)) {
            throw ParseError(reader.number, "non-finite value");
        }
        return v;
    };

    if (format == "coordinate") {
        const auto count = mm_detail::parse_field<long long>(size_fields, reader.number, "entry count");
        mm_detail::expect_end(size_fields, reader.number);
        if (count < 0) {
            throw ParseError(reader.number, "negative entry count");
        }
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(count));
        for (long long e = 0; e < count; ++e) {
            if (!reader.next(line)) {
                throw ParseError(reader.number + 1, "expected " + std::to_string(count) + " entries, found " +
                                                        std::to_string(e));
            }
            std::istringstream fields(line);
            auto i = mm_detail::parse_field<long long>(fields, reader.number, "row index");
            auto j = mm_detail::parse_field<long long>(fields, reader.number, "column index");
            const double v = read_value(fields);
            mm_detail::expect_end(fields, reader.number);
            if (i < 1 || i > m || j < 1 || j > n) {
                throw ParseError(reader.number, "index (" + std::to_string(i) + ", " + std::to_string(j) +
                                                    ") out of bounds");
            }
            if (symmetric && i < j) {
                std::swap(i, j);
            }
            triplets.emplace_back(static_cast<Index>(i - 1), static_cast<Index>(j - 1), v);
        }
        if (reader.next(line)) {
            throw ParseError(reader.number, "data beyond the declared entry count");
        }
        SparseMatrix::Storage storage(static_cast<Index>(m), static_cast<Index>(n));
        storage.setFromTriplets(triplets.begin(), triplets.end());
        return LinearOperator(SparseMatrix(std::move(storage), symmetric));
    }

    mm_detail::expect_end(size_fields, reader.number);
    Matrix a = Matrix::Zero(static_cast<Index>(m), static_cast<Index>(n));
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = symmetric ? j : 0; i < a.rows(); ++i) {
            if (!reader.next(line)) {
                throw ParseError(reader.number + 1, "too few array values");
            }
            std::istringstream fields(line);
            a(i, j) = read_value(fields);
            mm_detail::expect_end(fields, reader.number);
            if (symmetric) {
                a(j, i) = a(i, j);
            }
        }
    }
    if (reader.next(line)) {
        throw ParseError(reader.number, "data beyond the declared array size");
    }
    return LinearOperator(std::move(a));
}

inline LinearOperator read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return read_matrix_market(in);
}

/// Array format, general symmetry, column-major.
inline void write_matrix_market(std::ostream& out, const Matrix& a) {
    if (!a.allFinite()) {
        throw DomainError("cannot write a matrix with non-finite entries");
    }
    out << "%%MatrixMarket matrix array real general\n";
    out << a.rows() << ' ' << a.cols() << '\n';
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            mm_detail::write_value(out, a(i, j));
            out << '\n';
        }
    }
}

/// Coordinate format; symmetric matrices are written as their lower triangle.
inline void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
    out << "%%MatrixMarket matrix coordinate real " << (a.symmetric() ? "symmetric" : "general") << '\n';
    out << a.rows() << ' ' << a.cols() << ' ' << a.stored_nnz() << '\n';
    const auto& s = a.storage();
    for (Index j = 0; j < s.outerSize(); ++j) {
        for (SparseMatrix::Storage::InnerIterator it(s, j); it; ++it) {
            out << it.row() + 1 << ' ' << j + 1 << ' ';
            mm_detail::write_value(out, it.value());
            out << '\n';
        }
    }
}

template <class M>
void write_matrix_market(const std::string& path, const M& a) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    write_matrix_market(out, a);
    out.flush();
    if (!out) {
        throw std::runtime_error("write to " + path + " failed");
    }
}

/// Writes whichever storage backs `op`; other kinds are densified.
inline void write_matrix_market(std::ostream& out, const LinearOperator& op) {
    if (const SparseMatrix* s = op.sparse_storage()) {
        write_matrix_market(out, *s);
    } else if (const Matrix* d = op.dense_storage()) {
        write_matrix_market(out, *d);
    } else {
        write_matrix_market(out, op.to_dense());
    }
}

} // namespace lowrank
