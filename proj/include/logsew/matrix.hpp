#pragma once

#include <cstddef>
#include <vector>

#include "logsew/scalar.hpp"

namespace logsew {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, Mode mode = Mode::Exact);

    static Matrix identity(std::size_t n, Mode mode = Mode::Exact);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Mode mode() const { return mode_; }

    Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    bool is_zero() const;
    Matrix transpose() const;
    Matrix scaled(const Scalar& c) const;
    Scalar trace() const;
    Matrix inverse() const;
    std::size_t rank() const;
    std::vector<Scalar> apply(const std::vector<Scalar>& x) const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend bool operator==(const Matrix& a, const Matrix& b);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Mode mode_ = Mode::Exact;
    std::vector<Scalar> data_;
};

// basis of {x : A x = 0}; exact mode; vectors have a 1 at their free column
struct Nullspace {
    std::vector<std::vector<Scalar>> basis;
    std::vector<std::size_t> free_columns;
};

Nullspace nullspace(const Matrix& a);

// sparse rows: (column, value) pairs
using SparseRow = std::vector<std::pair<std::size_t, Scalar>>;
Nullspace sparse_nullspace(const std::vector<SparseRow>& rows, std::size_t ncols);

// solve A x = b exactly; throws if inconsistent
std::vector<Scalar> solve(const Matrix& a, const std::vector<Scalar>& b);

}  // namespace logsew
