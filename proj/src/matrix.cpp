#include "logsew/matrix.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace logsew {

Matrix::Matrix(std::size_t rows, std::size_t cols, Mode mode)
    : rows_(rows), cols_(cols), mode_(mode), data_(rows * cols, Scalar::zero(mode)) {}

Matrix Matrix::identity(std::size_t n, Mode mode) {
    Matrix m(n, n, mode);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Scalar::one(mode);
    return m;
}

bool Matrix::is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](const Scalar& s) { return s.is_zero(); });
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_, mode_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::scaled(const Scalar& c) const {
    Matrix r = *this;
    for (auto& x : r.data_) x *= c;
    return r;
}

Scalar Matrix::trace() const {
    Scalar t = Scalar::zero(mode_);
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

std::vector<Scalar> Matrix::apply(const std::vector<Scalar>& x) const {
    if (x.size() != cols_) throw std::invalid_argument("matrix-vector size mismatch");
    std::vector<Scalar> y(rows_, Scalar::zero(mode_));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            if (!x[j].is_zero() && !(*this)(i, j).is_zero()) y[i] += (*this)(i, j) * x[j];
    return y;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product shape mismatch");
    Matrix c(a.rows_, b.cols_, a.mode_);
    for (std::size_t i = 0; i < a.rows_; ++i)
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const Scalar& x = a(i, k);
            if (x.is_zero()) continue;
            for (std::size_t j = 0; j < b.cols_; ++j)
                if (!b(k, j).is_zero()) c(i, j) += x * b(k, j);
        }
    return c;
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

namespace {

// reduced row echelon form in place; returns pivot columns
std::vector<std::size_t> rref(Matrix& m) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
        std::size_t p = r;
        while (p < m.rows() && m(p, c).is_zero()) ++p;
        if (p == m.rows()) continue;
        if (p != r)
            for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
        Scalar inv = Scalar::one(m.mode()) / m(r, c);
        for (std::size_t j = c; j < m.cols(); ++j) m(r, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == r || m(i, c).is_zero()) continue;
            Scalar f = m(i, c);
            for (std::size_t j = c; j < m.cols(); ++j)
                if (!m(r, j).is_zero()) m(i, j) -= f * m(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

}  // namespace

std::size_t Matrix::rank() const {
    Matrix m = *this;
    return rref(m).size();
}

Matrix Matrix::inverse() const {
    if (rows_ != cols_) throw std::invalid_argument("inverse of non-square matrix");
    Matrix aug(rows_, 2 * cols_, mode_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) aug(i, j) = (*this)(i, j);
        aug(i, cols_ + i) = Scalar::one(mode_);
    }
    auto piv = rref(aug);
    if (piv.size() < rows_ || piv.back() >= cols_) throw std::domain_error("singular matrix");
    Matrix inv(rows_, cols_, mode_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) inv(i, j) = aug(i, cols_ + j);
    return inv;
}

Nullspace nullspace(const Matrix& a) {
    Matrix m = a;
    auto piv = rref(m);
    Nullspace ns;
    std::vector<bool> is_pivot(a.cols(), false);
    for (auto p : piv) is_pivot[p] = true;
    for (std::size_t f = 0; f < a.cols(); ++f) {
        if (is_pivot[f]) continue;
        std::vector<Scalar> v(a.cols(), Scalar::zero(a.mode()));
        v[f] = Scalar::one(a.mode());
        for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m(r, f);
        ns.basis.push_back(std::move(v));
        ns.free_columns.push_back(f);
    }
    return ns;
}

Nullspace sparse_nullspace(const std::vector<SparseRow>& rows, std::size_t ncols) {
    // incremental elimination: reduced rows keyed by pivot column
    std::map<std::size_t, std::map<std::size_t, Scalar>> reduced;
    Mode mode = Mode::Exact;
    for (const auto& row : rows) {
        std::map<std::size_t, Scalar> r;
        for (const auto& [c, v] : row) {
            mode = v.mode();
            if (v.is_zero()) continue;
            auto [it, ins] = r.try_emplace(c, v);
            if (!ins) it->second += v;
        }
        for (auto it = r.begin(); it != r.end();) it = it->second.is_zero() ? r.erase(it) : std::next(it);
        // reduce against existing pivots
        bool changed = true;
        while (changed && !r.empty()) {
            changed = false;
            for (auto it = r.begin(); it != r.end(); ++it) {
                auto pr = reduced.find(it->first);
                if (pr == reduced.end()) continue;
                Scalar f = it->second;
                for (const auto& [c, v] : pr->second) {
                    auto [jt, ins] = r.try_emplace(c, -(f * v));
                    if (!ins) {
                        jt->second -= f * v;
                        if (jt->second.is_zero()) r.erase(jt);
                    }
                }
                changed = true;
                break;
            }
        }
        if (r.empty()) continue;
        std::size_t p = r.begin()->first;
        Scalar inv = Scalar::one(mode) / r.begin()->second;
        for (auto& [c, v] : r) v *= inv;
        // back-substitute into existing rows
        for (auto& [q, other] : reduced) {
            auto it = other.find(p);
            if (it == other.end()) continue;
            Scalar f = it->second;
            for (const auto& [c, v] : r) {
                auto [jt, ins] = other.try_emplace(c, -(f * v));
                if (!ins) {
                    jt->second -= f * v;
                    if (jt->second.is_zero()) other.erase(jt);
                }
            }
        }
        reduced.emplace(p, std::move(r));
    }
    Nullspace ns;
    for (std::size_t f = 0; f < ncols; ++f) {
        if (reduced.count(f)) continue;
        std::vector<Scalar> v(ncols, Scalar::zero(mode));
        v[f] = Scalar::one(mode);
        for (const auto& [p, row] : reduced) {
            auto it = row.find(f);
            if (it != row.end()) v[p] = -it->second;
        }
        ns.basis.push_back(std::move(v));
        ns.free_columns.push_back(f);
    }
    return ns;
}

std::vector<Scalar> solve(const Matrix& a, const std::vector<Scalar>& b) {
    Matrix aug(a.rows(), a.cols() + 1, a.mode());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) aug(i, j) = a(i, j);
        aug(i, a.cols()) = b[i];
    }
    auto piv = rref(aug);
    if (!piv.empty() && piv.back() == a.cols()) throw std::domain_error("inconsistent linear system");
    std::vector<Scalar> x(a.cols(), Scalar::zero(a.mode()));
    for (std::size_t r = 0; r < piv.size(); ++r) x[piv[r]] = aug(r, a.cols());
    return x;
}

}  // namespace logsew
