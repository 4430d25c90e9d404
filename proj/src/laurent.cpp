#include "logsew/laurent.hpp"

#include <algorithm>
#include <stdexcept>

namespace logsew {

PowerSeries::PowerSeries(std::vector<Scalar> coeffs, std::size_t prec) : c_(std::move(coeffs)), prec_(prec) {
    if (!c_.empty()) mode_ = c_[0].mode();
    if (c_.size() > prec_) c_.resize(prec_);
}

PowerSeries PowerSeries::variable(std::size_t prec, Mode mode) {
    PowerSeries p({Scalar::zero(mode), Scalar::one(mode)}, prec);
    p.mode_ = mode;
    return p;
}

PowerSeries PowerSeries::constant(const Scalar& c, std::size_t prec) { return PowerSeries({c}, prec); }

void PowerSeries::set(std::size_t k, const Scalar& s) {
    if (k >= prec_) return;
    if (c_.empty()) mode_ = s.mode();
    if (k >= c_.size()) c_.resize(k + 1, Scalar::zero(mode_));
    c_[k] = s;
}

PowerSeries PowerSeries::derivative() const {
    std::vector<Scalar> d;
    for (std::size_t k = 1; k < c_.size(); ++k) d.push_back(c_[k] * Scalar(static_cast<long>(k)).to_mode(mode_));
    PowerSeries r(std::move(d), prec_ ? prec_ - 1 : 0);
    r.mode_ = mode_;
    return r;
}

PowerSeries PowerSeries::truncated(std::size_t prec) const {
    PowerSeries r(c_, std::min(prec, prec_));
    r.mode_ = mode_;
    return r;
}

PowerSeries PowerSeries::reciprocal() const {
    if ((*this)[0].is_zero()) throw std::domain_error("reciprocal of a series with zero constant term");
    std::vector<Scalar> r(prec_, Scalar::zero(mode_));
    Scalar inv0 = Scalar::one(mode_) / (*this)[0];
    for (std::size_t n = 0; n < prec_; ++n) {
        Scalar s = n == 0 ? Scalar::one(mode_) : Scalar::zero(mode_);
        for (std::size_t k = 1; k <= n; ++k) s -= (*this)[k] * r[n - k];
        r[n] = s * inv0;
    }
    PowerSeries out(std::move(r), prec_);
    out.mode_ = mode_;
    return out;
}

PowerSeries PowerSeries::compose(const PowerSeries& g) const {
    if (!g[0].is_zero()) throw std::domain_error("composition needs g(0) = 0");
    std::size_t prec = std::min(prec_, g.prec_);
    PowerSeries result = PowerSeries::constant(Scalar::zero(mode_), prec);
    PowerSeries pw = PowerSeries::constant(Scalar::one(mode_), prec);
    for (std::size_t k = 0; k < prec; ++k) {
        result += pw.scaled((*this)[k]);
        pw = (pw * g).truncated(prec);
    }
    return result;
}

PowerSeries PowerSeries::shifted(const Scalar& eta0) const {
    // Σ c_k (η0 + t)^k, exact for polynomials known completely
    std::vector<Scalar> r(prec_, Scalar::zero(mode_));
    for (std::size_t k = 0; k < c_.size(); ++k) {
        std::vector<Scalar> pows(k + 1, Scalar::one(mode_));
        for (std::size_t j = 1; j <= k; ++j) pows[j] = pows[j - 1] * eta0;
        for (std::size_t j = 0; j <= k && j < prec_; ++j)
            r[j] += c_[k] * Scalar(binomial(static_cast<long>(k), static_cast<long>(j))).to_mode(mode_) * pows[k - j];
    }
    PowerSeries out(std::move(r), prec_);
    out.mode_ = mode_;
    return out;
}

bool PowerSeries::equal_to_prec(const PowerSeries& o) const {
    std::size_t p = std::min(prec_, o.prec_);
    for (std::size_t k = 0; k < p; ++k)
        if ((*this)[k] != o[k]) return false;
    return true;
}

PowerSeries& PowerSeries::operator+=(const PowerSeries& o) {
    prec_ = std::min(prec_, o.prec_);
    if (c_.empty()) mode_ = o.mode_;
    c_.resize(std::min(prec_, std::max(c_.size(), o.c_.size())), Scalar::zero(mode_));
    for (std::size_t k = 0; k < c_.size() && k < o.c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
}

PowerSeries& PowerSeries::operator-=(const PowerSeries& o) { return *this += o.scaled(-Scalar::one(o.mode_)); }

PowerSeries operator*(const PowerSeries& a, const PowerSeries& b) {
    std::size_t prec = std::min(a.prec_, b.prec_);
    std::vector<Scalar> r(std::min(prec, a.c_.size() + b.c_.size()), Scalar::zero(a.mode_));
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
        if (a.c_[i].is_zero()) continue;
        for (std::size_t j = 0; j < b.c_.size() && i + j < r.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    }
    PowerSeries out(std::move(r), prec);
    out.mode_ = a.mode_;
    return out;
}

PowerSeries PowerSeries::scaled(const Scalar& s) const {
    PowerSeries r = *this;
    for (auto& x : r.c_) x *= s;
    return r;
}

void laurent_add(Laurent& x, long k, const ComplexRational& c) {
    if (c.is_zero()) return;
    auto [it, ins] = x.try_emplace(k, c);
    if (!ins) {
        it->second += c;
        if (it->second.is_zero()) x.erase(it);
    }
}

Laurent laurent_mul(const Laurent& a, const Laurent& b) {
    Laurent r;
    for (const auto& [i, x] : a)
        for (const auto& [j, y] : b) laurent_add(r, i + j, x * y);
    return r;
}

Laurent laurent_sum(const Laurent& a, const Laurent& b) {
    Laurent r = a;
    for (const auto& [k, c] : b) laurent_add(r, k, c);
    return r;
}

Laurent laurent_scaled(const Laurent& a, const ComplexRational& c) {
    Laurent r;
    for (const auto& [k, x] : a) laurent_add(r, k, x * c);
    return r;
}

Laurent laurent_derivative(const Laurent& a, unsigned times) {
    Laurent r = a;
    for (unsigned t = 0; t < times; ++t) {
        Laurent d;
        for (const auto& [k, c] : r) laurent_add(d, k - 1, c * ComplexRational(k));
        r = std::move(d);
    }
    return r;
}

ComplexRational laurent_coeff(const Laurent& a, long k) {
    auto it = a.find(k);
    return it == a.end() ? ComplexRational(0) : it->second;
}

ComplexRational laurent_residue(const Laurent& a) { return laurent_coeff(a, -1); }

}  // namespace logsew
