#pragma once

#include <map>
#include <vector>

#include "logsew/scalar.hpp"

namespace logsew {

// Σ_{k<prec} c_k t^k, coefficients known below prec
class PowerSeries {
public:
    PowerSeries() = default;
    PowerSeries(std::vector<Scalar> coeffs, std::size_t prec);
    static PowerSeries variable(std::size_t prec, Mode mode = Mode::Exact);
    static PowerSeries constant(const Scalar& c, std::size_t prec);

    std::size_t prec() const { return prec_; }
    Mode mode() const { return mode_; }
    Scalar operator[](std::size_t k) const { return k < c_.size() ? c_[k] : Scalar::zero(mode_); }
    const std::vector<Scalar>& coeffs() const { return c_; }
    void set(std::size_t k, const Scalar& s);

    PowerSeries derivative() const;
    PowerSeries truncated(std::size_t prec) const;
    PowerSeries reciprocal() const;  // needs c_0 ≠ 0
    // this(g(t)), needs g(0) = 0
    PowerSeries compose(const PowerSeries& g) const;
    // series of this(η0 + t) for a polynomial this, known to prec
    PowerSeries shifted(const Scalar& eta0) const;
    bool equal_to_prec(const PowerSeries& o) const;

    PowerSeries& operator+=(const PowerSeries& o);
    PowerSeries& operator-=(const PowerSeries& o);
    friend PowerSeries operator+(PowerSeries a, const PowerSeries& b) { return a += b; }
    friend PowerSeries operator-(PowerSeries a, const PowerSeries& b) { return a -= b; }
    friend PowerSeries operator*(const PowerSeries& a, const PowerSeries& b);
    friend PowerSeries operator/(const PowerSeries& a, const PowerSeries& b) { return a * b.reciprocal(); }
    PowerSeries scaled(const Scalar& s) const;

private:
    std::vector<Scalar> c_;
    std::size_t prec_ = 0;
    Mode mode_ = Mode::Exact;
};

// finite Laurent polynomial with exact coefficients
using Laurent = std::map<long, ComplexRational>;

void laurent_add(Laurent& x, long k, const ComplexRational& c);
Laurent laurent_mul(const Laurent& a, const Laurent& b);
Laurent laurent_sum(const Laurent& a, const Laurent& b);
Laurent laurent_scaled(const Laurent& a, const ComplexRational& c);
Laurent laurent_derivative(const Laurent& a, unsigned times = 1);
ComplexRational laurent_residue(const Laurent& a);
ComplexRational laurent_coeff(const Laurent& a, long k);

}  // namespace logsew
