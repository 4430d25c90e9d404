#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <variant>

#include <gmpxx.h>

namespace logsew {

using Rational = mpq_class;

struct ModeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ComplexRational {
    Rational re;
    Rational im;

    ComplexRational() = default;
    ComplexRational(long r) : re(r) {}
    ComplexRational(const Rational& r) : re(r) { re.canonicalize(); }
    ComplexRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {
        re.canonicalize();
        im.canonicalize();
    }

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    bool is_real() const { return sgn(im) == 0; }
    bool is_integer() const { return sgn(im) == 0 && re.get_den() == 1; }
    long to_long() const;
    ComplexRational conj() const { return {re, -im}; }
    std::complex<double> to_complex() const { return {re.get_d(), im.get_d()}; }
    std::string str() const;

    ComplexRational& operator+=(const ComplexRational& o);
    ComplexRational& operator-=(const ComplexRational& o);
    ComplexRational& operator*=(const ComplexRational& o);
    ComplexRational& operator/=(const ComplexRational& o);
};

ComplexRational operator+(ComplexRational a, const ComplexRational& b);
ComplexRational operator-(ComplexRational a, const ComplexRational& b);
ComplexRational operator*(ComplexRational a, const ComplexRational& b);
ComplexRational operator/(ComplexRational a, const ComplexRational& b);
ComplexRational operator-(const ComplexRational& a);
bool operator==(const ComplexRational& a, const ComplexRational& b);
inline bool operator!=(const ComplexRational& a, const ComplexRational& b) { return !(a == b); }
// (Re, Im) lexicographic
bool operator<(const ComplexRational& a, const ComplexRational& b);
ComplexRational pow(const ComplexRational& a, long n);
ComplexRational parse_complex_rational(const std::string& s);

enum class Mode { Exact, Approx };

class Scalar {
public:
    Scalar() : v_(ComplexRational{}) {}
    Scalar(long n) : v_(ComplexRational(n)) {}
    Scalar(int n) : v_(ComplexRational(long(n))) {}
    Scalar(const Rational& r) : v_(ComplexRational(r)) {}
    Scalar(ComplexRational c) : v_(std::move(c)) {}
    Scalar(std::complex<double> z) : v_(z) {}

    static Scalar zero(Mode m) { return m == Mode::Exact ? Scalar() : Scalar(std::complex<double>{}); }
    static Scalar one(Mode m) { return m == Mode::Exact ? Scalar(1L) : Scalar(std::complex<double>{1.0, 0.0}); }

    Mode mode() const { return v_.index() == 0 ? Mode::Exact : Mode::Approx; }
    bool is_exact() const { return v_.index() == 0; }
    const ComplexRational& exact() const;
    std::complex<double> approx() const { return to_complex(); }
    std::complex<double> to_complex() const;
    Scalar to_mode(Mode m) const;
    bool is_zero() const;
    double abs() const { return std::abs(to_complex()); }
    std::string str() const;

    Scalar& operator+=(const Scalar& o);
    Scalar& operator-=(const Scalar& o);
    Scalar& operator*=(const Scalar& o);
    Scalar& operator/=(const Scalar& o);

    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
    friend Scalar operator-(const Scalar& a);
    friend bool operator==(const Scalar& a, const Scalar& b);
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

private:
    std::variant<ComplexRational, std::complex<double>> v_;
};

Rational factorial(unsigned n);
Rational binomial(long n, long k);  // generalized: n may be negative

}  // namespace logsew
