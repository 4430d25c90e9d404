#include "logsew/scalar.hpp"

#include <cctype>
#include <sstream>

namespace logsew {

long ComplexRational::to_long() const {
    if (!is_integer()) throw std::domain_error("not an integer: " + str());
    if (!re.get_num().fits_slong_p()) throw std::overflow_error("integer too large");
    return re.get_num().get_si();
}

std::string ComplexRational::str() const {
    if (sgn(im) == 0) return re.get_str();
    std::ostringstream os;
    if (sgn(re) != 0) os << re.get_str() << (sgn(im) > 0 ? "+" : "");
    os << im.get_str() << "i";
    return os.str();
}

ComplexRational& ComplexRational::operator+=(const ComplexRational& o) {
    re += o.re;
    im += o.im;
    return *this;
}

ComplexRational& ComplexRational::operator-=(const ComplexRational& o) {
    re -= o.re;
    im -= o.im;
    return *this;
}

ComplexRational& ComplexRational::operator*=(const ComplexRational& o) {
    if (sgn(im) == 0 && sgn(o.im) == 0) {
        re *= o.re;
        return *this;
    }
    Rational r = re * o.re - im * o.im;
    Rational i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

ComplexRational& ComplexRational::operator/=(const ComplexRational& o) {
    if (o.is_zero()) throw std::domain_error("division by zero");
    if (sgn(o.im) == 0) {
        re /= o.re;
        im /= o.re;
        return *this;
    }
    Rational d = o.re * o.re + o.im * o.im;
    Rational r = (re * o.re + im * o.im) / d;
    Rational i = (im * o.re - re * o.im) / d;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

ComplexRational operator+(ComplexRational a, const ComplexRational& b) { return a += b; }
ComplexRational operator-(ComplexRational a, const ComplexRational& b) { return a -= b; }
ComplexRational operator*(ComplexRational a, const ComplexRational& b) { return a *= b; }
ComplexRational operator/(ComplexRational a, const ComplexRational& b) { return a /= b; }
ComplexRational operator-(const ComplexRational& a) { return {-a.re, -a.im}; }

bool operator==(const ComplexRational& a, const ComplexRational& b) { return a.re == b.re && a.im == b.im; }

bool operator<(const ComplexRational& a, const ComplexRational& b) {
    int c = cmp(a.re, b.re);
    if (c != 0) return c < 0;
    return cmp(a.im, b.im) < 0;
}

ComplexRational pow(const ComplexRational& a, long n) {
    if (n < 0) return pow(ComplexRational(1) / a, -n);
    ComplexRational r(1), b = a;
    while (n) {
        if (n & 1) r *= b;
        n >>= 1;
        if (n) b *= b;
    }
    return r;
}

// accepts "p/q", "p/q+r/si", "r/si", "i"
ComplexRational parse_complex_rational(const std::string& raw) {
    std::string s;
    for (char ch : raw)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) throw std::invalid_argument("empty rational");
    auto parse_real = [&](const std::string& t) {
        Rational r;
        if (r.set_str(t[0] == '+' ? t.substr(1) : t, 10) != 0) throw std::invalid_argument("bad rational: " + raw);
        r.canonicalize();
        return r;
    };
    if (s.back() != 'i') return {parse_real(s), Rational(0)};
    s.pop_back();
    std::size_t split = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e') {
            split = k;
            break;
        }
    std::string re_part = split == std::string::npos ? "" : s.substr(0, split);
    std::string im_part = split == std::string::npos ? s : s.substr(split);
    if (im_part.empty() || im_part == "+") im_part = "1";
    if (im_part == "-") im_part = "-1";
    return {re_part.empty() ? Rational(0) : parse_real(re_part), parse_real(im_part)};
}

const ComplexRational& Scalar::exact() const {
    if (v_.index() != 0) throw ModeMismatch("scalar is not exact");
    return std::get<0>(v_);
}

std::complex<double> Scalar::to_complex() const {
    if (v_.index() == 0) return std::get<0>(v_).to_complex();
    return std::get<1>(v_);
}

Scalar Scalar::to_mode(Mode m) const {
    if (m == mode()) return *this;
    if (m == Mode::Approx) return Scalar(to_complex());
    auto z = std::get<1>(v_);
    return Scalar(ComplexRational(Rational(z.real()), Rational(z.imag())));
}

bool Scalar::is_zero() const {
    if (v_.index() == 0) return std::get<0>(v_).is_zero();
    return std::get<1>(v_) == std::complex<double>{};
}

std::string Scalar::str() const {
    if (v_.index() == 0) return std::get<0>(v_).str();
    std::ostringstream os;
    os.precision(17);
    os << std::get<1>(v_);
    return os.str();
}

namespace {
void check_modes(const Scalar& a, const Scalar& b) {
    if (a.mode() != b.mode()) throw ModeMismatch("mixing exact and approximate scalars");
}
}  // namespace

Scalar& Scalar::operator+=(const Scalar& o) {
    check_modes(*this, o);
    if (v_.index() == 0) std::get<0>(v_) += std::get<0>(o.v_);
    else std::get<1>(v_) += std::get<1>(o.v_);
    return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
    check_modes(*this, o);
    if (v_.index() == 0) std::get<0>(v_) -= std::get<0>(o.v_);
    else std::get<1>(v_) -= std::get<1>(o.v_);
    return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
    check_modes(*this, o);
    if (v_.index() == 0) std::get<0>(v_) *= std::get<0>(o.v_);
    else std::get<1>(v_) *= std::get<1>(o.v_);
    return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) {
    check_modes(*this, o);
    if (v_.index() == 0) std::get<0>(v_) /= std::get<0>(o.v_);
    else std::get<1>(v_) /= std::get<1>(o.v_);
    return *this;
}

Scalar operator-(const Scalar& a) {
    if (a.v_.index() == 0) return Scalar(-std::get<0>(a.v_));
    return Scalar(-std::get<1>(a.v_));
}

bool operator==(const Scalar& a, const Scalar& b) {
    check_modes(a, b);
    if (a.v_.index() == 0) return std::get<0>(a.v_) == std::get<0>(b.v_);
    return std::get<1>(a.v_) == std::get<1>(b.v_);
}

Rational factorial(unsigned n) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), n);
    return Rational(f);
}

Rational binomial(long n, long k) {
    if (k < 0) return Rational(0);
    Rational r(1);
    for (long j = 0; j < k; ++j) {
        r *= Rational(n - j);
        r /= Rational(j + 1);
    }
    return r;
}

}  // namespace logsew
