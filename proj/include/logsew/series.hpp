#pragma once

#include <complex>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "logsew/scalar.hpp"

namespace logsew {

struct ArityMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotDiagonal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Monomial {
    std::vector<ComplexRational> exps;
    std::vector<unsigned> logs;
};

// lexicographic by (Re e, Im e, l) per variable
bool operator<(const Monomial& a, const Monomial& b);
bool operator==(const Monomial& a, const Monomial& b);

struct EvalPoint {
    double modulus;
    double arg;
};

class MultiLogSeries {
public:
    using TermMap = std::map<Monomial, Scalar>;

    explicit MultiLogSeries(std::size_t num_vars = 1, Mode mode = Mode::Exact,
                            std::optional<Rational> cutoff = std::nullopt);

    static MultiLogSeries constant(std::size_t num_vars, const Scalar& c,
                                   std::optional<Rational> cutoff = std::nullopt);
    // single term c * q^exps (log q)^logs
    static MultiLogSeries term(const Monomial& m, const Scalar& c,
                               std::optional<Rational> cutoff = std::nullopt);

    std::size_t num_vars() const { return num_vars_; }
    Mode mode() const { return mode_; }
    const std::optional<Rational>& cutoff() const { return cutoff_; }
    const TermMap& terms() const { return terms_; }
    unsigned max_log_power() const;
    bool is_zero() const { return terms_.empty(); }
    bool within_cutoff(const Monomial& m) const;

    Scalar coefficient(const Monomial& m) const;
    void add_term(const Monomial& m, const Scalar& c);

    MultiLogSeries truncated(const Rational& cutoff) const;
    MultiLogSeries to_mode(Mode m) const;
    MultiLogSeries scaled(const Scalar& c) const;

    MultiLogSeries& operator+=(const MultiLogSeries& o);
    MultiLogSeries& operator-=(const MultiLogSeries& o);
    friend MultiLogSeries operator+(MultiLogSeries a, const MultiLogSeries& b) { return a += b; }
    friend MultiLogSeries operator-(MultiLogSeries a, const MultiLogSeries& b) { return a -= b; }
    friend MultiLogSeries operator*(const MultiLogSeries& a, const MultiLogSeries& b);
    friend bool operator==(const MultiLogSeries& a, const MultiLogSeries& b);

    std::complex<double> eval(const std::vector<EvalPoint>& point) const;

    nlohmann::json to_json() const;
    static MultiLogSeries from_json(const nlohmann::json& j);
    void write_csv(std::ostream& os) const;

private:
    void check_compatible(const MultiLogSeries& o) const;

    std::size_t num_vars_;
    Mode mode_;
    std::optional<Rational> cutoff_;
    TermMap terms_;
};

MultiLogSeries series_add(const MultiLogSeries& a, const MultiLogSeries& b);
MultiLogSeries series_mul(const MultiLogSeries& a, const MultiLogSeries& b);
MultiLogSeries diagonal_restrict(const MultiLogSeries& a);
std::complex<double> series_eval(const MultiLogSeries& a, const std::vector<EvalPoint>& point);

// max over coefficients of max(|Re|, |Im|) of a − b; exact mode only
Rational max_deviation(const MultiLogSeries& a, const MultiLogSeries& b);
double max_deviation_approx(const MultiLogSeries& a, const MultiLogSeries& b);

Rational max_abs(const ComplexRational& z);

nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);
nlohmann::json complex_rational_to_json(const ComplexRational& z);
ComplexRational complex_rational_from_json(const nlohmann::json& j);
nlohmann::json scalar_to_json(const Scalar& s);
Scalar scalar_from_json(const nlohmann::json& j, Mode mode);

}  // namespace logsew
