#include "logsew/series.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace logsew {

using nlohmann::json;

bool operator<(const Monomial& a, const Monomial& b) {
    std::size_t n = std::min(a.exps.size(), b.exps.size());
    for (std::size_t j = 0; j < n; ++j) {
        int c = cmp(a.exps[j].re, b.exps[j].re);
        if (c != 0) return c < 0;
        c = cmp(a.exps[j].im, b.exps[j].im);
        if (c != 0) return c < 0;
        if (a.logs[j] != b.logs[j]) return a.logs[j] < b.logs[j];
    }
    return a.exps.size() < b.exps.size();
}

bool operator==(const Monomial& a, const Monomial& b) { return a.exps == b.exps && a.logs == b.logs; }

MultiLogSeries::MultiLogSeries(std::size_t num_vars, Mode mode, std::optional<Rational> cutoff)
    : num_vars_(num_vars), mode_(mode), cutoff_(std::move(cutoff)) {
    if (num_vars_ == 0) throw ArityMismatch("series needs at least one variable");
}

MultiLogSeries MultiLogSeries::constant(std::size_t num_vars, const Scalar& c, std::optional<Rational> cutoff) {
    MultiLogSeries s(num_vars, c.mode(), std::move(cutoff));
    s.add_term({std::vector<ComplexRational>(num_vars), std::vector<unsigned>(num_vars, 0)}, c);
    return s;
}

MultiLogSeries MultiLogSeries::term(const Monomial& m, const Scalar& c, std::optional<Rational> cutoff) {
    MultiLogSeries s(m.exps.size(), c.mode(), std::move(cutoff));
    s.add_term(m, c);
    return s;
}

unsigned MultiLogSeries::max_log_power() const {
    unsigned r = 0;
    for (const auto& [m, c] : terms_)
        for (unsigned l : m.logs) r = std::max(r, l);
    return r;
}

bool MultiLogSeries::within_cutoff(const Monomial& m) const {
    if (!cutoff_) return true;
    return std::all_of(m.exps.begin(), m.exps.end(), [&](const ComplexRational& e) { return e.re <= *cutoff_; });
}

Scalar MultiLogSeries::coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Scalar::zero(mode_) : it->second;
}

void MultiLogSeries::add_term(const Monomial& m, const Scalar& c) {
    if (m.exps.size() != num_vars_ || m.logs.size() != num_vars_) throw ArityMismatch("monomial arity");
    if (c.mode() != mode_) throw ModeMismatch("term mode differs from series mode");
    if (!within_cutoff(m) || c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

MultiLogSeries MultiLogSeries::truncated(const Rational& cutoff) const {
    Rational c = cutoff_ ? std::min(*cutoff_, cutoff) : cutoff;
    MultiLogSeries r(num_vars_, mode_, c);
    for (const auto& [m, v] : terms_) r.add_term(m, v);
    return r;
}

MultiLogSeries MultiLogSeries::to_mode(Mode m) const {
    MultiLogSeries r(num_vars_, m, cutoff_);
    for (const auto& [k, v] : terms_) r.add_term(k, v.to_mode(m));
    return r;
}

MultiLogSeries MultiLogSeries::scaled(const Scalar& c) const {
    MultiLogSeries r(num_vars_, mode_, cutoff_);
    for (const auto& [k, v] : terms_) r.add_term(k, v * c);
    return r;
}

void MultiLogSeries::check_compatible(const MultiLogSeries& o) const {
    if (num_vars_ != o.num_vars_) throw ArityMismatch("series arity mismatch");
    if (mode_ != o.mode_) throw ModeMismatch("series mode mismatch");
}

namespace {
std::optional<Rational> min_cutoff(const std::optional<Rational>& a, const std::optional<Rational>& b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
}
}  // namespace

MultiLogSeries& MultiLogSeries::operator+=(const MultiLogSeries& o) {
    check_compatible(o);
    auto c = min_cutoff(cutoff_, o.cutoff_);
    if (c != cutoff_) *this = truncated(*c);
    for (const auto& [m, v] : o.terms_) add_term(m, v);
    return *this;
}

MultiLogSeries& MultiLogSeries::operator-=(const MultiLogSeries& o) {
    check_compatible(o);
    auto c = min_cutoff(cutoff_, o.cutoff_);
    if (c != cutoff_) *this = truncated(*c);
    for (const auto& [m, v] : o.terms_) add_term(m, -v);
    return *this;
}

MultiLogSeries operator*(const MultiLogSeries& a, const MultiLogSeries& b) {
    a.check_compatible(b);
    MultiLogSeries r(a.num_vars_, a.mode_, min_cutoff(a.cutoff_, b.cutoff_));
    for (const auto& [ma, va] : a.terms_)
        for (const auto& [mb, vb] : b.terms_) {
            Monomial m{ma.exps, ma.logs};
            for (std::size_t j = 0; j < a.num_vars_; ++j) {
                m.exps[j] += mb.exps[j];
                m.logs[j] += mb.logs[j];
            }
            r.add_term(m, va * vb);
        }
    return r;
}

bool operator==(const MultiLogSeries& a, const MultiLogSeries& b) {
    return a.num_vars_ == b.num_vars_ && a.mode_ == b.mode_ && a.terms_ == b.terms_;
}

std::complex<double> MultiLogSeries::eval(const std::vector<EvalPoint>& point) const {
    if (point.size() != num_vars_) throw ArityMismatch("evaluation point arity");
    std::vector<std::complex<double>> logq;
    for (const auto& p : point) {
        if (!(p.modulus > 0)) throw std::domain_error("evaluation at modulus 0");
        logq.emplace_back(std::log(p.modulus), p.arg);
    }
    std::complex<double> total;
    for (const auto& [m, c] : terms_) {
        std::complex<double> t = c.to_complex();
        for (std::size_t j = 0; j < num_vars_; ++j) {
            t *= std::exp(m.exps[j].to_complex() * logq[j]);
            if (m.logs[j]) t *= std::pow(logq[j], static_cast<int>(m.logs[j]));
        }
        total += t;
    }
    return total;
}

MultiLogSeries series_add(const MultiLogSeries& a, const MultiLogSeries& b) { return a + b; }
MultiLogSeries series_mul(const MultiLogSeries& a, const MultiLogSeries& b) { return a * b; }

std::complex<double> series_eval(const MultiLogSeries& a, const std::vector<EvalPoint>& point) {
    return a.eval(point);
}

MultiLogSeries diagonal_restrict(const MultiLogSeries& a) {
    if (a.num_vars() != 2) throw ArityMismatch("diagonal_restrict needs two variables");
    // F(q1,q2) = f(q1 q2): each q^E (log q)^L of f contributes C(L,l1) q1^E q2^E log^l1 q1 log^l2 q2
    std::map<std::pair<ComplexRational, unsigned>, Scalar> total;
    for (const auto& [m, c] : a.terms()) {
        if (m.exps[0] != m.exps[1])
            throw NotDiagonal("term q1^" + m.exps[0].str() + " q2^" + m.exps[1].str() + " depends on q1/q2");
        unsigned L = m.logs[0] + m.logs[1];
        total.try_emplace({m.exps[0], L}, Scalar::zero(a.mode()));
    }
    MultiLogSeries r(1, a.mode(), a.cutoff());
    for (auto& [key, val] : total) {
        const auto& [E, L] = key;
        Scalar lead = a.coefficient({{E, E}, {L, 0}});
        for (unsigned l1 = 0; l1 <= L; ++l1) {
            Scalar expect = lead * Scalar(binomial(L, l1));
            Scalar got = a.coefficient({{E, E}, {l1, L - l1}});
            bool ok = a.mode() == Mode::Exact ? got == expect
                                              : std::abs(got.to_complex() - expect.to_complex()) <=
                                                    1e-9 * (1 + std::abs(expect.to_complex()));
            if (!ok) throw NotDiagonal("log coefficients at exponent " + E.str() + " are not binomial in log(q1 q2)");
        }
        r.add_term({{E}, {L}}, lead);
    }
    return r;
}

Rational max_abs(const ComplexRational& z) { return std::max(abs(z.re), abs(z.im)); }

Rational max_deviation(const MultiLogSeries& a, const MultiLogSeries& b) {
    MultiLogSeries d = a - b;
    Rational m(0);
    for (const auto& [k, v] : d.terms()) m = std::max(m, max_abs(v.exact()));
    return m;
}

double max_deviation_approx(const MultiLogSeries& a, const MultiLogSeries& b) {
    MultiLogSeries d = a.to_mode(Mode::Approx) - b.to_mode(Mode::Approx);
    double m = 0;
    for (const auto& [k, v] : d.terms()) m = std::max(m, v.abs());
    return m;
}

namespace {
json integer_to_json(const mpz_class& z) {
    if (z.fits_slong_p()) return json(z.get_si());
    return json(z.get_str());
}

mpz_class integer_from_json(const json& j) {
    if (j.is_number_integer()) return mpz_class(std::to_string(j.get<long long>()));
    if (j.is_string()) return mpz_class(j.get<std::string>());
    throw std::invalid_argument("expected integer, got " + j.dump());
}
}  // namespace

json rational_to_json(const Rational& r) { return json::array({integer_to_json(r.get_num()), integer_to_json(r.get_den())}); }

Rational rational_from_json(const json& j) {
    if (j.is_array() && j.size() == 2) {
        Rational r(integer_from_json(j[0]), integer_from_json(j[1]));
        if (sgn(r.get_den()) == 0) throw std::invalid_argument("zero denominator");
        r.canonicalize();
        return r;
    }
    if (j.is_number_integer()) return Rational(integer_from_json(j));
    if (j.is_string()) {
        auto z = parse_complex_rational(j.get<std::string>());
        if (!z.is_real()) throw std::invalid_argument("expected real rational");
        return z.re;
    }
    throw std::invalid_argument("expected rational pair, got " + j.dump());
}

json complex_rational_to_json(const ComplexRational& z) {
    return json::array({integer_to_json(z.re.get_num()), integer_to_json(z.re.get_den()),
                        integer_to_json(z.im.get_num()), integer_to_json(z.im.get_den())});
}

ComplexRational complex_rational_from_json(const json& j) {
    if (j.is_array() && j.size() == 4) {
        return {rational_from_json(json::array({j[0], j[1]})), rational_from_json(json::array({j[2], j[3]}))};
    }
    if (j.is_array() && j.size() == 2 && j[0].is_array()) return {rational_from_json(j[0]), rational_from_json(j[1])};
    if (j.is_string()) return parse_complex_rational(j.get<std::string>());
    return {rational_from_json(j), Rational(0)};
}

json scalar_to_json(const Scalar& s) {
    if (s.is_exact()) return json::array({rational_to_json(s.exact().re), rational_to_json(s.exact().im)});
    return json::array({s.to_complex().real(), s.to_complex().imag()});
}

Scalar scalar_from_json(const json& j, Mode mode) {
    if (mode == Mode::Approx) {
        if (j.is_number()) return Scalar(std::complex<double>(j.get<double>(), 0.0));
        if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
            return Scalar(std::complex<double>(j[0].get<double>(), j[1].get<double>()));
        return Scalar(complex_rational_from_json(j)).to_mode(Mode::Approx);
    }
    if (j.is_number_float()) throw std::invalid_argument("floating literal in exact mode: " + j.dump());
    return Scalar(complex_rational_from_json(j));
}

json MultiLogSeries::to_json() const {
    json terms = json::array();
    for (const auto& [m, c] : terms_) {
        json exps = json::array();
        for (const auto& e : m.exps) exps.push_back(complex_rational_to_json(e));
        terms.push_back({{"exponents", exps}, {"log_powers", m.logs}, {"coeff", scalar_to_json(c)}});
    }
    return {{"num_vars", num_vars_},
            {"mode", mode_ == Mode::Exact ? "exact" : "approx"},
            {"cutoff", cutoff_ ? rational_to_json(*cutoff_) : json(nullptr)},
            {"max_log_power", max_log_power()},
            {"terms", terms}};
}

MultiLogSeries MultiLogSeries::from_json(const json& j) {
    Mode mode = j.value("mode", std::string("exact")) == "exact" ? Mode::Exact : Mode::Approx;
    std::optional<Rational> cutoff;
    if (j.contains("cutoff") && !j["cutoff"].is_null()) cutoff = rational_from_json(j["cutoff"]);
    MultiLogSeries s(j.at("num_vars").get<std::size_t>(), mode, cutoff);
    for (const auto& t : j.at("terms")) {
        Monomial m;
        for (const auto& e : t.at("exponents")) m.exps.push_back(complex_rational_from_json(e));
        m.logs = t.at("log_powers").get<std::vector<unsigned>>();
        json c = t.at("coeff");
        Scalar v = mode == Mode::Exact && c.is_array() && c.size() == 2 && c[0].is_array()
                       ? Scalar(ComplexRational(rational_from_json(c[0]), rational_from_json(c[1])))
                       : scalar_from_json(c, mode);
        s.add_term(m, v);
    }
    return s;
}

void MultiLogSeries::write_csv(std::ostream& os) const {
    for (std::size_t j = 0; j < num_vars_; ++j) os << "exp" << j << "_re,exp" << j << "_im,";
    for (std::size_t j = 0; j < num_vars_; ++j) os << "log" << j << ",";
    os << "coeff_re,coeff_im\n";
    auto old = os.precision(17);
    for (const auto& [m, c] : terms_) {
        for (const auto& e : m.exps) os << e.re.get_str() << "," << e.im.get_str() << ",";
        for (unsigned l : m.logs) os << l << ",";
        if (c.is_exact()) os << c.exact().re.get_str() << "," << c.exact().im.get_str() << "\n";
        else os << c.to_complex().real() << "," << c.to_complex().imag() << "\n";
    }
    os.precision(old);
}

}  // namespace logsew
