#include "logsew/coordchange.hpp"

#include <cmath>
#include <numbers>

namespace logsew {

using nlohmann::json;

Branch principal_branch(const Scalar& a1) {
    auto z = a1.to_complex();
    return {std::abs(z), std::arg(z)};
}

json CoordTransform::to_json() const {
    json a = json::array(), c = json::array();
    for (std::size_t k = 0; k < alpha_.prec(); ++k) a.push_back(scalar_to_json(alpha_[k]));
    for (const auto& x : c_) c.push_back(scalar_to_json(x));
    return {{"mode", mode() == Mode::Exact ? "exact" : "approx"}, {"alpha", a}, {"a1", scalar_to_json(a1_)}, {"c", c}};
}

CoordTransform CoordTransform::from_json(const json& j) {
    Mode mode = j.value("mode", std::string("exact")) == "exact" ? Mode::Exact : Mode::Approx;
    std::vector<Scalar> a;
    for (const auto& x : j.at("alpha")) a.push_back(scalar_from_json(x, mode));
    return extract_cn(PowerSeries(a, a.size()));
}

PowerSeries canonical_flow(const std::vector<Scalar>& c, std::size_t prec) {
    Mode mode = c.empty() ? Mode::Exact : c[0].mode();
    PowerSeries field = PowerSeries::constant(Scalar::zero(mode), prec);
    for (std::size_t n = 1; n <= c.size(); ++n) field.set(n + 1, c[n - 1]);
    PowerSeries term = PowerSeries::variable(prec, mode);
    PowerSeries sum = term;
    for (long k = 1; k < static_cast<long>(prec); ++k) {
        // the field vanishes to order 2, so each application raises the order
        PowerSeries d = term.derivative();
        term = (field * PowerSeries(d.coeffs(), prec)).scaled(Scalar(Rational(1, k)).to_mode(mode));
        sum += term;
    }
    return sum;
}

CoordTransform extract_cn(const PowerSeries& alpha) {
    if (alpha.prec() < 2) throw std::invalid_argument("series too short for a coordinate transform");
    if (!alpha[0].is_zero()) throw std::domain_error("coordinate transform must fix 0");
    Scalar a1 = alpha[1];
    if (a1.is_zero()) throw std::domain_error("alpha'(0) = 0");
    Mode mode = a1.mode();
    PowerSeries beta = alpha.scaled(Scalar::one(mode) / a1);
    std::size_t K = alpha.prec() - 2;
    std::vector<Scalar> c(K, Scalar::zero(mode));
    for (std::size_t m = 2; m <= K + 1; ++m) {
        std::vector<Scalar> partial(c.begin(), c.begin() + (m - 2));
        PowerSeries flow = canonical_flow(partial, m + 1);
        c[m - 2] = beta[m] - flow[m];
    }
    return CoordTransform(alpha, a1, std::move(c));
}

CoordTransform identity_transform(std::size_t order) {
    return extract_cn(PowerSeries::variable(order + 2));
}

PowerSeries gamma_series(const ComplexRational& z, std::size_t order) {
    if (z.is_zero()) throw std::domain_error("gamma_z needs z != 0");
    PowerSeries g = PowerSeries::constant(Scalar(0L), order + 1);
    ComplexRational zinv = ComplexRational(1) / z;
    ComplexRational p = zinv;
    for (std::size_t n = 1; n <= order; ++n) {
        p *= -zinv;  // (−1)^n / z^{n+1}
        g.set(n, Scalar(p));
    }
    return g;
}

Vector scale_L0(const VertexModule& m, const JordanChevalley& jc, const Scalar& a1, const Vector& v,
                std::optional<Branch> branch) {
    SpacePtr s = m.space();
    bool trivial = a1.is_exact() && a1.exact() == ComplexRational(1);
    // decide the arithmetic mode: exact iff every touched piece has integer weight and no log part
    bool exact = a1.is_exact() && v.mode() == Mode::Exact;
    std::map<std::size_t, Vector> by_piece;
    for (const auto& [i, c] : v.coeffs()) {
        std::size_t p = s->piece_of(i);
        auto it = by_piece.try_emplace(p, Vector(s, v.mode())).first;
        it->second.add(i, c);
        if (trivial) continue;
        bool nil = jc.nilpotent.block(p, p) != nullptr;
        if (!s->piece(p).weight[0].is_integer() || nil) exact = false;
    }
    if (trivial) return v;
    if (exact) {
        Vector r(s, Mode::Exact);
        for (const auto& [p, vp] : by_piece) r += vp.scaled(Scalar(pow(a1.exact(), s->piece(p).weight[0].to_long())));
        return r;
    }
    if (!branch) {
        if (a1.is_exact() && !a1.exact().is_real())
            throw MissingBranch("a1^L(0) needs a branch of log a1 for non-integral or logarithmic weights");
        if (!a1.is_exact() || a1.exact().re < 0)
            throw MissingBranch("a1^L(0) needs a branch of log a1 for non-integral or logarithmic weights");
        branch = principal_branch(a1);
    }
    auto z = a1.to_complex();
    if (std::abs(std::abs(z) - branch->modulus) > 1e-9 * (1 + std::abs(z)) ||
        std::abs(std::remainder(std::arg(z) - branch->arg, 2 * std::numbers::pi)) > 1e-9)
        throw std::invalid_argument("branch does not lie over a1");
    std::complex<double> loga(std::log(branch->modulus), branch->arg);
    Vector r(s, Mode::Approx);
    for (const auto& [p, vp] : by_piece) {
        Vector x = vp.mode() == Mode::Approx ? vp : Vector(s, Mode::Approx);
        if (vp.mode() == Mode::Exact)
            for (const auto& [i, c] : vp.coeffs()) x.add(i, c.to_mode(Mode::Approx));
        std::complex<double> lam = s->piece(p).weight[0].to_complex();
        Vector term = x, acc = x;
        for (int k = 1; k <= static_cast<int>(jc.nilpotency_index); ++k) {
            term = jc.nilpotent.apply(term).scaled(Scalar(loga / double(k)));
            if (term.is_zero()) break;
            acc += term;
        }
        r += acc.scaled(Scalar(std::exp(lam * loga)));
    }
    return r;
}

Vector apply_U(const CoordTransform& t, const VertexModule& m, const JordanChevalley& jc, const Vector& v,
               std::optional<Branch> branch) {
    Mode mode = (t.mode() == Mode::Approx || v.mode() == Mode::Approx) ? Mode::Approx : Mode::Exact;
    Vector x(v.space(), mode);
    for (const auto& [i, c] : v.coeffs()) x.add(i, c.to_mode(mode));
    // exp(Σ c_n L(n)) terminates: each L(n), n > 0, lowers the weight
    Vector term = x, sum = x;
    for (long k = 1; !term.is_zero(); ++k) {
        Vector next(v.space(), mode);
        for (std::size_t n = 1; n <= t.order(); ++n) {
            const Scalar& cn = t.c()[n - 1];
            if (cn.is_zero()) continue;
            next += m.virasoro(static_cast<long>(n), term).scaled(cn.to_mode(mode));
        }
        term = next.scaled(Scalar(Rational(1, k)).to_mode(mode));
        sum += term;
        if (k > 10000) throw std::runtime_error("exp(Σ c_n L(n)) failed to terminate");
    }
    return scale_L0(m, jc, t.a1().to_mode(mode), sum, branch);
}

Vector apply_U(const CoordTransform& t, const VertexModule& m, const Vector& v, std::optional<Branch> branch) {
    return apply_U(t, m, m.jc(), v, branch);
}

PowerSeries FamilyOfTransforms::at(const Scalar& zeta, std::size_t prec) const {
    Mode mode = zeta.mode();
    PowerSeries p = PowerSeries::constant(Scalar::zero(mode), prec);
    std::map<int, Scalar> col;
    for (const auto& [ij, r] : coeffs) {
        auto [i, j] = ij;
        if (j < 0 || static_cast<std::size_t>(j) >= prec) continue;
        Scalar zp = Scalar::one(mode);
        for (int k = 0; k < i; ++k) zp *= zeta;
        p.set(j, p[j] + r.to_mode(mode) * zp);
    }
    return p;
}

void FamilyOfTransforms::check_identity_at_zero() const {
    for (const auto& [ij, r] : coeffs) {
        auto [i, j] = ij;
        if (i != 0) continue;
        bool ok = (j == 1) ? r == Scalar::one(r.mode()) : r.is_zero();
        if (!ok) throw std::invalid_argument("family is not the identity at zeta = 0");
    }
    if (!coeffs.count({0, 1})) throw std::invalid_argument("family is not the identity at zeta = 0");
}

FamilyDerivative family_derivative(const FamilyOfTransforms& rho, const VertexModule& m, const Vector& v) {
    rho.check_identity_at_zero();
    // (1/k!) ∂_ζ ∂_z^k ρ(0,0) = r_{1k}
    Vector out(v.space(), v.mode());
    for (const auto& [ij, r] : rho.coeffs) {
        auto [i, k] = ij;
        if (i != 1 || k < 1) continue;
        out += m.virasoro(k - 1, v).scaled(r.to_mode(v.mode()));
    }
    return {out, out.scaled(Scalar(-1L).to_mode(v.mode()))};
}

PowerSeries schwarzian(const PowerSeries& f) {
    PowerSeries d1 = f.derivative();
    if (d1[0].is_zero()) throw std::domain_error("Schwarzian needs a non-vanishing derivative");
    PowerSeries d2 = d1.derivative(), d3 = d2.derivative();
    PowerSeries inv = d1.reciprocal();
    PowerSeries r2 = d2 * inv;
    Mode mode = f.mode();
    return d3 * inv - (r2 * r2).scaled(Scalar(Rational(3, 2)).to_mode(mode));
}

void vlaurent_axpy(VLaurent& x, const ComplexRational& c, const VLaurent& y) {
    for (const auto& [k, v] : y) {
        fock_axpy(x[k], c, v);
        if (x[k].empty()) x.erase(k);
    }
}

VLaurent vlaurent_mul(const Laurent& h, const VLaurent& u) {
    VLaurent r;
    for (const auto& [i, c] : h)
        for (const auto& [j, v] : u) {
            fock_axpy(r[i + j], c, v);
            if (r[i + j].empty()) r.erase(i + j);
        }
    return r;
}

VLaurent vlaurent_derivative(const VLaurent& u) {
    VLaurent r;
    for (const auto& [k, v] : u)
        if (k != 0) r[k - 1] = fock_scaled(v, ComplexRational(k));
    return r;
}

VLaurent lie_local(const Laurent& h, const std::vector<ComplexRational>& g, const std::vector<VLaurent>& dtau_u,
                   const VLaurent& u, bool with_form) {
    if (g.size() != dtau_u.size()) throw std::invalid_argument("one tau-derivative series per constant g_j");
    VLaurent r = vlaurent_mul(h, vlaurent_derivative(u));
    for (std::size_t j = 0; j < g.size(); ++j) vlaurent_axpy(r, g[j], dtau_u[j]);
    int top = 0;
    for (const auto& [k, v] : u) top = std::max(top, max_weight(v));
    Laurent dh = h;
    Rational kfact(1);
    for (int k = 1; k <= top + 1; ++k) {
        dh = laurent_derivative(dh);
        kfact *= Rational(k);
        VLaurent lu;
        for (const auto& [j, v] : u) {
            FockVector x = v_virasoro(k - 1, v);
            if (!x.empty()) lu[j] = std::move(x);
        }
        vlaurent_axpy(r, ComplexRational(Rational(-1) / kfact), vlaurent_mul(dh, lu));
    }
    if (with_form) vlaurent_axpy(r, ComplexRational(1), vlaurent_mul(laurent_derivative(h), u));
    return r;
}

}  // namespace logsew
