#include "logsew/transport.hpp"

#include <cmath>
#include <numbers>

namespace logsew {

using nlohmann::json;

namespace {

Rational dev(const Scalar& s) { return s.is_exact() ? max_abs(s.exact()) : Rational(s.abs()); }

Scalar inv_int(long n, Mode mode) { return Scalar(Rational(1, n)).to_mode(mode); }

Scalar tensor_eval(const Block& phi, const TensorVector& x) { return x.empty() ? Scalar::zero(phi.mode()) : phi.eval(x); }

}  // namespace

DeformationField DeformationField::autonomous(const std::vector<std::map<long, Scalar>>& h) {
    Mode mode = Mode::Exact;
    for (const auto& s : h)
        for (const auto& [k, c] : s)
            if (c.mode() == Mode::Approx) mode = Mode::Approx;
    DeformationField f(h.size(), mode);
    for (std::size_t i = 0; i < h.size(); ++i)
        for (const auto& [k, c] : h[i]) f.set(i, k, {c});
    return f;
}

void DeformationField::set(std::size_t slot, long k, std::vector<Scalar> q_coeffs) {
    if (slot >= slots_.size()) throw std::out_of_range("deformation field slot out of range");
    for (auto& c : q_coeffs) c = c.to_mode(mode_);
    while (!q_coeffs.empty() && q_coeffs.back().is_zero()) q_coeffs.pop_back();
    if (q_coeffs.empty())
        slots_[slot].erase(k);
    else
        slots_[slot][k] = std::move(q_coeffs);
}

Scalar DeformationField::coefficient(std::size_t slot, long k, std::size_t m) const {
    const auto& s = slots_.at(slot);
    auto it = s.find(k);
    if (it == s.end() || m >= it->second.size()) return Scalar::zero(mode_);
    return it->second[m];
}

bool DeformationField::is_zero() const {
    for (const auto& s : slots_)
        if (!s.empty()) return false;
    return true;
}

bool DeformationField::is_autonomous() const {
    for (const auto& s : slots_)
        for (const auto& [k, c] : s)
            if (c.size() > 1) return false;
    return true;
}

std::optional<long> DeformationField::min_k() const {
    std::optional<long> r;
    for (const auto& s : slots_)
        if (!s.empty()) r = r ? std::min(*r, s.begin()->first) : s.begin()->first;
    return r;
}

long DeformationField::headroom(std::size_t order) const {
    auto k = min_k();
    if (!k) return 0;
    // L(k−1) raises weight by 1 − k
    return static_cast<long>(order) * std::max(0L, 1 - *k);
}

TensorVector DeformationField::apply(const TensorModule& tm, std::size_t m, const TensorVector& w) const {
    if (tm.size() != slots_.size()) throw std::invalid_argument("deformation field needs one slot per module");
    TensorVector r;
    for (std::size_t i = 0; i < slots_.size(); ++i)
        for (const auto& [k, coeffs] : slots_[i]) {
            if (m >= coeffs.size() || coeffs[m].is_zero()) continue;
            tensor_axpy(r, coeffs[m], tm.virasoro(i, k - 1, w, Truncation::Strict));
        }
    return r;
}

json DeformationField::to_json() const {
    json slots = json::array();
    for (const auto& s : slots_) {
        json js = json::array();
        for (const auto& [k, c] : s) {
            json cs = json::array();
            for (const auto& x : c) cs.push_back(scalar_to_json(x));
            js.push_back({{"k", k}, {"q_coeffs", cs}});
        }
        slots.push_back(js);
    }
    return {{"mode", mode_ == Mode::Exact ? "exact" : "float"}, {"slots", slots}};
}

DeformationField DeformationField::from_json(const json& j) {
    Mode mode = j.value("mode", std::string("exact")) == "exact" ? Mode::Exact : Mode::Approx;
    const json& slots = j.at("slots");
    DeformationField f(slots.size(), mode);
    for (std::size_t i = 0; i < slots.size(); ++i)
        for (const auto& e : slots[i]) {
            std::vector<Scalar> c;
            for (const auto& x : e.at("q_coeffs")) c.push_back(scalar_from_json(x, mode));
            f.set(i, e.at("k").get<long>(), std::move(c));
        }
    return f;
}

Transport::Transport(const Block& phi0, OperatorFamily a) : phi0_(phi0), a_(std::move(a)), mode_(phi0.mode()) {}

Transport::Transport(const Block& phi0, const DeformationField& field) : phi0_(phi0), mode_(phi0.mode()) {
    auto tm = phi0.modules();
    a_ = [tm, field](std::size_t m, const TensorVector& w) { return field.apply(*tm, m, w); };
}

const TensorVector& Transport::a_on(std::size_t m, const TensorIndex& w) const {
    auto key = std::make_pair(m, w);
    auto it = amemo_.find(key);
    if (it != amemo_.end()) return it->second;
    TensorVector e{{w, Scalar::one(mode_)}};
    return amemo_.emplace(key, a_(m, e)).first->second;
}

Scalar Transport::coefficient(std::size_t n, const TensorIndex& w) const {
    if (n == 0) return phi0_(w);
    auto key = std::make_pair(n, w);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    // n φ̂_n(w) = −Σ_{l<n} φ̂_l(A_{n−l−1} w)
    Scalar s = Scalar::zero(mode_);
    for (std::size_t l = 0; l < n; ++l) {
        const TensorVector& x = a_on(n - l - 1, w);
        for (const auto& [idx, c] : x) s += c * coefficient(l, idx);
    }
    s = -(s * inv_int(static_cast<long>(n), mode_));
    memo_.emplace(key, s);
    return s;
}

Scalar Transport::coefficient(std::size_t n, const TensorVector& x) const {
    Scalar s = Scalar::zero(mode_);
    for (const auto& [idx, c] : x) s += c * coefficient(n, idx);
    return s;
}

Scalar Transport::eval(const TensorVector& x, const Scalar& q, std::size_t order) const {
    Scalar s = Scalar::zero(mode_), qn = Scalar::one(mode_);
    for (std::size_t n = 0; n <= order; ++n) {
        s += coefficient(n, x) * qn;
        qn *= q;
    }
    return s;
}

MultiLogSeries TransportSeries::series(const TensorIndex& w) const {
    const auto& c = at(w);
    Mode mode = c.empty() ? Mode::Exact : c[0].mode();
    MultiLogSeries s(1, mode, Rational(static_cast<long>(order)));
    for (std::size_t n = 0; n < c.size(); ++n)
        if (!c[n].is_zero()) s.add_term(Monomial{{ComplexRational(static_cast<long>(n))}, {0}}, c[n]);
    return s;
}

Scalar TransportSeries::eval(const TensorIndex& w, const Scalar& q) const {
    const auto& c = at(w);
    Scalar s = Scalar::zero(q.mode());
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * q + *it;
    return s;
}

json TransportSeries::to_json() const {
    json entries = json::array();
    for (const auto& [w, c] : coeffs) {
        json cs = json::array();
        for (const auto& x : c) cs.push_back(scalar_to_json(x));
        entries.push_back({{"index", w}, {"coeffs", cs}});
    }
    return {{"order", order}, {"entries", entries}};
}

TransportSeries TransportSeries::from_json(const json& j) {
    TransportSeries t;
    t.order = j.at("order").get<std::size_t>();
    for (const auto& e : j.at("entries")) {
        std::vector<Scalar> c;
        for (const auto& x : e.at("coeffs")) {
            // exact entries are rational pairs, floats are plain numbers
            bool approx = x.is_array() && !x.empty() && x[0].is_number();
            c.push_back(scalar_from_json(x, approx ? Mode::Approx : Mode::Exact));
        }
        t.coeffs[e.at("index").get<TensorIndex>()] = std::move(c);
    }
    return t;
}

void TransportSeries::write_csv(std::ostream& os) const {
    os << "index,n,re,im\n";
    os.precision(17);
    for (const auto& [w, c] : coeffs) {
        std::string idx;
        for (std::size_t i = 0; i < w.size(); ++i) idx += (i ? ":" : "") + std::to_string(w[i]);
        for (std::size_t n = 0; n < c.size(); ++n) {
            auto z = c[n].approx();
            os << idx << ',' << n << ',' << z.real() << ',' << z.imag() << '\n';
        }
    }
}

TransportSeries transport_recursion(const Block& phi0, const OperatorFamily& a, std::size_t order,
                                    const std::vector<TensorIndex>& ws) {
    Transport t(phi0, a);
    TransportSeries s;
    s.order = order;
    for (const auto& w : ws) {
        std::vector<Scalar> c;
        for (std::size_t n = 0; n <= order; ++n) c.push_back(t.coefficient(n, w));
        s.coeffs[w] = std::move(c);
    }
    return s;
}

TransportSeries transport_recursion(const Block& phi0, const DeformationField& field, std::size_t order,
                                    const std::vector<TensorIndex>& ws) {
    auto tm = phi0.modules();
    return transport_recursion(
        phi0, [tm, &field](std::size_t m, const TensorVector& w) { return field.apply(*tm, m, w); }, order, ws);
}

TensorOperator field_operator(const TensorModule& tm, const DeformationField& field) {
    if (!field.is_autonomous()) throw std::invalid_argument("field depends on q");
    return [&tm, field](const TensorVector& w) { return field.apply(tm, 0, w); };
}

std::vector<Scalar> autonomous_oracle_coefficients(const Block& phi0, const TensorOperator& a, std::size_t order,
                                                   const TensorIndex& w) {
    Mode mode = phi0.mode();
    std::vector<Scalar> out;
    TensorVector x{{w, Scalar::one(mode)}};
    for (std::size_t n = 0; n <= order; ++n) {
        if (n > 0) {
            TensorVector y;
            tensor_axpy(y, -inv_int(static_cast<long>(n), mode), a(x));
            x = std::move(y);
        }
        out.push_back(tensor_eval(phi0, x));
    }
    return out;
}

Scalar autonomous_oracle(const Block& phi0, const TensorOperator& a, const Scalar& q, std::size_t order,
                         const TensorIndex& w) {
    Mode mode = phi0.mode();
    TensorVector x{{w, Scalar::one(mode)}}, sum = x;
    for (std::size_t n = 1; n <= order; ++n) {
        TensorVector y;
        tensor_axpy(y, -(q * inv_int(static_cast<long>(n), mode)), a(x));
        x = std::move(y);
        tensor_axpy(sum, Scalar::one(mode), x);
    }
    return tensor_eval(phi0, sum);
}

CoordTransform field_transform(const std::map<long, std::vector<Scalar>>& slot, const Scalar& q, std::size_t order) {
    Mode mode = q.mode();
    std::size_t len = order;
    for (const auto& [k, c] : slot) {
        if (k <= 1) throw std::invalid_argument("coordinate flow needs h_k = 0 for k <= 1");
        if (c.size() > 1) throw std::invalid_argument("coordinate flow needs an autonomous field");
        len = std::max(len, static_cast<std::size_t>(k - 1));
    }
    // z^{n+1}∂_z ↔ L(n), so c_n = q h_{n+1}
    std::vector<Scalar> c(len, Scalar::zero(mode));
    for (const auto& [k, h] : slot) c[k - 2] = q * h[0].to_mode(mode);
    return CoordTransform(canonical_flow(c, len + 2), Scalar::one(mode), c);
}

TensorVector apply_field_U(const TensorModule& tm, const DeformationField& field, const Scalar& q, const TensorVector& w) {
    if (tm.size() != field.num_slots()) throw std::invalid_argument("deformation field needs one slot per module");
    TensorVector cur = w;
    for (std::size_t i = 0; i < tm.size(); ++i) {
        if (field.slot(i).empty()) continue;
        const VertexModule& m = *tm.factor(i);
        CoordTransform t = field_transform(field.slot(i), q, 1);
        std::map<std::size_t, Vector> cache;
        TensorVector next;
        for (const auto& [idx, c] : cur) {
            auto it = cache.find(idx[i]);
            if (it == cache.end())
                it = cache.emplace(idx[i], apply_U(t, m, Vector::basis(m.space(), idx[i], c.mode()))).first;
            for (const auto& [j, cj] : it->second.coeffs()) {
                TensorIndex k = idx;
                k[i] = j;
                tensor_add(next, k, c * cj);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

Rational transport_coordinate_check(const Block& phi0, const DeformationField& field, const std::vector<TensorIndex>& ws,
                                    const std::vector<Scalar>& qs, std::size_t order) {
    Transport t(phi0, field);
    Rational worst(0);
    for (const auto& q : qs)
        for (const auto& w : ws) {
            TensorVector e{{w, Scalar::one(phi0.mode())}};
            TensorVector y = apply_field_U(*phi0.modules(), field, q, e);
            worst = std::max(worst, dev(t.eval(y, q, order) - phi0(w)));
        }
    return worst;
}

Rational transport_section_check(const Block& phi0, const DeformationField& field, const std::vector<SectionDatum>& sections,
                              const std::vector<TensorIndex>& ws, std::size_t order) {
    if (!field.is_autonomous()) throw std::invalid_argument("field depends on q");
    const TensorModule& tm = *phi0.modules();
    for (std::size_t i = 0; i < tm.size(); ++i)
        for (const auto& [k, c] : field.slot(i))
            if (k <= 1) throw std::invalid_argument("coordinate flow needs h_k = 0 for k <= 1");
    Mode mode = phi0.mode();
    Transport t(phi0, field);
    Rational worst(0);
    for (const auto& s : sections)
        for (const auto& w : ws) {
            TensorVector e{{w, Scalar::one(mode)}}, y;
            for (std::size_t i = 0; i < tm.size(); ++i)
                tensor_axpy(y, Scalar::one(mode), residue_action(s, phi0.sphere(), i, tm, e));
            worst = std::max(worst, dev(tensor_eval(phi0, y)));
            // U(β_q) = exp(qA): the q^n coefficient is Σ_{l+k=n} φ̂_l(A^k y/k!)
            std::vector<TensorVector> powers{y};
            for (std::size_t k = 1; k <= order; ++k) {
                TensorVector z;
                tensor_axpy(z, inv_int(static_cast<long>(k), mode), field.apply(tm, 0, powers.back()));
                powers.push_back(std::move(z));
            }
            for (std::size_t n = 1; n <= order; ++n) {
                Scalar c = Scalar::zero(mode);
                for (std::size_t l = 0; l <= n; ++l) c += t.coefficient(l, powers[n - l]);
                worst = std::max(worst, dev(c));
            }
        }
    return worst;
}

void FlowSpec::validate() const {
    if (!(inner > 0 && inner < outer)) throw std::invalid_argument("flow annulus needs 0 < inner < outer");
    if (!(step > 0)) throw std::invalid_argument("flow step must be positive");
    if (!(margin >= 0 && margin < 1)) throw std::invalid_argument("flow margin must lie in [0, 1)");
}

bool FlowSpec::is_autonomous() const {
    for (const auto& [k, c] : h)
        for (std::size_t m = 1; m < c.size(); ++m)
            if (c[m] != 0.0) return false;
    return true;
}

std::complex<double> FlowSpec::field(std::complex<double> z, std::complex<double> q) const {
    std::complex<double> r = 0;
    for (const auto& [k, c] : h) {
        std::complex<double> hk = 0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) hk = hk * q + *it;
        r += hk * std::pow(z, static_cast<int>(k));
    }
    return r;
}

json FlowSpec::to_json() const {
    json hs = json::array();
    for (const auto& [k, c] : h) {
        json cs = json::array();
        for (const auto& x : c) cs.push_back({x.real(), x.imag()});
        hs.push_back({{"k", k}, {"q_coeffs", cs}});
    }
    return {{"h", hs}, {"inner", inner}, {"outer", outer}, {"step", step}, {"margin", margin}};
}

FlowSpec FlowSpec::from_json(const json& j) {
    FlowSpec s;
    for (const auto& e : j.at("h")) {
        std::vector<std::complex<double>> c;
        for (const auto& x : e.at("q_coeffs")) {
            if (x.is_number())
                c.emplace_back(x.get<double>(), 0.0);
            else
                c.emplace_back(x.at(0).get<double>(), x.at(1).get<double>());
        }
        s.h[e.at("k").get<long>()] = std::move(c);
    }
    s.inner = j.value("inner", s.inner);
    s.outer = j.value("outer", s.outer);
    s.step = j.value("step", s.step);
    s.margin = j.value("margin", s.margin);
    s.validate();
    return s;
}

std::vector<FlowPoint> flow_trajectory(const FlowSpec& spec, std::complex<double> z0, std::complex<double> q_target) {
    spec.validate();
    const double lo = spec.inner * (1 - spec.margin), hi = spec.outer * (1 + spec.margin);
    auto check = [&](std::complex<double> b, double t) {
        double r = std::abs(b);
        if (!(r >= lo && r <= hi))
            throw DomainEscape("flow left the annulus at t = " + std::to_string(t) + ", |beta| = " + std::to_string(r));
    };
    check(z0, 0);
    std::vector<FlowPoint> traj{{0.0, 0.0, z0}};
    double len = std::abs(q_target);
    if (len == 0) return traj;
    // dβ/dt = q_target h(β, t q_target)
    auto f = [&](double t, std::complex<double> b) { return q_target * spec.field(b, t * q_target); };
    double dt = std::min(1.0, spec.step / len);
    double t = 0;
    std::complex<double> b = z0;
    while (t < 1) {
        double h = std::min(dt, 1 - t);
        while (true) {
            auto k1 = f(t, b);
            auto k2 = f(t + h / 2, b + h / 2 * k1);
            auto k3 = f(t + h / 2, b + h / 2 * k2);
            auto k4 = f(t + h, b + h * k3);
            auto nb = b + h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (std::isfinite(nb.real()) && std::isfinite(nb.imag())) {
                b = nb;
                break;
            }
            h /= 2;
            if (h * len < 1e-14) throw StepUnderflow("flow step underflow at t = " + std::to_string(t));
        }
        t = (1 - t - h < 1e-15) ? 1.0 : t + h;
        check(b, t);
        traj.push_back({t, t * q_target, b});
    }
    return traj;
}

std::complex<double> flow_integrate(const FlowSpec& spec, std::complex<double> z0, std::complex<double> q_target) {
    return flow_trajectory(spec, z0, q_target).back().beta;
}

void write_trajectory_csv(std::ostream& os, const std::vector<FlowPoint>& traj) {
    os << "step,t,q_re,q_im,beta_re,beta_im\n";
    os.precision(17);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& p = traj[i];
        os << i << ',' << p.t << ',' << p.q.real() << ',' << p.q.imag() << ',' << p.beta.real() << ',' << p.beta.imag()
           << '\n';
    }
}

std::vector<std::complex<double>> deformed_circle(const FlowSpec& spec, double r, std::complex<double> q, std::size_t samples) {
    std::vector<std::complex<double>> out;
    out.reserve(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        double th = 2 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(samples);
        out.push_back(flow_integrate(spec, std::polar(r, th), q));
    }
    return out;
}

long winding_number(const std::vector<std::complex<double>>& curve, std::complex<double> point, double tol) {
    if (curve.size() < 3) throw std::invalid_argument("winding number needs at least three samples");
    double total = 0;
    for (std::size_t j = 0; j < curve.size(); ++j) {
        auto a = curve[j] - point, b = curve[(j + 1) % curve.size()] - point;
        if (std::abs(a) < tol) throw std::domain_error("point lies on the curve");
        total += std::arg(b / a);
    }
    return std::lround(total / (2 * std::numbers::pi));
}

double flow_group_law_deviation(const FlowSpec& spec, std::complex<double> z, std::complex<double> q1,
                                std::complex<double> q2) {
    if (!spec.is_autonomous()) throw std::invalid_argument("group law needs an autonomous flow");
    auto lhs = flow_integrate(spec, z, q1 + q2);
    auto rhs = flow_integrate(spec, flow_integrate(spec, z, q2), q1);
    return std::abs(lhs - rhs);
}

}  // namespace logsew
