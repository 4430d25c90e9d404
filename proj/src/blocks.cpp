#include "logsew/blocks.hpp"

#include <algorithm>

namespace logsew {

using nlohmann::json;

MarkedSphere::MarkedSphere(std::vector<MarkedPoint> pts) : points(std::move(pts)) {
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i] == points[j]) throw std::invalid_argument("marked points must be distinct: " + points[i].str());
}

bool MarkedSphere::marks_infinity() const {
    return std::any_of(points.begin(), points.end(), [](const MarkedPoint& p) { return p.at_infinity; });
}

bool MarkedSphere::marks(const ComplexRational& z) const {
    return std::any_of(points.begin(), points.end(), [&](const MarkedPoint& p) { return !p.at_infinity && p.z == z; });
}

MarkedSphere sphere_Q() {
    return MarkedSphere({MarkedPoint::finite(ComplexRational(1)), MarkedPoint::infinity(), MarkedPoint::finite(ComplexRational(0))});
}

MarkedSphere sphere_N() { return MarkedSphere({MarkedPoint::infinity(), MarkedPoint::finite(ComplexRational(0))}); }

RationalFunction RationalFunction::monomial(long k) {
    RationalFunction f;
    if (k >= 0) {
        f.poly.assign(k + 1, ComplexRational(0));
        f.poly[k] = ComplexRational(1);
    } else {
        f.poles[ComplexRational(0)][static_cast<int>(-k)] = ComplexRational(1);
    }
    return f;
}

RationalFunction RationalFunction::pole(const ComplexRational& b, int order, const ComplexRational& r) {
    if (order < 1) throw std::invalid_argument("pole order must be positive");
    RationalFunction f;
    f.poles[b][order] = r;
    return f;
}

RationalFunction& RationalFunction::operator+=(const RationalFunction& o) {
    if (poly.size() < o.poly.size()) poly.resize(o.poly.size(), ComplexRational(0));
    for (std::size_t k = 0; k < o.poly.size(); ++k) poly[k] += o.poly[k];
    for (const auto& [b, tail] : o.poles)
        for (const auto& [j, r] : tail) {
            auto& x = poles[b][j];
            x += r;
            if (x.is_zero()) poles[b].erase(j);
        }
    for (auto it = poles.begin(); it != poles.end();) it = it->second.empty() ? poles.erase(it) : std::next(it);
    return *this;
}

RationalFunction RationalFunction::scaled(const ComplexRational& c) const {
    RationalFunction f;
    for (const auto& p : poly) f.poly.push_back(p * c);
    if (c.is_zero()) return f;
    for (const auto& [b, tail] : poles)
        for (const auto& [j, r] : tail) f.poles[b][j] = r * c;
    return f;
}

long RationalFunction::degree() const {
    for (long k = static_cast<long>(poly.size()) - 1; k >= 0; --k)
        if (!poly[k].is_zero()) return k;
    return -1;
}

Laurent RationalFunction::expand_at(const ComplexRational& a, long max_power) const {
    Laurent r;
    for (std::size_t k = 0; k < poly.size(); ++k) {
        if (poly[k].is_zero()) continue;
        for (long n = 0; n <= static_cast<long>(k) && n <= max_power; ++n)
            laurent_add(r, n, poly[k] * ComplexRational(binomial(k, n)) * pow(a, static_cast<long>(k) - n));
    }
    for (const auto& [b, tail] : poles)
        for (const auto& [j, c] : tail) {
            if (b == a) {
                if (-j <= max_power) laurent_add(r, -j, c);
                continue;
            }
            ComplexRational d = a - b;
            for (long n = 0; n <= max_power; ++n) laurent_add(r, n, c * ComplexRational(binomial(-j, n)) * pow(d, -j - n));
        }
    return r;
}

Laurent RationalFunction::expand_at_infinity(long max_power) const {
    Laurent r;
    for (std::size_t k = 0; k < poly.size(); ++k)
        if (-static_cast<long>(k) <= max_power) laurent_add(r, -static_cast<long>(k), poly[k]);
    for (const auto& [b, tail] : poles)
        for (const auto& [j, c] : tail)
            for (long n = 0; j + n <= max_power; ++n) {
                if (b.is_zero() && n > 0) break;
                laurent_add(r, j + n, c * ComplexRational(binomial(j + n - 1, n)) * pow(b, n));
            }
    return r;
}

json RationalFunction::to_json() const {
    json p = json::array(), q = json::array();
    for (const auto& c : poly) p.push_back(complex_rational_to_json(c));
    for (const auto& [b, tail] : poles)
        for (const auto& [j, c] : tail)
            q.push_back({{"at", complex_rational_to_json(b)}, {"order", j}, {"coeff", complex_rational_to_json(c)}});
    return {{"poly", p}, {"poles", q}};
}

RationalFunction RationalFunction::from_json(const json& j) {
    RationalFunction f;
    for (const auto& c : j.value("poly", json::array())) f.poly.push_back(complex_rational_from_json(c));
    for (const auto& p : j.value("poles", json::array()))
        f += pole(complex_rational_from_json(p.at("at")), p.at("order").get<int>(), complex_rational_from_json(p.at("coeff")));
    return f;
}

namespace {

std::vector<FockVector> l1_chain(const FockVector& v) {
    std::vector<FockVector> chain;
    for (FockVector x = v; !x.empty(); x = v_virasoro(1, x)) chain.push_back(x);
    return chain;
}

}  // namespace

void SectionDatum::validate(const MarkedSphere& s) const {
    for (const auto& [v, f] : entries) {
        for (const auto& [b, tail] : f.poles)
            if (!s.marks(b)) throw std::invalid_argument("section has a pole at the unmarked point " + b.str());
    }
    if (!s.marks_infinity()) {
        MarkedSphere probe = s;
        probe.points.push_back(MarkedPoint::infinity());
        if (!local_expansion(probe, probe.size() - 1, -1).empty())
            throw std::invalid_argument("section has a pole at the unmarked point inf");
    }
}

VLaurent SectionDatum::local_expansion(const MarkedSphere& s, std::size_t i, long max_power) const {
    const MarkedPoint& p = s.points.at(i);
    VLaurent x;
    for (const auto& [v, f] : entries) {
        if (!p.at_infinity) {
            for (const auto& [k, c] : f.expand_at(p.z, max_power)) vlaurent_axpy(x, c, VLaurent{{k, v}});
            continue;
        }
        // v ⊗ f dz = −Σ_k ((−1)^d / k!) ϖ^{2d−k−2} f(1/ϖ) L(1)^k v dϖ
        for (const auto& [d, vd] : homogeneous_components(v)) {
            auto chain = l1_chain(vd);
            for (std::size_t k = 0; k < chain.size(); ++k) {
                long shift = 2L * d - static_cast<long>(k) - 2;
                ComplexRational sign((d % 2 ? Rational(1) : Rational(-1)) / factorial(k));
                for (const auto& [e, c] : f.expand_at_infinity(max_power - shift))
                    vlaurent_axpy(x, sign * c, VLaurent{{e + shift, chain[k]}});
            }
        }
    }
    return x;
}

json SectionDatum::to_json() const {
    json e = json::array();
    for (const auto& [v, f] : entries) {
        json terms = json::array();
        for (const auto& [st, c] : v) terms.push_back({{"parts", st.parts}, {"coeff", complex_rational_to_json(c)}});
        e.push_back({{"v", terms}, {"f", f.to_json()}});
    }
    return {{"entries", e}};
}

SectionDatum SectionDatum::from_json(const json& j) {
    SectionDatum s;
    for (const auto& e : j.at("entries")) {
        FockVector v;
        for (const auto& t : e.at("v")) {
            FockVector part = oscillator_state(t.at("parts").get<Partition>(), complex_rational_from_json(t.at("coeff")));
            fock_axpy(v, ComplexRational(1), part);
        }
        s.entries.emplace_back(std::move(v), RationalFunction::from_json(e.at("f")));
    }
    return s;
}

Vector residue_action_local(const VertexModule& m, const VLaurent& x, const Vector& w, Truncation t) {
    Vector r(w.space(), w.mode());
    for (const auto& [k, v] : x) r += m.mode(v, k, w, t);
    return r;
}

namespace {

int section_top_weight(const SectionDatum& s) {
    int d = 0;
    for (const auto& [v, f] : s.entries) d = std::max(d, max_weight(v));
    return d;
}

}  // namespace

Vector residue_action(const SectionDatum& s, const MarkedSphere& sph, std::size_t i, const VertexModule& m, const Vector& w,
                      Truncation t) {
    long top = m.max_mode_index(section_top_weight(s), w);
    return residue_action_local(m, s.local_expansion(sph, i, top), w, t);
}

TensorVector residue_action(const SectionDatum& s, const MarkedSphere& sph, std::size_t i, const TensorModule& tm,
                            const TensorVector& w, Truncation t) {
    if (sph.size() != tm.size()) throw std::invalid_argument("one module per marked point");
    const VertexModule& m = *tm.factor(i);
    TensorVector r;
    std::map<std::size_t, Vector> cache;
    for (const auto& [idx, c] : w) {
        auto it = cache.find(idx[i]);
        if (it == cache.end())
            it = cache.emplace(idx[i], residue_action(s, sph, i, m, Vector::basis(m.space(), idx[i], c.mode()), t)).first;
        for (const auto& [j, cj] : it->second.coeffs()) {
            TensorIndex k = idx;
            k[i] = j;
            tensor_add(r, k, c * cj);
        }
    }
    return r;
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::MatrixElement: return "matrix-element";
        case Provenance::Pairing: return "pairing";
        case Provenance::PseudoTrace: return "pseudo-trace";
        case Provenance::User: return "user";
        case Provenance::Sewn: return "sewn";
    }
    return "user";
}

Provenance provenance_from_name(const std::string& s) {
    for (auto p : {Provenance::MatrixElement, Provenance::Pairing, Provenance::PseudoTrace, Provenance::User, Provenance::Sewn})
        if (provenance_name(p) == s) return p;
    throw std::invalid_argument("unknown block provenance " + s);
}

Block::Block(MarkedSphere sphere, std::shared_ptr<const TensorModule> modules, Provenance p, BlockGenerator gen, Mode mode)
    : sphere_(std::move(sphere)), modules_(std::move(modules)), prov_(p), gen_(std::move(gen)), mode_(mode) {
    if (sphere_.size() != modules_->size()) throw std::invalid_argument("one module per marked point");
}

Block::Block(MarkedSphere sphere, std::shared_ptr<const TensorModule> modules, std::map<TensorIndex, Scalar> table,
             std::vector<Rational> coverage, Mode mode)
    : sphere_(std::move(sphere)), modules_(std::move(modules)), prov_(Provenance::User), coverage_(std::move(coverage)),
      mode_(mode) {
    cache_->table = std::move(table);
    if (sphere_.size() != modules_->size()) throw std::invalid_argument("one module per marked point");
    if (coverage_.size() != modules_->size()) throw std::invalid_argument("one coverage bound per slot");
    for (const auto& [idx, c] : cache_->table)
        for (std::size_t k = 0; k < idx.size(); ++k)
            if (idx.size() != modules_->size() || idx[k] >= modules_->factor(k)->space()->dim())
                throw std::invalid_argument("block table index outside the module window");
}

Scalar Block::operator()(const TensorIndex& idx) const {
    if (idx.size() != modules_->size()) throw std::invalid_argument("block index has the wrong arity");
    for (std::size_t k = 0; k < idx.size(); ++k)
        if (idx[k] >= modules_->factor(k)->space()->dim())
            throw CoverageGap("block evaluated outside the module window in slot " + std::to_string(k));
    std::lock_guard lock(cache_->mu);
    if (auto it = cache_->table.find(idx); it != cache_->table.end()) return it->second;
    if (!gen_) {
        for (std::size_t k = 0; k < idx.size(); ++k)
            if (modules_->factor(k)->space()->weight_of(idx[k])[0].re > coverage_[k])
                throw CoverageGap("block table does not cover slot " + std::to_string(k) + " at weight " +
                                  modules_->factor(k)->space()->weight_of(idx[k])[0].str());
        return Scalar::zero(mode_);
    }
    Scalar v = gen_(idx).to_mode(mode_);
    cache_->table.emplace(idx, v);
    return v;
}

Scalar Block::eval(const TensorVector& w) const {
    Scalar r = Scalar::zero(mode_);
    for (const auto& [idx, c] : w) {
        if (c.is_zero()) continue;
        r += c.to_mode(mode_) * (*this)(idx);
    }
    return r;
}

std::map<TensorIndex, Scalar> Block::table() const {
    std::lock_guard lock(cache_->mu);
    return cache_->table;
}

json Block::to_json(const Rational& max_weight) const {
    std::vector<std::vector<std::size_t>> slots;
    for (const auto& f : modules_->factors()) {
        std::vector<std::size_t> ok;
        auto s = f->space();
        for (std::size_t i = 0; i < s->dim(); ++i)
            if (s->weight_of(i)[0].re <= max_weight) ok.push_back(i);
        slots.push_back(ok);
    }
    json entries = json::array();
    TensorIndex idx(slots.size());
    std::vector<std::size_t> pos(slots.size(), 0);
    bool empty = std::any_of(slots.begin(), slots.end(), [](const auto& s) { return s.empty(); });
    while (!empty) {
        for (std::size_t k = 0; k < slots.size(); ++k) idx[k] = slots[k][pos[k]];
        Scalar v = (*this)(idx);
        if (!v.is_zero()) entries.push_back({{"index", idx}, {"value", scalar_to_json(v)}});
        std::size_t k = 0;
        while (k < slots.size() && ++pos[k] == slots[k].size()) pos[k++] = 0;
        if (k == slots.size()) break;
    }
    json cov = json::array();
    for (std::size_t k = 0; k < slots.size(); ++k) cov.push_back(rational_to_json(max_weight));
    return {{"provenance", provenance_name(prov_)},
            {"mode", mode_ == Mode::Exact ? "exact" : "approx"},
            {"coverage", cov},
            {"entries", entries}};
}

Block Block::from_json(const json& j, MarkedSphere sphere, std::shared_ptr<const TensorModule> modules) {
    Mode mode = j.value("mode", std::string("exact")) == "exact" ? Mode::Exact : Mode::Approx;
    std::map<TensorIndex, Scalar> table;
    for (const auto& e : j.at("entries")) table[e.at("index").get<TensorIndex>()] = scalar_from_json(e.at("value"), mode);
    std::vector<Rational> cov;
    if (j.contains("coverage")) {
        for (const auto& c : j.at("coverage")) cov.push_back(rational_from_json(c));
    } else {
        for (const auto& f : modules->factors()) {
            auto s = f->space();
            cov.push_back(s->num_pieces() ? s->piece(s->num_pieces() - 1).weight[0].re : Rational(0));
        }
    }
    return Block(std::move(sphere), std::move(modules), std::move(table), std::move(cov), mode);
}

Scalar ward_residual(const Block& phi, const SectionDatum& s, const TensorIndex& w) {
    s.validate(phi.sphere());
    TensorVector base{{w, Scalar::one(phi.mode())}};
    TensorVector total;
    for (std::size_t i = 0; i < phi.sphere().size(); ++i)
        tensor_axpy(total, Scalar::one(phi.mode()), residue_action(s, phi.sphere(), i, *phi.modules(), base));
    return phi.eval(total);
}

Block matrix_element_block(std::shared_ptr<const FockModule> V, ModulePtr M) {
    auto tm = std::make_shared<TensorModule>(std::vector<ModulePtr>{V, contragredient(M), M});
    auto gen = [V, M](const TensorIndex& idx) {
        auto sv = V->space();
        auto sm = M->space();
        ComplexRational delta = sv->weight_of(idx[0])[0] + sm->weight_of(idx[2])[0] - sm->weight_of(idx[1])[0] - ComplexRational(1);
        if (!delta.is_integer()) return Scalar(0L);
        FockVector v = V->from_vector(Vector::basis(sv, idx[0]));
        return M->mode(v, delta.to_long(), Vector::basis(sm, idx[2])).get(idx[1]);
    };
    return Block(sphere_Q(), tm, Provenance::MatrixElement, gen);
}

Block pairing_block(ModulePtr M) {
    auto tm = std::make_shared<TensorModule>(std::vector<ModulePtr>{contragredient(M), M});
    return Block(sphere_N(), tm, Provenance::Pairing, [](const TensorIndex& idx) { return Scalar(idx[0] == idx[1] ? 1L : 0L); });
}

VLaurent lie_bracket_section(const FockVector& u, const Laurent& f, const FockVector& v, const Laurent& g) {
    const FockCore& core = vacuum_core();
    VLaurent r;
    int top = max_weight(u) + max_weight(v);
    Rational nfact(1);
    for (int n = 0; n < top; ++n) {
        if (n > 0) nfact *= Rational(n);
        FockVector un = core.Y(u, n, v);
        if (un.empty()) continue;
        Laurent coef = laurent_mul(laurent_scaled(laurent_derivative(f, n), ComplexRational(Rational(1) / nfact)), g);
        for (const auto& [k, c] : coef) vlaurent_axpy(r, c, VLaurent{{k, un}});
    }
    return r;
}

namespace {

VLaurent times(const FockVector& v, const Laurent& f) {
    VLaurent r;
    for (const auto& [k, c] : f) vlaurent_axpy(r, c, VLaurent{{k, v}});
    return r;
}

FockVector act(const FockCore& core, const VLaurent& x, const FockVector& w) {
    FockVector r;
    for (const auto& [k, v] : x) fock_axpy(r, ComplexRational(1), core.Y(v, k, w));
    return r;
}

Rational fock_max_abs(const FockVector& v) {
    Rational m(0);
    for (const auto& [s, c] : v) m = std::max(m, max_abs(c));
    return m;
}

}  // namespace

Rational max_abs(const Vector& v) {
    Rational m(0);
    for (const auto& [i, c] : v.coeffs()) m = std::max(m, c.is_exact() ? max_abs(c.exact()) : Rational(c.abs()));
    return m;
}

Rational commutator_check(const VertexModule& m, const FockVector& u, const Laurent& f, const FockVector& v, const Laurent& g,
                          const Vector& w) {
    VLaurent uf = times(u, f), vg = times(v, g), br = lie_bracket_section(u, f, v, g);
    if (auto fm = dynamic_cast<const FockModule*>(&m)) {
        // exact on the untruncated Fock space
        const FockCore& core = fm->core();
        FockVector x = fm->from_vector(w);
        FockVector d = act(core, uf, act(core, vg, x));
        fock_axpy(d, ComplexRational(-1), act(core, vg, act(core, uf, x)));
        fock_axpy(d, ComplexRational(-1), act(core, br, x));
        return fock_max_abs(d);
    }
    Vector d = residue_action_local(m, uf, residue_action_local(m, vg, w)) - residue_action_local(m, vg, residue_action_local(m, uf, w)) -
               residue_action_local(m, br, w);
    return max_abs(d);
}

Rational derivative_section_check(const VertexModule& m, const FockVector& v, const Laurent& f, const Vector& w) {
    VLaurent x = times(v, laurent_derivative(f));
    vlaurent_axpy(x, ComplexRational(1), times(v_virasoro(-1, v), f));
    if (auto fm = dynamic_cast<const FockModule*>(&m)) return fock_max_abs(act(fm->core(), x, fm->from_vector(w)));
    return max_abs(residue_action_local(m, x, w));
}

}  // namespace logsew
