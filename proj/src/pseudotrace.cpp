#include "logsew/pseudotrace.hpp"

namespace logsew {

namespace {

AlgVec zero_alg(std::size_t n) { return AlgVec(n); }

void alg_axpy(AlgVec& x, const ComplexRational& c, const AlgVec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += c * y[i];
}

const ComplexRational& exact_of(const Scalar& s) {
    if (!s.is_exact()) throw ModeMismatch("pseudo-trace operations need exact mode");
    return s.exact();
}

Matrix block_or_zero(const GradedMap& g, std::size_t src, std::size_t dst, std::size_t rows, std::size_t cols) {
    const Matrix* b = g.block(src, dst);
    return b ? *b : Matrix(rows, cols);
}

nlohmann::json alg_to_json(const AlgVec& a) {
    auto j = nlohmann::json::array();
    for (const auto& c : a) j.push_back(complex_rational_to_json(c));
    return j;
}

AlgVec alg_from_json(const nlohmann::json& j) {
    AlgVec a;
    for (const auto& c : j) a.push_back(complex_rational_from_json(c));
    return a;
}

}  // namespace

FiniteAlgebra::FiniteAlgebra(std::vector<std::vector<AlgVec>> products, AlgVec unit)
    : products_(std::move(products)), unit_(std::move(unit)) {
    std::size_t n = unit_.size();
    if (n == 0) throw std::invalid_argument("algebra of dimension 0");
    if (products_.size() != n) throw std::invalid_argument("structure constants have wrong shape");
    for (const auto& row : products_) {
        if (row.size() != n) throw std::invalid_argument("structure constants have wrong shape");
        for (const auto& v : row)
            if (v.size() != n) throw std::invalid_argument("structure constants have wrong shape");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (mul(unit_, basis(i)) != basis(i) || mul(basis(i), unit_) != basis(i))
            throw std::invalid_argument("unit law fails for e_" + std::to_string(i));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                if (mul(product(i, j), basis(k)) != mul(basis(i), product(j, k)))
                    throw std::invalid_argument("associativity fails");
    }
}

FiniteAlgebra FiniteAlgebra::scalars() { return FiniteAlgebra({{{ComplexRational(1)}}}, {ComplexRational(1)}); }

FiniteAlgebra FiniteAlgebra::dual_numbers() {
    ComplexRational o(0), l(1);
    return FiniteAlgebra({{{l, o}, {o, l}}, {{o, l}, {o, o}}}, {l, o});
}

AlgVec FiniteAlgebra::mul(const AlgVec& a, const AlgVec& b) const {
    AlgVec r = zero_alg(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        if (a[i].is_zero()) continue;
        for (std::size_t j = 0; j < dim(); ++j)
            if (!b[j].is_zero()) alg_axpy(r, a[i] * b[j], products_[i][j]);
    }
    return r;
}

AlgVec FiniteAlgebra::basis(std::size_t i) const {
    AlgVec r = zero_alg(dim());
    r.at(i) = ComplexRational(1);
    return r;
}

nlohmann::json FiniteAlgebra::to_json() const {
    nlohmann::json p = nlohmann::json::array();
    for (const auto& row : products_) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& v : row) r.push_back(alg_to_json(v));
        p.push_back(r);
    }
    return {{"products", p}, {"unit", alg_to_json(unit_)}};
}

FiniteAlgebra FiniteAlgebra::from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j == "C") return scalars();
        if (j == "dual_numbers") return dual_numbers();
        throw std::invalid_argument("unknown algebra " + j.get<std::string>());
    }
    std::vector<std::vector<AlgVec>> p;
    for (const auto& row : j.at("products")) {
        std::vector<AlgVec> r;
        for (const auto& v : row) r.push_back(alg_from_json(v));
        p.push_back(std::move(r));
    }
    return FiniteAlgebra(std::move(p), alg_from_json(j.at("unit")));
}

SLF::SLF(const FiniteAlgebra& a, AlgVec values) : values_(std::move(values)) {
    if (values_.size() != a.dim()) throw std::invalid_argument("SLF arity");
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = i + 1; j < a.dim(); ++j)
            if ((*this)(a.product(i, j)) != (*this)(a.product(j, i)))
                throw std::invalid_argument("functional is not symmetric on e_" + std::to_string(i) + ", e_" +
                                            std::to_string(j));
}

ComplexRational SLF::operator()(const AlgVec& x) const {
    ComplexRational r;
    for (std::size_t i = 0; i < values_.size(); ++i) r += values_[i] * x.at(i);
    return r;
}

RightModuleStructure::RightModuleStructure(FiniteAlgebra alg, ModulePtr m, std::vector<GradedMap> action,
                                           std::vector<CertificateEntry> cert, Rational window)
    : alg_(std::move(alg)), m_(std::move(m)), action_(std::move(action)), cert_(std::move(cert)), window_(std::move(window)) {
    validate();
}

bool RightModuleStructure::in_window(std::size_t piece) const {
    return m_->space()->piece(piece).weight[0].re <= window_;
}

Vector RightModuleStructure::act(const Vector& v, const AlgVec& a) const {
    Vector r(v.space());
    for (std::size_t k = 0; k < a.size(); ++k)
        if (!a[k].is_zero()) r += action_[k].apply(v).scaled(Scalar(a[k]));
    return r;
}

AlgVec RightModuleStructure::eval_f(std::size_t i, const Vector& v) const {
    AlgVec r = zero_alg(alg_.dim());
    const auto& f = cert_.at(i).f;
    for (const auto& [m, c] : v.coeffs()) {
        auto it = f.find(m);
        if (it != f.end()) alg_axpy(r, exact_of(c), it->second);
    }
    return r;
}

void RightModuleStructure::validate() const {
    auto s = m_->space();
    std::size_t n = alg_.dim();
    if (action_.size() != n) throw std::invalid_argument("one action map per algebra basis element");
    for (const auto& g : action_) {
        if (!(*g.source() == *s) || !(*g.target() == *s)) throw std::invalid_argument("action maps must act on the module");
        if (g.mode() != Mode::Exact) throw ModeMismatch("pseudo-trace operations need exact mode");
        for (const auto& [key, b] : g.blocks())
            if (key.first != key.second) throw std::invalid_argument("action must preserve weights");
    }
    std::vector<std::size_t> window;
    for (std::size_t p = 0; p < s->num_pieces(); ++p)
        if (in_window(p))
            for (std::size_t a = 0; a < s->piece(p).dim; ++a) window.push_back(s->offset(p) + a);

    for (std::size_t m : window) {
        Vector e = Vector::basis(s, m);
        if (!(act(e, alg_.unit()) == e)) throw std::invalid_argument("unit does not act as the identity");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (!(act(act(e, alg_.basis(i)), alg_.basis(j)) == act(e, alg_.product(i, j))))
                    throw std::invalid_argument("action is not a right action");
    }
    for (std::size_t m : window) {
        Vector e = Vector::basis(s, m);
        Vector sum(s);
        for (std::size_t i = 0; i < cert_.size(); ++i) {
            AlgVec fi = eval_f(i, e);
            sum += act(cert_[i].x, fi);
            for (std::size_t a = 0; a < n; ++a)
                if (eval_f(i, act(e, alg_.basis(a))) != alg_.mul(fi, alg_.basis(a)))
                    throw InvalidCertificate("f_" + std::to_string(i) + " is not A-linear");
        }
        if (!(sum == e)) throw InvalidCertificate("Σ x_i f_i(m) ≠ m at basis vector " + std::to_string(m));
    }
}

Rational RightModuleStructure::commutation_defect(const std::vector<FockVector>& generators, long mode_range) const {
    auto s = m_->space();
    Rational worst = 0;
    for (std::size_t p = 0; p < s->num_pieces(); ++p) {
        if (!in_window(p)) continue;
        for (std::size_t a = 0; a < s->piece(p).dim; ++a) {
            Vector e = Vector::basis(s, s->offset(p) + a);
            for (const auto& rho : action_) {
                worst = std::max(worst, max_abs(m_->virasoro(0, rho.apply(e)) - rho.apply(m_->virasoro(0, e))));
                for (const auto& g : generators)
                    for (long k = -mode_range; k <= mode_range; ++k) {
                        Vector x = m_->mode(g, k, e);
                        // only compare inside the window, where ρ is known
                        Vector lhs = m_->mode(g, k, rho.apply(e)), rhs = rho.apply(x);
                        Vector d = lhs - rhs;
                        Vector dw(s);
                        for (const auto& [i, c] : d.coeffs())
                            if (in_window(s->piece_of(i))) dw.add(i, c);
                        worst = std::max(worst, max_abs(dw));
                    }
            }
        }
    }
    return worst;
}

bool RightModuleStructure::commutes(const GradedMap& t) const {
    auto s = m_->space();
    for (std::size_t p = 0; p < s->num_pieces(); ++p) {
        if (!in_window(p)) continue;
        for (std::size_t a = 0; a < s->piece(p).dim; ++a) {
            Vector e = Vector::basis(s, s->offset(p) + a);
            Vector te = t.apply(e);
            for (const auto& rho : action_)
                if (!(t.apply(rho.apply(e)) == rho.apply(te))) return false;
        }
    }
    return true;
}

RightModuleStructure RightModuleStructure::scalars(ModulePtr m, Rational window) {
    auto s = m->space();
    std::vector<CertificateEntry> cert;
    for (std::size_t p = 0; p < s->num_pieces(); ++p) {
        if (s->piece(p).weight[0].re > window) continue;
        for (std::size_t a = 0; a < s->piece(p).dim; ++a) {
            std::size_t g = s->offset(p) + a;
            cert.push_back({Vector::basis(s, g), {{g, {ComplexRational(1)}}}});
        }
    }
    return RightModuleStructure(FiniteAlgebra::scalars(), m, {GradedMap::identity(s)}, std::move(cert), std::move(window));
}

RightModuleStructure RightModuleStructure::from_generators(FiniteAlgebra alg, ModulePtr m, std::vector<GradedMap> action,
                                                           const std::vector<Vector>& gens,
                                                           const std::vector<AlgVec>& idempotents, Rational window) {
    auto s = m->space();
    std::size_t n = alg.dim();
    if (!idempotents.empty() && idempotents.size() != gens.size()) throw std::invalid_argument("one idempotent per generator");
    auto act = [&](const Vector& v, const AlgVec& a) {
        Vector r(s);
        for (std::size_t k = 0; k < n; ++k)
            if (!a[k].is_zero()) r += action.at(k).apply(v).scaled(Scalar(a[k]));
        return r;
    };
    // generators grouped by their piece
    std::map<std::size_t, std::vector<std::size_t>> by_piece;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        if (gens[i].is_zero()) throw std::invalid_argument("zero generator");
        std::size_t p = s->piece_of(gens[i].coeffs().begin()->first);
        for (const auto& [g, c] : gens[i].coeffs())
            if (s->piece_of(g) != p) throw std::invalid_argument("generators must be homogeneous");
        by_piece[p].push_back(i);
    }
    std::vector<CertificateEntry> cert;
    for (const auto& g : gens) cert.push_back({g, {}});
    for (std::size_t p = 0; p < s->num_pieces(); ++p) {
        if (s->piece(p).weight[0].re > window) continue;
        std::size_t d = s->piece(p).dim, off = s->offset(p);
        const auto& gi = by_piece[p];
        // columns x_i (e_i b_j)
        std::vector<std::pair<std::size_t, AlgVec>> cols;
        for (std::size_t i : gi) {
            AlgVec e = idempotents.empty() ? alg.unit() : idempotents[i];
            for (std::size_t j = 0; j < n; ++j) cols.push_back({i, alg.mul(e, alg.basis(j))});
        }
        Matrix a(d, cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) {
            Vector v = act(gens[cols[c].first], cols[c].second);
            for (const auto& [g, x] : v.coeffs()) a(g - off, c) = x;
        }
        for (std::size_t r = 0; r < d; ++r) {
            std::vector<Scalar> rhs(d, Scalar());
            rhs[r] = Scalar(1L);
            std::vector<Scalar> sol;
            try {
                sol = solve(a, rhs);
            } catch (const std::domain_error&) {
                throw InvalidCertificate("generators do not span the piece of weight " + weight_str(s->piece(p).weight));
            }
            for (std::size_t c = 0; c < cols.size(); ++c) {
                if (sol[c].is_zero()) continue;
                auto& f = cert[cols[c].first].f;
                auto it = f.try_emplace(off + r, zero_alg(n)).first;
                alg_axpy(it->second, sol[c].exact(), cols[c].second);
            }
        }
    }
    return RightModuleStructure(std::move(alg), std::move(m), std::move(action), std::move(cert), std::move(window));
}

nlohmann::json RightModuleStructure::to_json() const {
    nlohmann::json act = nlohmann::json::array();
    for (const auto& g : action_) act.push_back(g.to_json());
    nlohmann::json cert = nlohmann::json::array();
    for (const auto& c : cert_) {
        nlohmann::json x = nlohmann::json::array(), f = nlohmann::json::array();
        for (const auto& [i, v] : c.x.coeffs()) x.push_back({i, scalar_to_json(v)});
        for (const auto& [i, v] : c.f) f.push_back({i, alg_to_json(v)});
        cert.push_back({{"x", x}, {"f", f}});
    }
    return {{"algebra", alg_.to_json()}, {"action", act}, {"certificate", cert}, {"window", rational_to_json(window_)}};
}

RightModuleStructure RightModuleStructure::from_json(const nlohmann::json& j, ModulePtr m) {
    auto s = m->space();
    FiniteAlgebra alg = FiniteAlgebra::from_json(j.at("algebra"));
    Rational window = rational_from_json(j.at("window"));
    std::vector<GradedMap> act;
    for (const auto& g : j.at("action")) act.push_back(GradedMap::from_json(g, s, s));
    auto read_vec = [&](const nlohmann::json& x) {
        Vector v(s);
        for (const auto& e : x) v.add(e.at(0).get<std::size_t>(), scalar_from_json(e.at(1), Mode::Exact));
        return v;
    };
    if (j.contains("generators")) {
        std::vector<Vector> gens;
        for (const auto& g : j.at("generators")) gens.push_back(read_vec(g));
        std::vector<AlgVec> idem;
        if (j.contains("idempotents"))
            for (const auto& e : j.at("idempotents")) idem.push_back(alg_from_json(e));
        return from_generators(std::move(alg), m, std::move(act), gens, idem, window);
    }
    std::vector<CertificateEntry> cert;
    for (const auto& c : j.at("certificate")) {
        CertificateEntry e{read_vec(c.at("x")), {}};
        for (const auto& f : c.at("f")) e.f[f.at(0).get<std::size_t>()] = alg_from_json(f.at(1));
        cert.push_back(std::move(e));
    }
    return RightModuleStructure(std::move(alg), m, std::move(act), std::move(cert), window);
}

Scalar hs_trace(const SLF& w, const RightModuleStructure& r, const GradedMap& t) {
    if (t.mode() != Mode::Exact) throw ModeMismatch("pseudo-trace operations need exact mode");
    for (const auto& [key, b] : t.blocks())
        if (!r.in_window(key.first) || !r.in_window(key.second))
            throw std::invalid_argument("operator is not supported on the certified window");
    if (!r.commutes(t)) throw NotACommuting("operator does not commute with the algebra");
    ComplexRational total;
    for (std::size_t i = 0; i < r.certificate().size(); ++i) total += w(r.eval_f(i, t.apply(r.certificate()[i].x)));
    return Scalar(total);
}

const std::vector<Matrix>& End0A::basis(std::size_t lp, std::size_t mp) const {
    auto key = std::make_pair(lp, mp);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto s = r_->module()->space();
    std::size_t dl = s->piece(lp).dim, dm = s->piece(mp).dim;
    std::vector<SparseRow> rows;
    for (const auto& rho : r_->action()) {
        Matrix rl = block_or_zero(rho, lp, lp, dl, dl), rm = block_or_zero(rho, mp, mp, dm, dm);
        // (X Rμ − Rλ X)(i, c) = 0
        for (std::size_t i = 0; i < dl; ++i)
            for (std::size_t c = 0; c < dm; ++c) {
                std::map<std::size_t, Scalar> row;
                for (std::size_t k = 0; k < dm; ++k)
                    if (!rm(k, c).is_zero()) row[i * dm + k] += rm(k, c);
                for (std::size_t k = 0; k < dl; ++k)
                    if (!rl(i, k).is_zero()) row[k * dm + c] -= rl(i, k);
                SparseRow sr;
                for (const auto& [col, v] : row)
                    if (!v.is_zero()) sr.push_back({col, v});
                if (!sr.empty()) rows.push_back(std::move(sr));
            }
    }
    Nullspace ns = sparse_nullspace(rows, dl * dm);
    std::vector<Matrix> out;
    for (const auto& v : ns.basis) {
        Matrix x(dl, dm);
        for (std::size_t i = 0; i < dl; ++i)
            for (std::size_t c = 0; c < dm; ++c) x(i, c) = v[i * dm + c];
        out.push_back(std::move(x));
    }
    return cache_.emplace(key, std::move(out)).first->second;
}

GradedMap End0A::embed(std::size_t lp, std::size_t mp, const Matrix& x) const {
    auto s = r_->module()->space();
    GradedMap g(s, s);
    g.set_block(mp, lp, x);
    return g;
}

std::vector<Scalar> End0A::coordinates(std::size_t lp, std::size_t mp, const Matrix& x) const {
    const auto& b = basis(lp, mp);
    std::size_t dl = x.rows(), dm = x.cols();
    Matrix a(dl * dm, b.size());
    std::vector<Scalar> rhs(dl * dm);
    for (std::size_t i = 0; i < dl; ++i)
        for (std::size_t c = 0; c < dm; ++c) {
            rhs[i * dm + c] = x(i, c);
            for (std::size_t k = 0; k < b.size(); ++k) a(i * dm + c, k) = b[k](i, c);
        }
    try {
        return solve(a, rhs);
    } catch (const std::domain_error&) {
        throw NotACommuting("map between pieces " + std::to_string(mp) + " → " + std::to_string(lp) +
                            " does not commute with the algebra");
    }
}

GradedMap end0a_action(const VertexModule& m, const FockVector& v, Side side, long n, const GradedMap& t) {
    auto s = m.space();
    if (side == Side::First)
        return GradedMap::from_columns(s, s, [&](std::size_t j) { return m.mode(v, n, t.apply(Vector::basis(s, j))); });
    return GradedMap::from_columns(s, s, [&](std::size_t j) { return t.apply(m.adjoint_mode(v, n, Vector::basis(s, j))); });
}

Rational trace_block_check(const SLF& w, const RightModuleStructure& r, const std::vector<FockVector>& vs,
                           const Rational& lambda, long mode_range) {
    if (lambda > r.window()) throw std::invalid_argument("check window exceeds the certified window");
    const auto& m = *r.module();
    auto s = m.space();
    End0A end(r);
    std::vector<std::size_t> pieces;
    for (std::size_t p = 0; p < s->num_pieces(); ++p)
        if (s->piece(p).weight[0].re <= lambda) pieces.push_back(p);
    auto keep = [&](std::size_t a, std::size_t b) {
        return s->piece(a).weight[0].re <= lambda && s->piece(b).weight[0].re <= lambda;
    };
    Rational worst = 0;
    for (std::size_t lp : pieces)
        for (std::size_t mp : pieces)
            for (const auto& x : end.basis(lp, mp)) {
                GradedMap t = end.embed(lp, mp, x);
                for (const auto& v : vs)
                    for (const auto& [d, vd] : homogeneous_components(v)) {
                        std::vector<std::pair<FockVector, ComplexRational>> chain;
                        FockVector l = vd;
                        for (long k = 0; !l.empty(); ++k) {
                            chain.push_back({l, ComplexRational((d % 2 ? Rational(-1) : Rational(1)) / factorial(k))});
                            l = v_virasoro(1, l);
                        }
                        for (long n = -mode_range; n <= mode_range; ++n) {
                            GradedMap lhs(s, s);
                            for (std::size_t k = 0; k < chain.size(); ++k)
                                lhs += end0a_action(m, chain[k].first, Side::First, 2L * d - long(k) - n - 2, t)
                                           .scaled(Scalar(chain[k].second));
                            GradedMap rhs = end0a_action(m, vd, Side::Second, n, t);
                            Scalar a = hs_trace(w, r, lhs.restricted(keep));
                            Scalar b = hs_trace(w, r, rhs.restricted(keep));
                            worst = std::max(worst, max_abs(exact_of(a - b)));
                        }
                    }
            }
    return worst;
}

namespace {

Matrix phi_block(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const SpacePtr& s, std::size_t lp,
                 std::size_t mp, const TensorIndex& w) {
    std::size_t n = phi.modules()->size();
    if (dual_slot >= n || m_slot >= n || dual_slot == m_slot) throw std::invalid_argument("bad pseudo-sewing slots");
    if (w.size() + 2 != n) throw ArityMismatch("tensor index arity does not match the remaining slots");
    TensorIndex idx(n);
    for (std::size_t k = 0, o = 0; k < n; ++k)
        if (k != dual_slot && k != m_slot) idx[k] = w[o++];
    std::size_t dl = s->piece(lp).dim, dm = s->piece(mp).dim;
    Matrix b(dl, dm);
    for (std::size_t i = 0; i < dl; ++i)
        for (std::size_t j = 0; j < dm; ++j) {
            idx[dual_slot] = s->offset(lp) + i;
            idx[m_slot] = s->offset(mp) + j;
            b(i, j) = phi(idx).to_mode(Mode::Exact);
        }
    return b;
}

void check_slots(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const RightModuleStructure& r,
                 const Rational& cutoff) {
    if (phi.mode() != Mode::Exact) throw ModeMismatch("pseudo-trace operations need exact mode");
    if (cutoff > r.window()) throw std::invalid_argument("cutoff exceeds the certified window");
    const auto& mm = phi.modules()->factor(m_slot);
    const auto& dd = phi.modules()->factor(dual_slot);
    if (mm.get() != r.module().get()) throw std::invalid_argument("module slot does not carry the certified module");
    auto* c = dynamic_cast<const ContragredientModule*>(dd.get());
    if (!c || c->base().get() != mm.get()) throw std::invalid_argument("dual slot does not carry the contragredient");
}

std::vector<GradedMap> nilpotent_powers(const VertexModule& m) {
    auto jc = m.jc();
    std::vector<GradedMap> out{GradedMap::identity(m.space())};
    for (std::size_t k = 1; k < std::max<std::size_t>(jc.nilpotency_index, 1); ++k)
        out.push_back((jc.nilpotent * out.back()).scaled(Scalar(Rational(1, long(k)))));
    return out;  // N^k / k!
}

}  // namespace

MultiLogSeries pseudo_sew_raw(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const RawSLF& slf,
                              const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w) {
    check_slots(phi, dual_slot, m_slot, r, cutoff);
    const auto& m = *r.module();
    auto s = m.space();
    End0A end(r);
    auto npow = nilpotent_powers(m);
    MultiLogSeries out(1, Mode::Exact, cutoff);
    for (std::size_t lp = 0; lp < s->num_pieces(); ++lp) {
        if (s->piece(lp).weight[0].re > cutoff) continue;
        for (std::size_t mp = 0; mp < s->num_pieces(); ++mp) {
            if (s->piece(mp).weight[0].re > cutoff) continue;
            Matrix b = phi_block(phi, dual_slot, m_slot, s, lp, mp, w);
            if (!r.commutes(end.embed(lp, mp, b)))
                throw NotACommuting("P_λ φ♯ P_μ does not commute with the algebra for pieces " + std::to_string(lp) + ", " +
                                    std::to_string(mp));
        }
        GradedMap t = end.embed(lp, lp, phi_block(phi, dual_slot, m_slot, s, lp, lp, w));
        for (std::size_t k = 0; k < npow.size(); ++k) {
            Scalar c = slf((npow[k] * t).restricted([&](std::size_t a, std::size_t b) { return a == lp && b == lp; }));
            out.add_term(Monomial{{s->piece(lp).weight[0]}, {unsigned(k)}}, c);
        }
    }
    return out;
}

MultiLogSeries pseudo_sew(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const SLF& w,
                          const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w_idx) {
    return pseudo_sew_raw(phi, dual_slot, m_slot, [&](const GradedMap& t) { return hs_trace(w, r, t); }, r, cutoff, w_idx);
}

MultiLogSeries sew_with_trace(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const SLF& w,
                              const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w_idx) {
    check_slots(phi, dual_slot, m_slot, r, cutoff);
    const auto& m = *r.module();
    auto s = m.space();
    End0A end(r);
    auto npow = nilpotent_powers(m);
    MultiLogSeries out(2, Mode::Exact, cutoff);
    for (std::size_t lp = 0; lp < s->num_pieces(); ++lp) {
        if (s->piece(lp).weight[0].re > cutoff) continue;
        for (std::size_t mp = 0; mp < s->num_pieces(); ++mp) {
            if (s->piece(mp).weight[0].re > cutoff) continue;
            // φ(w ⊗ Ť_β) are the coordinates of P_λ φ♯(w) P_μ in the basis T_β
            auto coords = end.coordinates(lp, mp, phi_block(phi, dual_slot, m_slot, s, lp, mp, w_idx));
            const auto& basis = end.basis(lp, mp);
            for (std::size_t beta = 0; beta < basis.size(); ++beta) {
                if (coords[beta].is_zero()) continue;
                GradedMap t = end.embed(lp, mp, basis[beta]);
                for (std::size_t k1 = 0; k1 < npow.size(); ++k1)
                    for (std::size_t k2 = 0; k2 < npow.size(); ++k2) {
                        GradedMap x = npow[k1] * t * npow[k2];
                        x = x.restricted([&](std::size_t a, std::size_t b) { return a == mp && b == lp; });
                        Scalar val = hs_trace(w, r, x);
                        out.add_term(Monomial{{s->piece(lp).weight[0], s->piece(mp).weight[0]}, {unsigned(k1), unsigned(k2)}},
                                     coords[beta] * val);
                    }
            }
        }
    }
    return out;
}

Rational trace_sewing_check(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const SLF& w,
                     const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w_idx) {
    MultiLogSeries two = sew_with_trace(phi, dual_slot, m_slot, w, r, cutoff, w_idx);
    MultiLogSeries one = pseudo_sew(phi, dual_slot, m_slot, w, r, cutoff, w_idx);
    return max_deviation(diagonal_restrict(two), one);
}

EpsilonToy epsilon_toy(const ComplexRational& mu, int K, const Rational& window) {
    auto m = std::make_shared<FockModule>(mu, K, std::vector<std::vector<ComplexRational>>{{0, 0}, {1, 0}},
                                          std::vector<std::string>{"e0", "e1"});
    auto s = m->space();
    GradedMap eps = GradedMap::from_columns(s, s, [&](std::size_t j) {
        const FockState& st = m->state_of(j);
        Vector v(s);
        if (st.a == 0) v.add(m->index_of(FockState{st.parts, 1}), Scalar(1L));
        return v;
    });
    std::vector<Vector> gens;
    for (std::size_t j = 0; j < s->dim(); ++j)
        if (m->state_of(j).a == 0 && s->weight_of(j)[0].re <= window) gens.push_back(Vector::basis(s, j));
    auto r = RightModuleStructure::from_generators(FiniteAlgebra::dual_numbers(), m, {GradedMap::identity(s), eps}, gens, {},
                                                   window);
    return {m, std::move(r)};
}

}  // namespace logsew
