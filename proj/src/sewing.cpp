#include "logsew/sewing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

namespace logsew {

std::size_t SewingPlan::num_slots() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.modules()->size();
    return n;
}

std::vector<std::size_t> SewingPlan::open_slots() const {
    std::vector<bool> used(num_slots(), false);
    for (const auto& p : pairs) {
        used.at(p.m_slot) = true;
        used.at(p.dual_slot) = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < used.size(); ++s)
        if (!used[s]) out.push_back(s);
    return out;
}

namespace {

std::pair<std::size_t, std::size_t> locate(const SewingPlan& plan, std::size_t slot) {
    std::size_t off = 0;
    for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
        std::size_t n = plan.blocks[b].modules()->size();
        if (slot < off + n) return {b, slot - off};
        off += n;
    }
    throw std::out_of_range("slot " + std::to_string(slot) + " out of range");
}

Mode plan_mode(const SewingPlan& plan) {
    for (const auto& b : plan.blocks)
        if (b.mode() == Mode::Approx) return Mode::Approx;
    for (const auto& m : plan.bases)
        for (const auto& [p, b] : m)
            if (b.mode() == Mode::Approx) return Mode::Approx;
    return Mode::Exact;
}

struct Insert {
    ComplexRational lambda;
    unsigned k;
    Vector x;
    Vector y;
};

std::vector<Insert> pair_inserts(const SewingPlan& plan, std::size_t j, Mode mode) {
    const auto& m = plan.module_at(plan.pairs[j].m_slot);
    auto s = m.space();
    auto jc = m.jc();
    const std::map<std::size_t, Matrix>* bases = j < plan.bases.size() ? &plan.bases[j] : nullptr;
    std::vector<Insert> out;
    for (std::size_t p = 0; p < s->num_pieces(); ++p) {
        const auto& piece = s->piece(p);
        const ComplexRational& lam = piece.weight[0];
        if (lam.re > plan.cutoff) continue;
        std::size_t off = s->offset(p);
        const Matrix* b = nullptr;
        Matrix binv;
        if (bases) {
            auto it = bases->find(p);
            if (it != bases->end()) {
                b = &it->second;
                binv = b->inverse();
            }
        }
        for (std::size_t a = 0; a < piece.dim; ++a) {
            Vector ma(s, mode), ya(s, mode);
            if (b) {
                for (std::size_t r = 0; r < piece.dim; ++r) {
                    Scalar c = (*b)(r, a).to_mode(mode);
                    if (!c.is_zero()) ma.add(off + r, c);
                    Scalar d = binv(a, r).to_mode(mode);
                    if (!d.is_zero()) ya.add(off + r, d);
                }
            } else {
                ma.add(off + a, Scalar::one(mode));
                ya.add(off + a, Scalar::one(mode));
            }
            Vector cur = ma;
            for (unsigned k = 0; k < std::max<std::size_t>(jc.nilpotency_index, 1) && !cur.is_zero(); ++k) {
                out.push_back({lam, k, cur.scaled(Scalar(Rational(1) / factorial(k)).to_mode(mode)), ya});
                cur = jc.nilpotent.apply(cur);
            }
        }
    }
    return out;
}

Scalar eval_blocks(const SewingPlan& plan, const std::vector<const Vector*>& sv, Mode mode) {
    Scalar total = Scalar::one(mode);
    std::size_t off = 0;
    for (const auto& b : plan.blocks) {
        std::size_t n = b.modules()->size();
        Scalar acc = Scalar::zero(mode);
        TensorIndex idx(n);
        std::function<void(std::size_t, const Scalar&)> rec = [&](std::size_t s, const Scalar& c) {
            if (s == n) {
                acc += c * b(idx).to_mode(mode);
                return;
            }
            for (const auto& [i, x] : sv[off + s]->coeffs()) {
                idx[s] = i;
                rec(s + 1, c * x.to_mode(mode));
            }
        };
        rec(0, Scalar::one(mode));
        if (acc.is_zero()) return Scalar::zero(mode);
        total *= acc;
        off += n;
    }
    return total;
}

}  // namespace

const VertexModule& SewingPlan::module_at(std::size_t slot) const {
    auto [b, l] = locate(*this, slot);
    return *blocks[b].modules()->factor(l);
}

void SewingPlan::validate() const {
    if (blocks.empty()) throw std::invalid_argument("sewing plan without blocks");
    std::size_t n = num_slots();
    std::vector<bool> used(n, false);
    for (const auto& p : pairs) {
        if (p.m_slot >= n || p.dual_slot >= n) throw std::invalid_argument("sewn slot out of range");
        if (p.m_slot == p.dual_slot || used[p.m_slot] || used[p.dual_slot])
            throw std::invalid_argument("slot sewn twice");
        used[p.m_slot] = used[p.dual_slot] = true;
        const auto& m = module_at(p.m_slot);
        const auto& d = module_at(p.dual_slot);
        if (!(*m.space() == *d.space())) throw std::invalid_argument("sewn slots carry different spaces");
        auto* c = dynamic_cast<const ContragredientModule*>(&d);
        if (!c) throw std::invalid_argument("dual slot does not carry a contragredient module");
        if (c->base().get() != &m)
            throw std::invalid_argument("sewn slots are not contragredient to each other");
    }
    if (!radii.empty() && radii.size() != pairs.size()) throw std::invalid_argument("radii arity");
    for (const auto& [r, rho] : radii)
        if (!(r > 0) || !(rho > 0)) throw std::invalid_argument("radii must be positive");
    if (bases.size() > pairs.size()) throw std::invalid_argument("more bases than pairs");
    for (std::size_t j = 0; j < bases.size(); ++j) {
        auto s = module_at(pairs[j].m_slot).space();
        for (const auto& [p, b] : bases[j]) {
            if (p >= s->num_pieces()) throw std::invalid_argument("basis for unknown piece");
            std::size_t d = s->piece(p).dim;
            if (b.rows() != d || b.cols() != d) throw std::invalid_argument("basis matrix has wrong size");
            if (b.rank() != d) throw std::invalid_argument("basis matrix is singular");
        }
    }
}

MultiLogSeries sew(const SewingPlan& plan, const TensorVector& w) {
    plan.validate();
    Mode mode = plan_mode(plan);
    std::size_t R = plan.pairs.size();
    auto open = plan.open_slots();
    MultiLogSeries out(R, mode, plan.cutoff);

    std::vector<std::vector<Insert>> ins;
    for (std::size_t j = 0; j < R; ++j) ins.push_back(pair_inserts(plan, j, mode));
    for (const auto& v : ins)
        if (v.empty()) return out;

    std::vector<const Vector*> sv(plan.num_slots(), nullptr);
    std::vector<Vector> open_vecs;
    open_vecs.reserve(open.size());
    for (std::size_t s : open) open_vecs.emplace_back(plan.module_at(s).space(), mode);

    for (const auto& [idx, c] : w) {
        if (idx.size() != open.size()) throw ArityMismatch("tensor index arity does not match open slots");
        if (c.is_zero()) continue;
        for (std::size_t o = 0; o < open.size(); ++o) {
            open_vecs[o] = Vector::basis(plan.module_at(open[o]).space(), idx[o], mode);
            sv[open[o]] = &open_vecs[o];
        }
        std::vector<std::size_t> pos(R, 0);
        while (true) {
            Monomial mono{std::vector<ComplexRational>(R), std::vector<unsigned>(R, 0)};
            for (std::size_t j = 0; j < R; ++j) {
                const auto& in = ins[j][pos[j]];
                sv[plan.pairs[j].m_slot] = &in.x;
                sv[plan.pairs[j].dual_slot] = &in.y;
                mono.exps[j] = in.lambda;
                mono.logs[j] = in.k;
            }
            Scalar val = eval_blocks(plan, sv, mode);
            if (!val.is_zero()) out.add_term(mono, c.to_mode(mode) * val);
            std::size_t j = 0;
            while (j < R && ++pos[j] == ins[j].size()) pos[j++] = 0;
            if (j == R) break;
        }
    }
    return out;
}

MultiLogSeries sew(const SewingPlan& plan, const TensorIndex& w) {
    TensorVector tv;
    tv[w] = Scalar::one(plan_mode(plan));
    return sew(plan, tv);
}

std::map<TensorIndex, MultiLogSeries> sew_all(const SewingPlan& plan, const Rational& max_weight) {
    auto open = plan.open_slots();
    std::vector<std::vector<std::size_t>> choices;
    for (std::size_t s : open) {
        const auto& m = plan.module_at(s);
        auto sp = m.space();
        Rational low = m.lowest_weight();
        std::vector<std::size_t> c;
        for (std::size_t g = 0; g < sp->dim(); ++g)
            if (sp->weight_of(g)[0].re - low <= max_weight) c.push_back(g);
        choices.push_back(std::move(c));
    }
    std::map<TensorIndex, MultiLogSeries> out;
    for (const auto& c : choices)
        if (c.empty()) return out;
    std::vector<std::size_t> pos(open.size(), 0);
    while (true) {
        TensorIndex idx(open.size());
        for (std::size_t o = 0; o < open.size(); ++o) idx[o] = choices[o][pos[o]];
        out.emplace(idx, sew(plan, idx));
        std::size_t o = 0;
        while (o < open.size() && ++pos[o] == choices[o].size()) pos[o++] = 0;
        if (o == open.size()) break;
    }
    return out;
}

MultiLogSeries sewn_section_action(const SewingPlan& plan, const std::vector<SectionDatum>& sigma_by_order,
                                   std::size_t open_slot, const TensorIndex& w) {
    if (plan.pairs.size() != 1) throw std::invalid_argument("sewn section action needs a single sewn pair");
    auto open = plan.open_slots();
    auto it = std::find(open.begin(), open.end(), open_slot);
    if (it == open.end()) throw std::invalid_argument("slot is not open");
    std::size_t pos = it - open.begin();
    auto [b, local] = locate(plan, open_slot);
    const Block& blk = plan.blocks[b];
    const auto& m = *blk.modules()->factor(local);
    Mode mode = plan_mode(plan);

    MultiLogSeries out(1, mode, plan.cutoff);
    for (std::size_t n = 0; n < sigma_by_order.size(); ++n) {
        if (Rational(long(n)) > plan.cutoff) break;
        Vector x = residue_action(sigma_by_order[n], blk.sphere(), local, m, Vector::basis(m.space(), w.at(pos), mode));
        TensorVector tv;
        for (const auto& [i, c] : x.coeffs()) {
            TensorIndex idx = w;
            idx[pos] = i;
            tensor_add(tv, idx, c);
        }
        if (tv.empty()) continue;
        MultiLogSeries s = sew(plan, tv);
        out += s * MultiLogSeries::term(Monomial{{ComplexRational(long(n))}, {0}}, Scalar::one(mode), plan.cutoff);
    }
    return out;
}

RationalFunction q_invariant_p2(unsigned n) {
    RationalFunction f;
    if (n == 0) {
        f += RationalFunction::pole(ComplexRational(1), 2);
        f += RationalFunction::pole(ComplexRational(1), 1);
        return f;
    }
    for (unsigned k = 1; k <= n; ++k) {
        if (n % k) continue;
        f += RationalFunction::monomial(k).scaled(ComplexRational(long(k)));
        f += RationalFunction::monomial(-long(k)).scaled(ComplexRational(long(k)));
    }
    return f;
}

MultisewSides multisew_sides(const ModulePtr& m, const FockVector& u, const BivariatePoly& f, const Rational& cutoff) {
    auto s = m->space();
    auto jc = m->jc();
    auto dual = contragredient(m);

    long amin = 0, bmin = 0;
    bool first = true;
    for (const auto& [ab, c] : f) {
        if (ab.first < 0 || ab.second < 0) throw std::invalid_argument("multisew test function must be a polynomial");
        if (first || ab.first < amin) amin = ab.first;
        if (first || ab.second < bmin) bmin = ab.second;
        first = false;
    }
    Rational top = cutoff + Rational(std::min(amin, bmin));

    // q^{L0} m_α = Σ_k q^λ (log q)^k N^k/k! m_α
    struct Piece {
        std::size_t alpha;
        ComplexRational lambda;
        unsigned k;
        Vector x;
    };
    std::vector<Piece> qs;
    for (std::size_t p = 0; p < s->num_pieces(); ++p) {
        const ComplexRational& lam = s->piece(p).weight[0];
        if (lam.re > cutoff) continue;
        for (std::size_t a = 0; a < s->piece(p).dim; ++a) {
            std::size_t alpha = s->offset(p) + a;
            Vector cur = Vector::basis(s, alpha);
            for (unsigned k = 0; !cur.is_zero(); ++k) {
                qs.push_back({alpha, lam, k, cur.scaled(Scalar(Rational(1) / factorial(k)))});
                cur = jc.nilpotent.apply(cur);
            }
        }
    }

    MultisewSides out;
    auto add = [&](std::map<std::pair<std::size_t, std::size_t>, MultiLogSeries>& side, std::size_t i, std::size_t j,
                   const ComplexRational& e, unsigned k, const Scalar& c) {
        Monomial mono{{e}, {k}};
        if (mono.exps[0].re > top) return;
        auto it = side.try_emplace({i, j}, MultiLogSeries(1, Mode::Exact, top)).first;
        it->second.add_term(mono, c);
    };

    for (const auto& [d, ud] : homogeneous_components(u)) {
        std::vector<std::pair<FockVector, ComplexRational>> chain;
        FockVector l = ud;
        for (long kk = 0; !l.empty(); ++kk) {
            ComplexRational coef = ComplexRational((d % 2 ? Rational(-1) : Rational(1)) / factorial(kk));
            chain.push_back({l, coef});
            l = v_virasoro(1, l);
        }
        for (const auto& [ab, fc] : f) {
            auto [a, b] = ab;
            long n = d + a - b - 1;
            for (const auto& q : qs) {
                Vector y = m->mode(ud, n, q.x);
                for (const auto& [i, c] : y.coeffs()) add(out.xi_side, i, q.alpha, q.lambda + ComplexRational(b), q.k, c * Scalar(fc));
            }
            for (std::size_t kk = 0; kk < chain.size(); ++kk) {
                long np = d - long(kk) + b - a - 1;
                for (const auto& q : qs) {
                    Vector yd = dual->mode(chain[kk].first, np, Vector::basis(s, q.alpha));
                    if (yd.is_zero()) continue;
                    for (const auto& [i, xi] : q.x.coeffs())
                        for (const auto& [j, cj] : yd.coeffs())
                            add(out.varpi_side, i, j, q.lambda + ComplexRational(a), q.k,
                                xi * cj * Scalar(fc * chain[kk].second));
                }
            }
        }
    }
    return out;
}

Rational multisew_identity_check(const ModulePtr& m, const FockVector& u, const BivariatePoly& f, const Rational& cutoff) {
    auto sides = multisew_sides(m, u, f, cutoff);
    Rational worst = 0;
    std::set<std::pair<std::size_t, std::size_t>> keys;
    for (const auto& [k, v] : sides.xi_side) keys.insert(k);
    for (const auto& [k, v] : sides.varpi_side) keys.insert(k);
    for (const auto& k : keys) {
        auto a = sides.xi_side.find(k);
        auto b = sides.varpi_side.find(k);
        MultiLogSeries x = a != sides.xi_side.end() ? a->second : MultiLogSeries(1);
        MultiLogSeries y = b != sides.varpi_side.end() ? b->second : MultiLogSeries(1);
        if (!x.cutoff()) x = x.truncated(*y.cutoff());
        if (!y.cutoff()) y = y.truncated(*x.cutoff());
        Rational d = max_deviation(x, y);
        if (d > worst) worst = d;
    }
    return worst;
}

std::vector<ConvergenceSample> convergence_table(const MultiLogSeries& s, const std::vector<std::vector<EvalPoint>>& samples,
                                                 const ConvergenceOptions& opt,
                                                 const std::vector<std::pair<double, double>>& radii) {
    std::map<Rational, std::vector<std::pair<Monomial, Scalar>>> groups;
    for (const auto& [m, c] : s.terms()) {
        Rational e = 0;
        for (const auto& x : m.exps) e += x.re;
        groups[e].push_back({m, c});
    }
    std::vector<ConvergenceSample> out;
    for (const auto& pt : samples) {
        if (pt.size() != s.num_vars()) throw ArityMismatch("sample point arity");
        ConvergenceSample cs;
        cs.point = pt;
        std::vector<std::complex<double>> logq;
        for (std::size_t j = 0; j < pt.size(); ++j) {
            if (!(pt[j].modulus > 0)) throw std::domain_error("sample at modulus 0");
            logq.emplace_back(std::log(pt[j].modulus), pt[j].arg);
            if (j < radii.size() && !(pt[j].modulus < radii[j].first * radii[j].second)) cs.inside_radii = false;
        }
        std::complex<double> partial;
        double majorant = 0;
        for (const auto& [e, terms] : groups) {
            std::complex<double> t;
            for (const auto& [m, c] : terms) {
                std::complex<double> v = c.to_complex();
                double a = std::abs(v);
                for (std::size_t j = 0; j < pt.size(); ++j) {
                    std::complex<double> qe = std::exp(m.exps[j].to_complex() * logq[j]);
                    v *= qe;
                    a *= std::abs(qe);
                    if (m.logs[j]) {
                        v *= std::pow(logq[j], static_cast<int>(m.logs[j]));
                        a *= std::pow(std::abs(logq[j]), static_cast<int>(m.logs[j]));
                    }
                }
                t += v;
                majorant += a;
            }
            partial += t;
            cs.rows.push_back({e.get_d(), t, partial, majorant});
        }
        auto step = [&](std::size_t n) -> double {
            if (n >= cs.rows.size()) return 0;
            double p = std::abs(cs.rows[n].partial), t = std::abs(cs.rows[n].term);
            if (t == 0) return 0;
            return p == 0 ? INFINITY : t / p;
        };
        for (std::size_t n = 0; n < cs.rows.size(); ++n) {
            bool ok = true;
            for (std::size_t w = 1; w <= opt.window && ok; ++w) ok = step(n + w) < opt.tol;
            if (ok) {
                cs.stabilization_order = cs.rows[n].exponent - cs.rows[0].exponent;
                cs.reliable = n + opt.window < cs.rows.size();
                break;
            }
        }
        out.push_back(std::move(cs));
    }
    return out;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceSample>& t) {
    os << "sample,modulus,arg,exponent,term_re,term_im,partial_re,partial_im,majorant\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::string mod, arg;
        for (std::size_t j = 0; j < t[i].point.size(); ++j) {
            if (j) {
                mod += ';';
                arg += ';';
            }
            std::ostringstream a, b;
            a << std::setprecision(17) << t[i].point[j].modulus;
            b << std::setprecision(17) << t[i].point[j].arg;
            mod += a.str();
            arg += b.str();
        }
        for (const auto& r : t[i].rows)
            os << i << ',' << mod << ',' << arg << ',' << r.exponent << ',' << r.term.real() << ',' << r.term.imag() << ','
               << r.partial.real() << ',' << r.partial.imag() << ',' << r.majorant << '\n';
    }
}

ComplexRational projective_term(const std::vector<std::pair<Laurent, Laurent>>& chart, const ComplexRational& c) {
    ComplexRational total;
    for (const auto& [S, a] : chart) total += laurent_residue(laurent_mul(S, a));
    return total * c / ComplexRational(12);
}

Curvature curvature_scalar(const std::vector<std::pair<Laurent, Laurent>>& hk, const ComplexRational& c) {
    ComplexRational total;
    for (const auto& [h, k] : hk) total += laurent_residue(laurent_mul(laurent_derivative(h, 3), k));
    Curvature out;
    out.f = -(c / ComplexRational(12)) * total;
    out.curvature = -out.f;
    return out;
}

}  // namespace logsew
