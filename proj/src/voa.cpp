#include "logsew/voa.hpp"

#include <algorithm>
#include <numeric>

namespace logsew {

namespace {

void gen_partitions(int n, int max_part, Partition& cur, std::vector<Partition>& out) {
    if (n == 0) {
        out.push_back(cur);
        return;
    }
    for (int p = std::min(n, max_part); p >= 1; --p) {
        cur.push_back(p);
        gen_partitions(n - p, p, cur, out);
        cur.pop_back();
    }
}

int level(const FockState& s) { return partition_weight(s.parts); }

Partition insert_part(const Partition& p, int k) {
    Partition r = p;
    r.insert(std::upper_bound(r.begin(), r.end(), k, std::greater<int>()), k);
    return r;
}

long floor_div2(long n) { return n >= 0 ? n / 2 : -((-n + 1) / 2); }

}  // namespace

std::vector<Partition> partitions_of(int n) {
    std::vector<Partition> out;
    if (n < 0) return out;
    Partition cur;
    gen_partitions(n, n, cur, out);
    return out;
}

int partition_weight(const Partition& p) { return std::accumulate(p.begin(), p.end(), 0); }

void fock_add(FockVector& x, const FockState& s, const ComplexRational& c) {
    if (c.is_zero()) return;
    auto [it, ins] = x.try_emplace(s, c);
    if (!ins) {
        it->second += c;
        if (it->second.is_zero()) x.erase(it);
    }
}

void fock_axpy(FockVector& x, const ComplexRational& c, const FockVector& y) {
    if (c.is_zero()) return;
    for (const auto& [s, v] : y) fock_add(x, s, c * v);
}

FockVector fock_scaled(const FockVector& x, const ComplexRational& c) {
    FockVector r;
    fock_axpy(r, c, x);
    return r;
}

bool fock_equal(const FockVector& x, const FockVector& y) { return x == y; }

FockVector vacuum() { return {{FockState{}, ComplexRational(1)}}; }

FockVector conformal_vector() { return {{FockState{{1, 1}, 0}, ComplexRational(Rational(1, 2))}}; }

FockVector oscillator_state(const Partition& parts, const ComplexRational& c) {
    Partition p = parts;
    std::sort(p.begin(), p.end(), std::greater<int>());
    if (!p.empty() && p.back() <= 0) throw std::invalid_argument("partition parts must be positive");
    FockVector r;
    fock_add(r, FockState{p, 0}, c);
    return r;
}

std::map<int, FockVector> homogeneous_components(const FockVector& v) {
    std::map<int, FockVector> out;
    for (const auto& [s, c] : v) fock_add(out[level(s)], s, c);
    return out;
}

int v_weight(const FockVector& v) {
    if (v.empty()) return 0;
    int d = level(v.begin()->first);
    for (const auto& [s, c] : v)
        if (level(s) != d) throw std::invalid_argument("vector is not homogeneous");
    return d;
}

int max_weight(const FockVector& v) {
    int d = 0;
    for (const auto& [s, c] : v) d = std::max(d, level(s));
    return d;
}

FockCore::FockCore(ComplexRational mu, std::vector<std::vector<ComplexRational>> n0)
    : mu_(std::move(mu)), dim_(n0.empty() ? 1 : n0.size()) {
    m0_.assign(dim_, std::vector<ComplexRational>(dim_));
    for (std::size_t i = 0; i < dim_; ++i) {
        if (!n0.empty() && n0[i].size() != dim_) throw std::invalid_argument("zero-mode matrix must be square");
        for (std::size_t j = 0; j < dim_; ++j) {
            if (!n0.empty()) m0_[i][j] = n0[i][j];
            if (i == j) m0_[i][j] += mu_;
        }
    }
}

FockVector FockCore::a_state(long n, const FockState& s) const {
    FockVector r;
    if (n < 0) {
        fock_add(r, FockState{insert_part(s.parts, static_cast<int>(-n)), s.a}, ComplexRational(1));
    } else if (n == 0) {
        for (std::size_t b = 0; b < dim_; ++b)
            fock_add(r, FockState{s.parts, static_cast<std::uint32_t>(b)}, m0_[b][s.a]);
    } else {
        auto k = std::count(s.parts.begin(), s.parts.end(), static_cast<int>(n));
        if (k == 0) return r;
        Partition p = s.parts;
        p.erase(std::find(p.begin(), p.end(), static_cast<int>(n)));
        fock_add(r, FockState{p, s.a}, ComplexRational(n * k));
    }
    return r;
}

FockVector FockCore::a(long n, const FockVector& w) const {
    FockVector r;
    for (const auto& [s, c] : w) fock_axpy(r, c, a_state(n, s));
    return r;
}

FockVector FockCore::L(long n, const FockVector& w) const {
    // L(n) = Σ_{p<r, p+r=n} a(p)a(r) + ½[n even] a(n/2)²
    FockVector r;
    for (const auto& [s, c] : w) {
        FockVector one{{s, c}};
        long top = std::max<long>(level(s), 0);
        for (long rr = floor_div2(n) + 1; rr <= top; ++rr) fock_axpy(r, ComplexRational(1), a(n - rr, a(rr, one)));
        if (n % 2 == 0) fock_axpy(r, ComplexRational(Rational(1, 2)), a(n / 2, a(n / 2, one)));
    }
    return r;
}

const FockVector& FockCore::Y_basis(const Partition& v, long m, const FockState& w) const {
    auto key = std::make_tuple(v, m, w);
    {
        std::lock_guard<std::mutex> lk(mu_cache_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    FockVector out;
    if (v.empty()) {
        if (m == -1) out.emplace(w, ComplexRational(1));
    } else {
        // Y(a(−p)v')_m = Σ_j C(p+j−1,j) [a(−p−j) Y(v')_{m+j} − (−1)^p Y(v')_{m−p−j} a(j)]
        long p = v.front();
        Partition rest(v.begin() + 1, v.end());
        long wt_rest = partition_weight(rest);
        long lw = level(w);
        for (long j = 0; lw + wt_rest - (m + j) - 1 >= 0; ++j) {
            const FockVector& inner = Y_basis(rest, m + j, w);
            if (inner.empty()) continue;
            fock_axpy(out, ComplexRational(binomial(p + j - 1, j)), a(-p - j, inner));
        }
        ComplexRational sign((p % 2 == 0) ? -1 : 1);
        for (long j = 0; j <= lw; ++j) {
            FockVector aw = a_state(j, w);
            for (const auto& [s, c] : aw) {
                long k = m - p - j;
                if (level(s) + wt_rest - k - 1 < 0) continue;
                fock_axpy(out, sign * c * ComplexRational(binomial(p + j - 1, j)), Y_basis(rest, k, s));
            }
        }
    }
    std::lock_guard<std::mutex> lk(mu_cache_);
    return cache_.emplace(key, std::move(out)).first->second;
}

FockVector FockCore::Y(const FockVector& v, long m, const FockVector& w) const {
    FockVector r;
    for (const auto& [vs, vc] : v) {
        if (vs.a != 0) throw std::invalid_argument("V element carries a coefficient index");
        for (const auto& [ws, wc] : w) {
            if (level(ws) + partition_weight(vs.parts) - m - 1 < 0) continue;
            fock_axpy(r, vc * wc, Y_basis(vs.parts, m, ws));
        }
    }
    return r;
}

const FockCore& vacuum_core() {
    static const FockCore core;
    return core;
}

FockVector v_virasoro(long n, const FockVector& v) { return vacuum_core().L(n, v); }

Vector VertexModule::virasoro(long n, const Vector& w, Truncation t) const { return mode(conformal_vector(), n + 1, w, t); }

Vector VertexModule::adjoint_mode(const FockVector& v, long n, const Vector& w, Truncation t) const {
    Vector r(space(), w.mode());
    for (const auto& [d, vd] : homogeneous_components(v)) {
        FockVector x = vd;
        Rational kfact(1);
        for (long k = 0; !x.empty(); ++k) {
            if (k > 0) kfact *= Rational(k);
            ComplexRational coef((d % 2 == 0 ? Rational(1) : Rational(-1)) / kfact);
            r += mode(x, 2 * d - k - n - 2, w, t).scaled(Scalar(coef).to_mode(w.mode()));
            x = v_virasoro(1, x);
        }
    }
    return r;
}

GradedMap VertexModule::mode_map(const FockVector& v, long n) const {
    SpacePtr s = space();
    std::optional<Weight> shift;
    if (!v.empty() && homogeneous_components(v).size() == 1 && s->num_gradings() == 1)
        shift = Weight{ComplexRational(v_weight(v) - n - 1)};
    return GradedMap::from_columns(s, s, [&](std::size_t j) { return mode(v, n, Vector::basis(s, j)); }, shift);
}

GradedMap VertexModule::virasoro_map(long n) const {
    SpacePtr s = space();
    std::optional<Weight> shift;
    if (s->num_gradings() == 1) shift = Weight{ComplexRational(-n)};
    return GradedMap::from_columns(s, s, [&](std::size_t j) { return virasoro(n, Vector::basis(s, j)); }, shift);
}

GradedMap VertexModule::adjoint_mode_map(const FockVector& v, long n) const {
    SpacePtr s = space();
    return GradedMap::from_columns(s, s, [&](std::size_t j) { return adjoint_mode(v, n, Vector::basis(s, j)); });
}

JordanChevalley VertexModule::jc() const { return jc_split(virasoro_map(0)); }

Rational VertexModule::lowest_weight() const {
    SpacePtr s = space();
    if (s->num_pieces() == 0) return Rational(0);
    Rational lo = s->piece(0).weight[0].re;
    for (const auto& p : s->pieces()) lo = std::min(lo, p.weight[0].re);
    return lo;
}

long VertexModule::max_mode_index(int d, const Vector& w) const {
    Rational top = lowest_weight();
    for (const auto& [i, c] : w.coeffs()) top = std::max(top, w.space()->weight_of(i)[0].re);
    Rational bound = top - lowest_weight() + d - 1;
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), bound.get_num_mpz_t(), bound.get_den_mpz_t());
    return f.get_si();
}

FockModule::FockModule(ComplexRational mu, int K, std::vector<std::vector<ComplexRational>> n0,
                       std::vector<std::string> coeff_labels)
    : mu_(mu), K_(K), core_(mu, std::move(n0)) {
    if (K < 0) throw std::invalid_argument("weight cutoff must be non-negative");
    std::size_t d = core_.coeff_dim();
    if (!coeff_labels.empty() && coeff_labels.size() != d) throw std::invalid_argument("coefficient label count");
    // L(0)_n = μ n0 + n0²/2 must be nilpotent for the grading to be generalized eigenspaces
    std::vector<Piece> pieces;
    ComplexRational base = mu * mu / ComplexRational(2);
    for (int k = 0; k <= K; ++k) {
        Piece pc{{base + ComplexRational(k)}, 0, {}};
        for (const auto& p : partitions_of(k))
            for (std::size_t a = 0; a < d; ++a) {
                states_.push_back(FockState{p, static_cast<std::uint32_t>(a)});
                std::string lbl = "a";
                for (int x : p) lbl += "(-" + std::to_string(x) + ")";
                if (p.empty()) lbl = "vac";
                if (d > 1) lbl += "|" + (coeff_labels.empty() ? std::to_string(a) : coeff_labels[a]);
                pc.labels.push_back(lbl);
                ++pc.dim;
            }
        pieces.push_back(std::move(pc));
    }
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
    space_ = std::make_shared<GradedSpace>(1, std::move(pieces));
}

std::size_t FockModule::index_of(const FockState& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) throw TruncationOverflow("state outside the truncation window");
    return it->second;
}

Vector FockModule::to_vector(const FockVector& x, Truncation t) const {
    Vector r(space_);
    for (const auto& [s, c] : x) {
        auto it = index_.find(s);
        if (it == index_.end()) {
            if (t == Truncation::Strict) throw TruncationOverflow("weight " + std::to_string(level(s)) + " exceeds cutoff " + std::to_string(K_));
            continue;
        }
        r.add(it->second, Scalar(c));
    }
    return r;
}

FockVector FockModule::from_vector(const Vector& v) const {
    FockVector r;
    for (const auto& [i, c] : v.coeffs()) fock_add(r, states_.at(i), c.exact());
    return r;
}

namespace {
Vector approx_passthrough(const Vector& w, const std::function<Vector(const Vector&)>& f) {
    if (w.mode() == Mode::Exact) return f(w);
    // exact action, approximate coefficients
    Vector r(w.space(), Mode::Approx);
    for (const auto& [i, c] : w.coeffs()) {
        Vector y = f(Vector::basis(w.space(), i));
        for (const auto& [j, s] : y.coeffs()) r.add(j, s.to_mode(Mode::Approx) * c);
    }
    return r;
}
}  // namespace

Vector FockModule::mode(const FockVector& v, long n, const Vector& w, Truncation t) const {
    return approx_passthrough(w, [&](const Vector& x) { return to_vector(core_.Y(v, n, from_vector(x)), t); });
}

Vector FockModule::virasoro(long n, const Vector& w, Truncation t) const {
    return approx_passthrough(w, [&](const Vector& x) { return to_vector(core_.L(n, from_vector(x)), t); });
}

std::shared_ptr<FockModule> heisenberg_module(const ComplexRational& mu, int K) { return std::make_shared<FockModule>(mu, K); }

std::shared_ptr<FockModule> heisenberg_voa(int K) { return std::make_shared<FockModule>(ComplexRational(0), K); }

namespace {

template <class F>
Vector transpose_gather(const VertexModule& base, const Vector& w, const ComplexRational& shift, Truncation t, F&& op) {
    SpacePtr s = base.space();
    Vector r(s, w.mode());
    Rational top = s->num_pieces() ? s->piece(s->num_pieces() - 1).weight[0].re : Rational(0);
    std::map<std::size_t, Vector> cols;
    for (const auto& [i, c] : w.coeffs()) {
        Weight target{s->weight_of(i)[0] + shift};
        auto p = s->find(target);
        if (!p) {
            if (t == Truncation::Strict && target[0].re > top) throw TruncationOverflow("contragredient action leaves the window");
            continue;
        }
        for (std::size_t j = s->offset(*p); j < s->offset(*p) + s->piece(*p).dim; ++j) {
            auto it = cols.find(j);
            if (it == cols.end()) it = cols.emplace(j, op(Vector::basis(s, j, w.mode()))).first;
            Scalar y = it->second.get(i);
            if (!y.is_zero()) r.add(j, y * c);
        }
    }
    return r;
}

}  // namespace

Vector ContragredientModule::mode(const FockVector& v, long n, const Vector& w, Truncation t) const {
    Vector r(space(), w.mode());
    for (const auto& [d, vd] : homogeneous_components(v)) {
        r += transpose_gather(*base_, w, ComplexRational(d - n - 1), t,
                              [&](const Vector& x) { return base_->adjoint_mode(vd, n, x); });
    }
    return r;
}

Vector ContragredientModule::virasoro(long n, const Vector& w, Truncation t) const {
    return transpose_gather(*base_, w, ComplexRational(-n), t, [&](const Vector& x) { return base_->virasoro(-n, x); });
}

ModulePtr contragredient(ModulePtr m) { return std::make_shared<ContragredientModule>(std::move(m)); }

void TableModule::set_mode(const Partition& v, long n, GradedMap m) { modes_.insert_or_assign({v, n}, std::move(m)); }

void TableModule::set_virasoro(long n, GradedMap m) { virasoro_.insert_or_assign(n, std::move(m)); }

Vector TableModule::mode(const FockVector& v, long n, const Vector& w, Truncation) const {
    Vector r(space_, w.mode());
    for (const auto& [s, c] : v) {
        if (s.parts.empty()) {
            if (n == -1) r += w.scaled(Scalar(c).to_mode(w.mode()));
            continue;
        }
        auto it = modes_.find({s.parts, n});
        if (it == modes_.end()) {
            if (s.parts == Partition{1, 1}) {
                // ω = ½ a(−1)²𝟏, so a(−1)² has modes 2 L(n−1)
                r += virasoro(n - 1, w).scaled(Scalar(c * ComplexRational(2)).to_mode(w.mode()));
                continue;
            }
            throw std::out_of_range("mode table has no entry for this vector and index " + std::to_string(n));
        }
        r += it->second.apply(w).scaled(Scalar(c).to_mode(w.mode()));
    }
    return r;
}

Vector TableModule::virasoro(long n, const Vector& w, Truncation) const {
    auto it = virasoro_.find(n);
    if (it != virasoro_.end()) return it->second.apply(w);
    auto jt = modes_.find({Partition{1, 1}, n + 1});
    if (jt != modes_.end()) return jt->second.apply(w).scaled(Scalar(ComplexRational(Rational(1, 2))).to_mode(w.mode()));
    // L(n) with n beyond the window in either direction moves out of every piece
    SpacePtr s = space_;
    if (s->num_pieces() > 0) {
        Rational span = s->piece(s->num_pieces() - 1).weight[0].re - s->piece(0).weight[0].re;
        if (Rational(n > 0 ? n : -n) > span) return Vector(space_, w.mode());
    }
    throw std::out_of_range("Virasoro table has no entry for L(" + std::to_string(n) + ")");
}

std::shared_ptr<TableModule> TableModule::from_json(const nlohmann::json& j, Mode mode) {
    auto space = std::make_shared<GradedSpace>(GradedSpace::from_json(j.at("space")));
    ComplexRational c = j.contains("central_charge") ? complex_rational_from_json(j["central_charge"]) : ComplexRational(1);
    auto m = std::make_shared<TableModule>(space, c);
    if (j.contains("virasoro"))
        for (const auto& e : j["virasoro"]) m->set_virasoro(e.at("n").get<long>(), GradedMap::from_json(e.at("map"), space, space, mode));
    if (j.contains("modes"))
        for (const auto& e : j["modes"]) {
            Partition p = e.at("v").get<Partition>();
            m->set_mode(p, e.at("n").get<long>(), GradedMap::from_json(e.at("map"), space, space, mode));
        }
    return m;
}

void tensor_add(TensorVector& x, const TensorIndex& i, const Scalar& c) {
    if (c.is_zero()) return;
    auto [it, ins] = x.try_emplace(i, c);
    if (!ins) {
        it->second += c;
        if (it->second.is_zero()) x.erase(it);
    }
}

void tensor_axpy(TensorVector& x, const Scalar& c, const TensorVector& y) {
    for (const auto& [i, v] : y) tensor_add(x, i, c * v);
}

Weight TensorModule::weight(const TensorIndex& idx) const {
    Weight w;
    for (std::size_t i = 0; i < factors_.size(); ++i) w.push_back(factors_[i]->space()->weight_of(idx[i])[0]);
    return w;
}

template <class F>
TensorVector TensorModule::act(std::size_t slot, const TensorVector& w, F&& f) const {
    if (slot >= factors_.size()) throw std::out_of_range("tensor slot out of range");
    TensorVector r;
    std::map<std::pair<std::size_t, Mode>, Vector> cache;
    for (const auto& [idx, c] : w) {
        auto key = std::make_pair(idx[slot], c.mode());
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, f(Vector::basis(factors_[slot]->space(), idx[slot], c.mode()))).first;
        for (const auto& [j, s] : it->second.coeffs()) {
            TensorIndex out = idx;
            out[slot] = j;
            tensor_add(r, out, s * c);
        }
    }
    return r;
}

TensorVector TensorModule::mode(std::size_t slot, const FockVector& v, long n, const TensorVector& w, Truncation t) const {
    return act(slot, w, [&](const Vector& x) { return factors_[slot]->mode(v, n, x, t); });
}

TensorVector TensorModule::virasoro(std::size_t slot, long n, const TensorVector& w, Truncation t) const {
    return act(slot, w, [&](const Vector& x) { return factors_[slot]->virasoro(n, x, t); });
}

}  // namespace logsew
