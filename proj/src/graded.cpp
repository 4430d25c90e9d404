#include "logsew/graded.hpp"

#include <algorithm>
#include <sstream>

namespace logsew {

using nlohmann::json;

std::string weight_str(const Weight& w) {
    std::ostringstream os;
    os << "(";
    for (std::size_t j = 0; j < w.size(); ++j) os << (j ? "," : "") << w[j].str();
    os << ")";
    return os.str();
}

GradedSpace::GradedSpace(std::size_t num_gradings, std::vector<Piece> pieces)
    : num_gradings_(num_gradings), pieces_(std::move(pieces)) {
    std::sort(pieces_.begin(), pieces_.end(), [](const Piece& a, const Piece& b) { return a.weight < b.weight; });
    for (std::size_t p = 0; p < pieces_.size(); ++p) {
        auto& pc = pieces_[p];
        if (pc.weight.size() != num_gradings_) throw ArityMismatch("piece weight arity " + weight_str(pc.weight));
        if (pc.dim == 0) throw std::invalid_argument("piece of dimension 0 at " + weight_str(pc.weight));
        if (!pc.labels.empty() && pc.labels.size() != pc.dim) throw std::invalid_argument("label count mismatch");
        if (!index_.emplace(pc.weight, p).second) throw std::invalid_argument("duplicate piece " + weight_str(pc.weight));
        offsets_.push_back(total_);
        total_ += pc.dim;
    }
}

std::size_t GradedSpace::piece_of(std::size_t global) const {
    if (global >= total_) throw std::out_of_range("basis index out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

std::optional<std::size_t> GradedSpace::find(const Weight& w) const {
    auto it = index_.find(w);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::string GradedSpace::label(std::size_t global) const {
    std::size_t p = piece_of(global);
    std::size_t a = global - offsets_[p];
    if (!pieces_[p].labels.empty()) return pieces_[p].labels[a];
    return weight_str(pieces_[p].weight) + "#" + std::to_string(a);
}

bool GradedSpace::operator==(const GradedSpace& o) const {
    if (num_gradings_ != o.num_gradings_ || pieces_.size() != o.pieces_.size()) return false;
    for (std::size_t p = 0; p < pieces_.size(); ++p)
        if (pieces_[p].weight != o.pieces_[p].weight || pieces_[p].dim != o.pieces_[p].dim) return false;
    return true;
}

json GradedSpace::to_json() const {
    json ps = json::array();
    for (const auto& pc : pieces_) {
        json w = json::array();
        for (const auto& e : pc.weight) w.push_back(complex_rational_to_json(e));
        json p = {{"weight", w}, {"dim", pc.dim}};
        if (!pc.labels.empty()) p["labels"] = pc.labels;
        ps.push_back(p);
    }
    return {{"num_gradings", num_gradings_}, {"pieces", ps}};
}

GradedSpace GradedSpace::from_json(const json& j) {
    std::size_t n = j.value("num_gradings", std::size_t{1});
    std::vector<Piece> ps;
    for (const auto& p : j.at("pieces")) {
        Piece pc;
        const json& w = p.at("weight");
        if (n == 1 && !(w.is_array() && !w.empty() && (w[0].is_array() || w[0].is_string()) && w.size() == 1))
            pc.weight = {complex_rational_from_json(w)};
        else
            for (const auto& e : w) pc.weight.push_back(complex_rational_from_json(e));
        pc.dim = p.at("dim").get<std::size_t>();
        if (p.contains("labels")) pc.labels = p["labels"].get<std::vector<std::string>>();
        ps.push_back(std::move(pc));
    }
    return GradedSpace(n, std::move(ps));
}

Vector Vector::basis(SpacePtr space, std::size_t global, Mode mode) {
    if (global >= space->dim()) throw std::out_of_range("basis index out of range");
    Vector v(std::move(space), mode);
    v.coeffs_.emplace(global, Scalar::one(mode));
    return v;
}

Vector Vector::from_dense(SpacePtr space, const std::vector<Scalar>& x) {
    if (x.size() != space->dim()) throw std::invalid_argument("dense vector size mismatch");
    Vector v(std::move(space), x.empty() ? Mode::Exact : x[0].mode());
    for (std::size_t i = 0; i < x.size(); ++i) v.add(i, x[i]);
    return v;
}

Scalar Vector::get(std::size_t i) const {
    auto it = coeffs_.find(i);
    return it == coeffs_.end() ? Scalar::zero(mode_) : it->second;
}

void Vector::add(std::size_t i, const Scalar& s) {
    if (i >= space_->dim()) throw std::out_of_range("vector index out of range");
    if (s.is_zero()) return;
    if (s.mode() != mode_) throw ModeMismatch("vector mode");
    auto [it, ins] = coeffs_.try_emplace(i, s);
    if (!ins) {
        it->second += s;
        if (it->second.is_zero()) coeffs_.erase(it);
    }
}

std::vector<Scalar> Vector::to_dense() const {
    std::vector<Scalar> x(space_->dim(), Scalar::zero(mode_));
    for (const auto& [i, s] : coeffs_) x[i] = s;
    return x;
}

Vector Vector::project(const Weight& w, ProjectMode pm) const {
    if (w.size() != space_->num_gradings()) throw ArityMismatch("projection weight arity");
    Vector r(space_, mode_);
    for (const auto& [i, s] : coeffs_) {
        const Weight& wi = space_->weight_of(i);
        bool keep = true;
        if (pm == ProjectMode::Exact) keep = wi == w;
        else
            for (std::size_t j = 0; j < w.size(); ++j) keep = keep && wi[j].re <= w[j].re;
        if (keep) r.coeffs_.emplace(i, s);
    }
    return r;
}

Vector project(const Vector& v, const Weight& w, ProjectMode mode) { return v.project(w, mode); }

Vector Vector::scaled(const Scalar& c) const {
    Vector r(space_, mode_);
    for (const auto& [i, s] : coeffs_) r.add(i, s * c);
    return r;
}

Vector& Vector::operator+=(const Vector& o) {
    for (const auto& [i, s] : o.coeffs_) add(i, s);
    return *this;
}

Vector& Vector::operator-=(const Vector& o) {
    for (const auto& [i, s] : o.coeffs_) add(i, -s);
    return *this;
}

GradedMap::GradedMap(SpacePtr src, SpacePtr dst, std::optional<Weight> shift, Mode mode)
    : src_(std::move(src)), dst_(std::move(dst)), shift_(std::move(shift)), mode_(mode) {}

GradedMap GradedMap::identity(SpacePtr s, Mode mode) {
    GradedMap m(s, s, Weight(s->num_gradings()), mode);
    for (std::size_t p = 0; p < s->num_pieces(); ++p) m.blocks_.emplace(BlockKey{p, p}, Matrix::identity(s->piece(p).dim, mode));
    return m;
}

GradedMap GradedMap::zero(SpacePtr src, SpacePtr dst, Mode mode) { return GradedMap(std::move(src), std::move(dst), std::nullopt, mode); }

GradedMap GradedMap::from_columns(SpacePtr src, SpacePtr dst, const std::function<Vector(std::size_t)>& f,
                                  std::optional<Weight> shift, Mode mode) {
    GradedMap m(src, dst, std::move(shift), mode);
    for (std::size_t j = 0; j < src->dim(); ++j) {
        Vector col = f(j);
        for (const auto& [i, s] : col.coeffs()) m.add_entry(i, j, s);
    }
    m.prune();
    return m;
}

GradedMap GradedMap::from_dense(SpacePtr src, SpacePtr dst, const Matrix& d) {
    if (d.rows() != dst->dim() || d.cols() != src->dim()) throw std::invalid_argument("dense map shape mismatch");
    GradedMap m(src, dst, std::nullopt, d.mode());
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (std::size_t j = 0; j < d.cols(); ++j)
            if (!d(i, j).is_zero()) m.add_entry(i, j, d(i, j));
    return m;
}

const Matrix* GradedMap::block(std::size_t sp, std::size_t dp) const {
    auto it = blocks_.find({sp, dp});
    return it == blocks_.end() ? nullptr : &it->second;
}

namespace {
bool shift_ok(const Weight& src, const Weight& dst, const std::optional<Weight>& shift) {
    if (!shift) return true;
    for (std::size_t j = 0; j < src.size(); ++j)
        if (dst[j] != src[j] + (*shift)[j]) return false;
    return true;
}
}  // namespace

void GradedMap::set_block(std::size_t sp, std::size_t dp, Matrix m) {
    if (m.rows() != dst_->piece(dp).dim || m.cols() != src_->piece(sp).dim) throw std::invalid_argument("block shape mismatch");
    if (!shift_ok(src_->piece(sp).weight, dst_->piece(dp).weight, shift_))
        throw std::invalid_argument("block violates declared weight shift");
    if (m.is_zero()) blocks_.erase({sp, dp});
    else blocks_[{sp, dp}] = std::move(m);
}

void GradedMap::add_entry(std::size_t dst_global, std::size_t src_global, const Scalar& s) {
    if (s.is_zero()) return;
    std::size_t sp = src_->piece_of(src_global), dp = dst_->piece_of(dst_global);
    auto it = blocks_.find({sp, dp});
    if (it == blocks_.end()) {
        if (!shift_ok(src_->piece(sp).weight, dst_->piece(dp).weight, shift_))
            throw std::invalid_argument("entry violates declared weight shift");
        it = blocks_.emplace(BlockKey{sp, dp}, Matrix(dst_->piece(dp).dim, src_->piece(sp).dim, mode_)).first;
    }
    it->second(dst_global - dst_->offset(dp), src_global - src_->offset(sp)) += s;
}

Scalar GradedMap::entry(std::size_t dst_global, std::size_t src_global) const {
    std::size_t sp = src_->piece_of(src_global), dp = dst_->piece_of(dst_global);
    const Matrix* b = block(sp, dp);
    if (!b) return Scalar::zero(mode_);
    return (*b)(dst_global - dst_->offset(dp), src_global - src_->offset(sp));
}

Vector GradedMap::apply(const Vector& v) const {
    Mode out = (mode_ == Mode::Approx || v.mode() == Mode::Approx) ? Mode::Approx : Mode::Exact;
    Vector r(dst_, out);
    for (const auto& [key, b] : blocks_) {
        auto [sp, dp] = key;
        std::size_t so = src_->offset(sp), doff = dst_->offset(dp);
        for (auto it = v.coeffs().lower_bound(so); it != v.coeffs().end() && it->first < so + b.cols(); ++it)
            for (std::size_t i = 0; i < b.rows(); ++i) {
                const Scalar& x = b(i, it->first - so);
                if (!x.is_zero()) r.add(doff + i, x.to_mode(out) * it->second.to_mode(out));
            }
    }
    return r;
}

Matrix GradedMap::to_dense() const {
    Matrix d(dst_->dim(), src_->dim(), mode_);
    for (const auto& [key, b] : blocks_) {
        std::size_t so = src_->offset(key.first), doff = dst_->offset(key.second);
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) d(doff + i, so + j) = b(i, j);
    }
    return d;
}

GradedMap GradedMap::transpose() const {
    std::optional<Weight> s;
    if (shift_) {
        s = Weight();
        for (const auto& e : *shift_) s->push_back(-e);
    }
    GradedMap t(dst_, src_, s, mode_);
    for (const auto& [key, b] : blocks_) t.blocks_.emplace(BlockKey{key.second, key.first}, b.transpose());
    return t;
}

GradedMap GradedMap::scaled(const Scalar& c) const {
    GradedMap r(src_, dst_, shift_, mode_);
    for (const auto& [key, b] : blocks_) r.blocks_.emplace(key, b.scaled(c));
    r.prune();
    return r;
}

GradedMap GradedMap::restricted(const std::function<bool(std::size_t, std::size_t)>& keep) const {
    GradedMap r(src_, dst_, shift_, mode_);
    for (const auto& [key, b] : blocks_)
        if (keep(key.first, key.second)) r.blocks_.emplace(key, b);
    return r;
}

bool GradedMap::is_zero() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](const auto& kv) { return kv.second.is_zero(); });
}

void GradedMap::prune() {
    for (auto it = blocks_.begin(); it != blocks_.end();) it = it->second.is_zero() ? blocks_.erase(it) : std::next(it);
}

GradedMap& GradedMap::operator+=(const GradedMap& o) {
    if (!(*src_ == *o.src_) || !(*dst_ == *o.dst_)) throw std::invalid_argument("graded map spaces differ");
    if (shift_ != o.shift_) shift_.reset();
    for (const auto& [key, b] : o.blocks_) {
        auto it = blocks_.find(key);
        if (it == blocks_.end()) blocks_.emplace(key, b);
        else it->second += b;
    }
    prune();
    return *this;
}

GradedMap& GradedMap::operator-=(const GradedMap& o) { return *this += o.scaled(Scalar(-1L).to_mode(o.mode_)); }

GradedMap operator*(const GradedMap& a, const GradedMap& b) {
    if (!(*a.src_ == *b.dst_)) throw std::invalid_argument("composition: spaces do not match");
    std::optional<Weight> s;
    if (a.shift_ && b.shift_) {
        s = *a.shift_;
        for (std::size_t j = 0; j < s->size(); ++j) (*s)[j] += (*b.shift_)[j];
    }
    GradedMap c(b.src_, a.dst_, s, a.mode_);
    std::multimap<std::size_t, std::pair<std::size_t, const Matrix*>> a_by_src;
    for (const auto& [key, m] : a.blocks_) a_by_src.emplace(key.first, std::make_pair(key.second, &m));
    for (const auto& [kb, mb] : b.blocks_) {
        auto range = a_by_src.equal_range(kb.second);
        for (auto it = range.first; it != range.second; ++it) {
            Matrix prod = *it->second.second * mb;
            auto key = GradedMap::BlockKey{kb.first, it->second.first};
            auto ct = c.blocks_.find(key);
            if (ct == c.blocks_.end()) c.blocks_.emplace(key, std::move(prod));
            else ct->second += prod;
        }
    }
    c.prune();
    return c;
}

bool operator==(const GradedMap& a, const GradedMap& b) {
    if (!(*a.src_ == *b.src_) || !(*a.dst_ == *b.dst_)) return false;
    return (a - b).is_zero();
}

json GradedMap::to_json() const {
    json bs = json::array();
    for (const auto& [key, b] : blocks_) {
        json rows = json::array();
        for (std::size_t i = 0; i < b.rows(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < b.cols(); ++j) row.push_back(scalar_to_json(b(i, j)));
            rows.push_back(row);
        }
        bs.push_back({{"src_piece", key.first}, {"dst_piece", key.second}, {"matrix", rows}});
    }
    return {{"blocks", bs}};
}

GradedMap GradedMap::from_json(const json& j, SpacePtr src, SpacePtr dst, Mode mode) {
    GradedMap m(src, dst, std::nullopt, mode);
    if (j.contains("entries")) {
        for (const auto& e : j["entries"])
            m.add_entry(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), scalar_from_json(e.at(2), mode));
        m.prune();
        return m;
    }
    for (const auto& b : j.at("blocks")) {
        std::size_t sp = b.at("src_piece"), dp = b.at("dst_piece");
        Matrix mat(dst->piece(dp).dim, src->piece(sp).dim, mode);
        const auto& rows = b.at("matrix");
        if (rows.size() != mat.rows()) throw std::invalid_argument("block row count mismatch");
        for (std::size_t r = 0; r < mat.rows(); ++r) {
            if (rows[r].size() != mat.cols()) throw std::invalid_argument("block column count mismatch");
            for (std::size_t c = 0; c < mat.cols(); ++c) mat(r, c) = scalar_from_json(rows[r][c], mode);
        }
        m.set_block(sp, dp, std::move(mat));
    }
    return m;
}

JordanChevalley jc_split(const GradedMap& l0, std::size_t grading) {
    const SpacePtr& s = l0.source();
    if (!(*s == *l0.target())) throw std::invalid_argument("L(0) must be an endomorphism");
    if (grading >= s->num_gradings()) throw ArityMismatch("grading index out of range");
    for (const auto& [key, b] : l0.blocks())
        if (key.first != key.second) throw std::invalid_argument("L(0) does not preserve graded pieces");
    Mode mode = l0.mode();
    GradedMap ss(s, s, Weight(s->num_gradings()), mode);
    for (std::size_t p = 0; p < s->num_pieces(); ++p)
        ss.set_block(p, p, Matrix::identity(s->piece(p).dim, mode).scaled(Scalar(s->piece(p).weight[grading]).to_mode(mode)));
    GradedMap n = l0 - ss;
    JordanChevalley jc{ss, n, 1, grading};
    for (std::size_t p = 0; p < s->num_pieces(); ++p) {
        const Matrix* b = n.block(p, p);
        if (!b) continue;
        Matrix pw = *b;
        std::size_t k = 1;
        while (!pw.is_zero()) {
            if (k >= s->piece(p).dim)
                throw NotNilpotent("L(0) - " + s->piece(p).weight[grading].str() + " is not nilpotent on piece " +
                                   weight_str(s->piece(p).weight));
            pw = pw * *b;
            ++k;
        }
        jc.nilpotency_index = std::max(jc.nilpotency_index, k);
    }
    return jc;
}

MultiLogSeries OperatorSeries::pair(const Vector& dual, const Vector& m) const {
    MultiLogSeries r(num_vars, mode, cutoff);
    for (const auto& t : terms) {
        Vector x = t.op.apply(m);
        Scalar v = Scalar::zero(mode);
        for (const auto& [i, s] : x.coeffs()) v += s * dual.get(i);
        r.add_term(t.mono, v);
    }
    return r;
}

unsigned OperatorSeries::max_log_power() const {
    unsigned r = 0;
    for (const auto& t : terms)
        for (unsigned l : t.mono.logs) r = std::max(r, l);
    return r;
}

OperatorSeries q_L0_insert(SpacePtr space, const std::vector<JordanChevalley>& jcs, const std::optional<GradedMap>& a,
                           const Rational& cutoff) {
    if (jcs.size() != space->num_gradings()) throw std::invalid_argument("missing Jordan-Chevalley data");
    Mode mode = jcs.empty() ? Mode::Exact : jcs[0].nilpotent.mode();
    OperatorSeries out{space, jcs.size(), cutoff, mode, {}};
    for (std::size_t p = 0; p < space->num_pieces(); ++p) {
        const Weight& w = space->piece(p).weight;
        bool in = std::all_of(w.begin(), w.end(), [&](const ComplexRational& e) { return e.re <= cutoff; });
        if (!in) continue;
        std::size_t d = space->piece(p).dim;
        // enumerate log multi-indices k with k_j < index_j
        std::vector<unsigned> k(jcs.size(), 0);
        while (true) {
            Matrix op = Matrix::identity(d, mode);
            for (std::size_t j = 0; j < jcs.size() && !op.is_zero(); ++j) {
                const Matrix* nb = jcs[j].nilpotent.block(p, p);
                if (k[j] == 0) continue;
                if (!nb) {
                    op = Matrix(d, d, mode);
                    break;
                }
                for (unsigned r = 0; r < k[j]; ++r) op = *nb * op;
                op = op.scaled(Scalar(Rational(1) / factorial(k[j])).to_mode(mode));
            }
            if (!op.is_zero()) {
                GradedMap g(space, space, std::nullopt, mode);
                g.set_block(p, p, op);
                if (a) g = *a * g;
                if (!g.is_zero()) out.terms.push_back({Monomial{w, k}, std::move(g)});
            }
            std::size_t j = 0;
            while (j < k.size() && ++k[j] >= jcs[j].nilpotency_index) k[j++] = 0;
            if (j == k.size()) break;
        }
    }
    return out;
}

}  // namespace logsew
