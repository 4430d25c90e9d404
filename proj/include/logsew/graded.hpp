#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "logsew/matrix.hpp"
#include "logsew/series.hpp"

namespace logsew {

using Weight = std::vector<ComplexRational>;

std::string weight_str(const Weight& w);

struct NotNilpotent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Piece {
    Weight weight;
    std::size_t dim = 0;
    std::vector<std::string> labels;
};

class GradedSpace {
public:
    explicit GradedSpace(std::size_t num_gradings = 1, std::vector<Piece> pieces = {});

    std::size_t num_gradings() const { return num_gradings_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    std::size_t num_pieces() const { return pieces_.size(); }
    const Piece& piece(std::size_t p) const { return pieces_.at(p); }
    std::size_t dim() const { return total_; }
    std::size_t offset(std::size_t p) const { return offsets_.at(p); }
    std::size_t piece_of(std::size_t global) const;
    const Weight& weight_of(std::size_t global) const { return pieces_[piece_of(global)].weight; }
    std::optional<std::size_t> find(const Weight& w) const;
    std::string label(std::size_t global) const;

    bool operator==(const GradedSpace& o) const;

    nlohmann::json to_json() const;
    static GradedSpace from_json(const nlohmann::json& j);

private:
    std::size_t num_gradings_;
    std::vector<Piece> pieces_;
    std::vector<std::size_t> offsets_;
    std::map<Weight, std::size_t> index_;
    std::size_t total_ = 0;
};

using SpacePtr = std::shared_ptr<const GradedSpace>;

enum class ProjectMode { Exact, AtMost };

class Vector {
public:
    explicit Vector(SpacePtr space, Mode mode = Mode::Exact) : space_(std::move(space)), mode_(mode) {}
    static Vector basis(SpacePtr space, std::size_t global, Mode mode = Mode::Exact);
    static Vector from_dense(SpacePtr space, const std::vector<Scalar>& x);

    const SpacePtr& space() const { return space_; }
    Mode mode() const { return mode_; }
    const std::map<std::size_t, Scalar>& coeffs() const { return coeffs_; }
    Scalar get(std::size_t i) const;
    void add(std::size_t i, const Scalar& s);
    bool is_zero() const { return coeffs_.empty(); }
    std::vector<Scalar> to_dense() const;

    Vector project(const Weight& w, ProjectMode mode) const;
    Vector scaled(const Scalar& c) const;
    Vector& operator+=(const Vector& o);
    Vector& operator-=(const Vector& o);
    friend Vector operator+(Vector a, const Vector& b) { return a += b; }
    friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
    friend bool operator==(const Vector& a, const Vector& b) { return a.coeffs_ == b.coeffs_; }

private:
    SpacePtr space_;
    Mode mode_;
    std::map<std::size_t, Scalar> coeffs_;
};

Vector project(const Vector& v, const Weight& w, ProjectMode mode);

class GradedMap {
public:
    using BlockKey = std::pair<std::size_t, std::size_t>;  // (src piece, dst piece)

    GradedMap(SpacePtr src, SpacePtr dst, std::optional<Weight> shift = std::nullopt, Mode mode = Mode::Exact);

    static GradedMap identity(SpacePtr s, Mode mode = Mode::Exact);
    static GradedMap zero(SpacePtr src, SpacePtr dst, Mode mode = Mode::Exact);
    // column j = f(basis vector j)
    static GradedMap from_columns(SpacePtr src, SpacePtr dst, const std::function<Vector(std::size_t)>& f,
                                  std::optional<Weight> shift = std::nullopt, Mode mode = Mode::Exact);
    static GradedMap from_dense(SpacePtr src, SpacePtr dst, const Matrix& m);

    const SpacePtr& source() const { return src_; }
    const SpacePtr& target() const { return dst_; }
    const std::optional<Weight>& weight_shift() const { return shift_; }
    Mode mode() const { return mode_; }
    const std::map<BlockKey, Matrix>& blocks() const { return blocks_; }
    const Matrix* block(std::size_t src_piece, std::size_t dst_piece) const;

    void set_block(std::size_t src_piece, std::size_t dst_piece, Matrix m);
    void add_entry(std::size_t dst_global, std::size_t src_global, const Scalar& s);
    Scalar entry(std::size_t dst_global, std::size_t src_global) const;

    Vector apply(const Vector& v) const;
    Matrix to_dense() const;
    GradedMap transpose() const;
    GradedMap scaled(const Scalar& c) const;
    // keep blocks whose (src, dst) pieces pass the predicate
    GradedMap restricted(const std::function<bool(std::size_t, std::size_t)>& keep) const;
    bool is_zero() const;

    GradedMap& operator+=(const GradedMap& o);
    GradedMap& operator-=(const GradedMap& o);
    friend GradedMap operator+(GradedMap a, const GradedMap& b) { return a += b; }
    friend GradedMap operator-(GradedMap a, const GradedMap& b) { return a -= b; }
    // composition a ∘ b
    friend GradedMap operator*(const GradedMap& a, const GradedMap& b);
    friend bool operator==(const GradedMap& a, const GradedMap& b);

    nlohmann::json to_json() const;
    static GradedMap from_json(const nlohmann::json& j, SpacePtr src, SpacePtr dst, Mode mode = Mode::Exact);

private:
    void prune();

    SpacePtr src_, dst_;
    std::optional<Weight> shift_;
    Mode mode_;
    std::map<BlockKey, Matrix> blocks_;
};

struct JordanChevalley {
    GradedMap semisimple;
    GradedMap nilpotent;
    std::size_t nilpotency_index = 1;
    std::size_t grading = 0;
};

// split L_j(0); grading selects the component λ_j of each piece weight
JordanChevalley jc_split(const GradedMap& l0, std::size_t grading = 0);

struct OperatorSeriesTerm {
    Monomial mono;
    GradedMap op;  // A · Π N_j^{k_j}/k_j! · P_λ
};

struct OperatorSeries {
    SpacePtr space;
    std::size_t num_vars = 1;
    std::optional<Rational> cutoff;
    Mode mode = Mode::Exact;
    std::vector<OperatorSeriesTerm> terms;

    // ⟨m', Σ A q^{L(0)} P_λ m⟩ with m' in dual coordinates
    MultiLogSeries pair(const Vector& dual, const Vector& m) const;
    unsigned max_log_power() const;
};

// jcs[j] is the split of L_j(0), giving variable q_j
OperatorSeries q_L0_insert(SpacePtr space, const std::vector<JordanChevalley>& jcs,
                           const std::optional<GradedMap>& a, const Rational& cutoff);

}  // namespace logsew
