#pragma once

#include <functional>
#include <mutex>

#include "logsew/coordchange.hpp"

namespace logsew {

struct CoverageGap : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MarkedPoint {
    bool at_infinity = false;
    ComplexRational z;

    static MarkedPoint finite(ComplexRational z) { return {false, std::move(z)}; }
    static MarkedPoint infinity() { return {true, ComplexRational(0)}; }
    std::string str() const { return at_infinity ? "inf" : z.str(); }
    bool operator==(const MarkedPoint&) const = default;
};

// P¹ with marked points and standard coordinates z − z_i, 1/z
struct MarkedSphere {
    std::vector<MarkedPoint> points;

    explicit MarkedSphere(std::vector<MarkedPoint> pts);
    MarkedSphere() = default;
    std::size_t size() const { return points.size(); }
    bool marks_infinity() const;
    bool marks(const ComplexRational& z) const;
};

// (P¹ | 1, ∞, 0; z−1, 1/z, z)
MarkedSphere sphere_Q();
// (P¹ | ∞, 0; 1/z, z)
MarkedSphere sphere_N();

// Σ p_k z^k + Σ_b Σ_{j≥1} r_{b,j} (z − b)^{−j}
struct RationalFunction {
    std::vector<ComplexRational> poly;
    std::map<ComplexRational, std::map<int, ComplexRational>> poles;

    static RationalFunction monomial(long k);
    static RationalFunction pole(const ComplexRational& b, int order, const ComplexRational& r = ComplexRational(1));
    RationalFunction& operator+=(const RationalFunction& o);
    RationalFunction scaled(const ComplexRational& c) const;
    long degree() const;  // of the polynomial part, −1 if zero

    // Laurent expansion in η = z − a, terms up to η^{max_power}
    Laurent expand_at(const ComplexRational& a, long max_power) const;
    // f(1/ϖ) in ϖ, terms up to ϖ^{max_power}
    Laurent expand_at_infinity(long max_power) const;

    nlohmann::json to_json() const;
    static RationalFunction from_json(const nlohmann::json& j);
};

// Σ v_i ⊗ f_i(z) dz in the global coordinate z
struct SectionDatum {
    std::vector<std::pair<FockVector, RationalFunction>> entries;

    void validate(const MarkedSphere& s) const;
    // σ at point i as v-valued Laurent series in the local coordinate, times dη, up to η^{max_power}
    VLaurent local_expansion(const MarkedSphere& s, std::size_t i, long max_power) const;

    nlohmann::json to_json() const;
    static SectionDatum from_json(const nlohmann::json& j);
};

// Σ_k Y(x_k)_k w for a local section Σ x_k η^k dη
Vector residue_action_local(const VertexModule& m, const VLaurent& x, const Vector& w, Truncation t = Truncation::Strict);
Vector residue_action(const SectionDatum& s, const MarkedSphere& sph, std::size_t i, const VertexModule& m, const Vector& w,
                      Truncation t = Truncation::Strict);
TensorVector residue_action(const SectionDatum& s, const MarkedSphere& sph, std::size_t i, const TensorModule& tm,
                            const TensorVector& w, Truncation t = Truncation::Strict);

enum class Provenance { MatrixElement, Pairing, PseudoTrace, User, Sewn };
std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& s);

using BlockGenerator = std::function<Scalar(const TensorIndex&)>;

// functional on a tensor product of modules, stored as a table with an optional lazy generator
class Block {
public:
    Block(MarkedSphere sphere, std::shared_ptr<const TensorModule> modules, Provenance p, BlockGenerator gen, Mode mode = Mode::Exact);
    // user table; entries absent below the coverage bound are zero
    Block(MarkedSphere sphere, std::shared_ptr<const TensorModule> modules, std::map<TensorIndex, Scalar> table,
          std::vector<Rational> coverage, Mode mode = Mode::Exact);

    const MarkedSphere& sphere() const { return sphere_; }
    const std::shared_ptr<const TensorModule>& modules() const { return modules_; }
    Provenance provenance() const { return prov_; }
    Mode mode() const { return mode_; }

    Scalar operator()(const TensorIndex& idx) const;
    Scalar eval(const TensorVector& w) const;
    std::map<TensorIndex, Scalar> table() const;

    // materialized table over all indices whose slot weights are at most max_weight
    nlohmann::json to_json(const Rational& max_weight) const;
    static Block from_json(const nlohmann::json& j, MarkedSphere sphere, std::shared_ptr<const TensorModule> modules);

private:
    MarkedSphere sphere_;
    std::shared_ptr<const TensorModule> modules_;
    Provenance prov_;
    BlockGenerator gen_;
    std::vector<Rational> coverage_;
    Mode mode_;
    struct Cache {
        std::map<TensorIndex, Scalar> table;
        std::mutex mu;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

Scalar ward_residual(const Block& phi, const SectionDatum& s, const TensorIndex& w);

// φ(v ⊗ m' ⊗ m) = ⟨Y_M(v, 1)m, m'⟩ on Q; V factor must be a Fock module
Block matrix_element_block(std::shared_ptr<const FockModule> V, ModulePtr M);
// φ(m' ⊗ m) = ⟨m, m'⟩ on N
Block pairing_block(ModulePtr M);

// Σ_{n≥0} (1/n!) ∂^n f · g · Y(u)_n v
VLaurent lie_bracket_section(const FockVector& u, const Laurent& f, const FockVector& v, const Laurent& g);
// max |[u f dz *, v g dz *] w − (L_{u f dz} v g dz) * w|
Rational commutator_check(const VertexModule& m, const FockVector& u, const Laurent& f, const FockVector& v, const Laurent& g,
                          const Vector& w);
// ((∂_z + L(−1)) v f dz) * w
Rational derivative_section_check(const VertexModule& m, const FockVector& v, const Laurent& f, const Vector& w);

Rational max_abs(const Vector& v);

}  // namespace logsew
