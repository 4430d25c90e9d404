#pragma once

#include "logsew/sewing.hpp"

namespace logsew {

struct NotACommuting : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidCertificate : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

using AlgVec = std::vector<ComplexRational>;

// unital algebra with basis e_0..e_{n−1}; products[i][j] = e_i e_j
class FiniteAlgebra {
public:
    FiniteAlgebra(std::vector<std::vector<AlgVec>> products, AlgVec unit);

    static FiniteAlgebra scalars();
    // C[ε]/(ε²) with basis 1, ε
    static FiniteAlgebra dual_numbers();

    std::size_t dim() const { return unit_.size(); }
    const AlgVec& unit() const { return unit_; }
    const AlgVec& product(std::size_t i, std::size_t j) const { return products_.at(i).at(j); }
    AlgVec mul(const AlgVec& a, const AlgVec& b) const;
    AlgVec basis(std::size_t i) const;

    nlohmann::json to_json() const;
    static FiniteAlgebra from_json(const nlohmann::json& j);

private:
    std::vector<std::vector<AlgVec>> products_;
    AlgVec unit_;
};

// ω(ab) = ω(ba), checked on basis pairs
class SLF {
public:
    SLF(const FiniteAlgebra& a, AlgVec values);
    ComplexRational operator()(const AlgVec& x) const;
    const AlgVec& values() const { return values_; }

private:
    AlgVec values_;
};

// one term x_i ⊗ f_i of a dual basis; f_i given on basis vectors of M
struct CertificateEntry {
    Vector x;
    std::map<std::size_t, AlgVec> f;
};

// right A-action on M by weight-preserving maps, with a dual-basis certificate on the pieces Re λ ≤ window
class RightModuleStructure {
public:
    RightModuleStructure(FiniteAlgebra alg, ModulePtr m, std::vector<GradedMap> action, std::vector<CertificateEntry> cert,
                         Rational window);

    // A = C acting by scalars, standard basis certificate
    static RightModuleStructure scalars(ModulePtr m, Rational window);
    // M ≅ ⊕ x_i e_i A on the window; f_i solved from the generators
    static RightModuleStructure from_generators(FiniteAlgebra alg, ModulePtr m, std::vector<GradedMap> action,
                                                const std::vector<Vector>& gens, const std::vector<AlgVec>& idempotents,
                                                Rational window);

    const FiniteAlgebra& algebra() const { return alg_; }
    const ModulePtr& module() const { return m_; }
    const std::vector<GradedMap>& action() const { return action_; }
    const std::vector<CertificateEntry>& certificate() const { return cert_; }
    const Rational& window() const { return window_; }
    bool in_window(std::size_t piece) const;

    Vector act(const Vector& v, const AlgVec& a) const;
    AlgVec eval_f(std::size_t i, const Vector& v) const;

    // max deviation of [ρ_a, Y(v)_n] over generators v and |n| ≤ mode_range, plus [ρ_a, L(0)]
    Rational commutation_defect(const std::vector<FockVector>& generators, long mode_range) const;
    // true if T commutes with every ρ_a on the window
    bool commutes(const GradedMap& t) const;

    nlohmann::json to_json() const;
    static RightModuleStructure from_json(const nlohmann::json& j, ModulePtr m);

private:
    void validate() const;

    FiniteAlgebra alg_;
    ModulePtr m_;
    std::vector<GradedMap> action_;
    std::vector<CertificateEntry> cert_;
    Rational window_;
};

// Σ_i ω(f_i(T x_i)); exact mode, T A-linear and supported on the window
Scalar hs_trace(const SLF& w, const RightModuleStructure& r, const GradedMap& t);

// Hom_A(M_{[μ]}, M_{[λ]}) by pieces, bases computed on demand
class End0A {
public:
    explicit End0A(const RightModuleStructure& r) : r_(&r) {}

    const std::vector<Matrix>& basis(std::size_t lambda_piece, std::size_t mu_piece) const;
    GradedMap embed(std::size_t lambda_piece, std::size_t mu_piece, const Matrix& x) const;
    // coordinates of x in basis(λ, μ); throws NotACommuting if x is not A-linear
    std::vector<Scalar> coordinates(std::size_t lambda_piece, std::size_t mu_piece, const Matrix& x) const;

private:
    const RightModuleStructure* r_;
    mutable std::map<std::pair<std::size_t, std::size_t>, std::vector<Matrix>> cache_;
};

enum class Side { First, Second };

// (v ⊗ 𝟏)_n T = Y(v)_n ∘ T,  (𝟏 ⊗ v)_n T = T ∘ Y†(v)_n
GradedMap end0a_action(const VertexModule& m, const FockVector& v, Side side, long n, const GradedMap& t);

// max |Tr^ω(Y(U(γ_z)v ⊗ 𝟏, z^{−1}) T) − Tr^ω(Y(𝟏 ⊗ v, z) T)| over basis maps T on pieces Re ≤ lambda and |n| ≤ mode_range
Rational trace_block_check(const SLF& w, const RightModuleStructure& r, const std::vector<FockVector>& vs,
                           const Rational& lambda, long mode_range);

using RawSLF = std::function<Scalar(const GradedMap&)>;

// Σ_λ q^λ SLF(q^{L(0)_n} P_λ φ♯(w) P_λ); φ♯ read from the dual and module slots of φ
MultiLogSeries pseudo_sew_raw(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const RawSLF& slf,
                              const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w);
MultiLogSeries pseudo_sew(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const SLF& w,
                          const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w_idx);

// S(φ ⊗ Tr^ω) in (q1, q2): End⁰_A(M) sewn to φ through its dual basis, q1 on the left factor and q2 on the right
MultiLogSeries sew_with_trace(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const SLF& w,
                              const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w_idx);
// max deviation between pseudo_sew and the diagonal restriction of sew_with_trace
Rational trace_sewing_check(const Block& phi, std::size_t dual_slot, std::size_t m_slot, const SLF& w,
                     const RightModuleStructure& r, const Rational& cutoff, const TensorIndex& w_idx);

// F_μ ⊗ C² with a(0) = μ + ε, ε acting on the right by the same nilpotent
struct EpsilonToy {
    std::shared_ptr<FockModule> module;
    RightModuleStructure structure;
};
EpsilonToy epsilon_toy(const ComplexRational& mu, int K, const Rational& window);

}  // namespace logsew
