#pragma once

#include "logsew/blocks.hpp"

namespace logsew {

// slot m_slot carries M_j, dual_slot carries M_j'
struct SewnPair {
    std::size_t m_slot;
    std::size_t dual_slot;
};

// ψ is the product of the blocks; their slots are concatenated in order
struct SewingPlan {
    std::vector<Block> blocks;
    std::vector<SewnPair> pairs;
    Rational cutoff;
    // (r_j, ρ_j), used only to flag sample points outside |q_j| < r_j ρ_j
    std::vector<std::pair<double, double>> radii;
    // optional change of basis per pair and piece: columns are the new basis in old coordinates
    std::vector<std::map<std::size_t, Matrix>> bases;

    std::size_t num_slots() const;
    std::vector<std::size_t> open_slots() const;
    const VertexModule& module_at(std::size_t slot) const;
    void validate() const;
};

// Sψ(w) for w a tensor over the open slots
MultiLogSeries sew(const SewingPlan& plan, const TensorVector& w);
MultiLogSeries sew(const SewingPlan& plan, const TensorIndex& w);
// Sψ on every open basis tuple whose slot weights lie within max_weight of the bottom
std::map<TensorIndex, MultiLogSeries> sew_all(const SewingPlan& plan, const Rational& max_weight);

// Σ_n q^n Sψ(σ_n *_slot w); σ_n acts at the open slot through its block's sphere (R = 1)
MultiLogSeries sewn_section_action(const SewingPlan& plan, const std::vector<SectionDatum>& sigma_by_order,
                                   std::size_t open_slot, const TensorIndex& w);

// coefficient of q^n in Σ_{m∈Z} q^m z/(1 − q^m z)², a q-invariant function with double poles at q^Z
RationalFunction q_invariant_p2(unsigned n);

// f(ξ, ϖ) = Σ f_ab ξ^a ϖ^b
using BivariatePoly = std::map<std::pair<long, long>, ComplexRational>;

struct MultisewSides {
    std::map<std::pair<std::size_t, std::size_t>, MultiLogSeries> xi_side;
    std::map<std::pair<std::size_t, std::size_t>, MultiLogSeries> varpi_side;
};

// both residues as elements of M ⊗ M' with entries indexed by (basis of M, dual basis of M'), pieces Re λ ≤ cutoff
MultisewSides multisew_sides(const ModulePtr& m, const FockVector& u, const BivariatePoly& f, const Rational& cutoff);
Rational multisew_identity_check(const ModulePtr& m, const FockVector& u, const BivariatePoly& f, const Rational& cutoff);

struct ConvergenceRow {
    double exponent;      // Re exponent of the group
    std::complex<double> term;
    std::complex<double> partial;
    double majorant;      // Σ |coeff| |q^e| |log q|^l up to this group
};

struct ConvergenceSample {
    std::vector<EvalPoint> point;
    std::vector<ConvergenceRow> rows;
    std::optional<double> stabilization_order;  // offset from the lowest exponent
    bool reliable = false;                       // the stabilization window lies inside the known terms
    bool inside_radii = true;
};

struct ConvergenceOptions {
    double tol = 1e-6;
    std::size_t window = 3;
};

std::vector<ConvergenceSample> convergence_table(const MultiLogSeries& s, const std::vector<std::vector<EvalPoint>>& samples,
                                                 const ConvergenceOptions& opt = {},
                                                 const std::vector<std::pair<double, double>>& radii = {});
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceSample>& t);

// (c/12) Σ_i Res S_i · a_i
ComplexRational projective_term(const std::vector<std::pair<Laurent, Laurent>>& chart, const ComplexRational& c);

struct Curvature {
    ComplexRational f;          // −(c/12) Σ Res ∂³h_i · k_i
    ComplexRational curvature;  // −f
};
Curvature curvature_scalar(const std::vector<std::pair<Laurent, Laurent>>& hk, const ComplexRational& c);

}  // namespace logsew
