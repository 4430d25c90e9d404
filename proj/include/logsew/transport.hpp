#pragma once

#include <complex>
#include <ostream>

#include "logsew/blocks.hpp"

namespace logsew {

struct DomainEscape : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StepUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// h_{i,k}(q) = Σ_m h[i][k][m] q^m, acting as A(q) = Σ_i Σ_k h_{i,k}(q) L_i(k−1)
class DeformationField {
public:
    explicit DeformationField(std::size_t num_slots = 0, Mode mode = Mode::Exact) : slots_(num_slots), mode_(mode) {}

    // k ↦ coefficient for a q-independent field
    static DeformationField autonomous(const std::vector<std::map<long, Scalar>>& h);

    std::size_t num_slots() const { return slots_.size(); }
    Mode mode() const { return mode_; }
    void set(std::size_t slot, long k, std::vector<Scalar> q_coeffs);
    const std::map<long, std::vector<Scalar>>& slot(std::size_t i) const { return slots_.at(i); }
    Scalar coefficient(std::size_t slot, long k, std::size_t m) const;

    bool is_zero() const;
    bool is_autonomous() const;
    // smallest k with a nonzero coefficient, or none
    std::optional<long> min_k() const;
    // weight headroom needed above the tested vectors for the given order
    long headroom(std::size_t order) const;

    // A_m w, the q^m coefficient of A(q) applied to w
    TensorVector apply(const TensorModule& tm, std::size_t m, const TensorVector& w) const;

    nlohmann::json to_json() const;
    static DeformationField from_json(const nlohmann::json& j);

private:
    std::vector<std::map<long, std::vector<Scalar>>> slots_;
    Mode mode_;
};

// m ↦ A_m
using OperatorFamily = std::function<TensorVector(std::size_t m, const TensorVector& w)>;

// lazily evaluated φ̂_n on basis tensors
class Transport {
public:
    Transport(const Block& phi0, OperatorFamily a);
    Transport(const Block& phi0, const DeformationField& field);

    Scalar coefficient(std::size_t n, const TensorIndex& w) const;
    Scalar coefficient(std::size_t n, const TensorVector& x) const;
    // Σ_{n ≤ order} φ̂_n(x) q^n
    Scalar eval(const TensorVector& x, const Scalar& q, std::size_t order) const;

private:
    const TensorVector& a_on(std::size_t m, const TensorIndex& w) const;

    Block phi0_;
    OperatorFamily a_;
    Mode mode_;
    mutable std::map<std::pair<std::size_t, TensorIndex>, Scalar> memo_;
    mutable std::map<std::pair<std::size_t, TensorIndex>, TensorVector> amemo_;
};

struct TransportSeries {
    std::size_t order = 0;
    std::map<TensorIndex, std::vector<Scalar>> coeffs;

    const std::vector<Scalar>& at(const TensorIndex& w) const { return coeffs.at(w); }
    MultiLogSeries series(const TensorIndex& w) const;
    Scalar eval(const TensorIndex& w, const Scalar& q) const;

    nlohmann::json to_json() const;
    static TransportSeries from_json(const nlohmann::json& j);
    // index,n,re,im
    void write_csv(std::ostream& os) const;
};

TransportSeries transport_recursion(const Block& phi0, const DeformationField& field, std::size_t order,
                                    const std::vector<TensorIndex>& ws);
TransportSeries transport_recursion(const Block& phi0, const OperatorFamily& a, std::size_t order,
                                    const std::vector<TensorIndex>& ws);

using TensorOperator = std::function<TensorVector(const TensorVector&)>;

// φ₀((−A)^n w)/n! for n ≤ order
std::vector<Scalar> autonomous_oracle_coefficients(const Block& phi0, const TensorOperator& a, std::size_t order,
                                                   const TensorIndex& w);
// φ₀(Σ_{n ≤ order} (−q)^n A^n w/n!)
Scalar autonomous_oracle(const Block& phi0, const TensorOperator& a, const Scalar& q, std::size_t order,
                         const TensorIndex& w);
TensorOperator field_operator(const TensorModule& tm, const DeformationField& field);

// exp(q Σ_k h_k η^k ∂_η) η for one slot of an autonomous field with h_k = 0 for k ≤ 1
CoordTransform field_transform(const std::map<long, std::vector<Scalar>>& slot, const Scalar& q, std::size_t order);
// ⊗_i U(β^i_q) on a tensor vector
TensorVector apply_field_U(const TensorModule& tm, const DeformationField& field, const Scalar& q, const TensorVector& w);

// max over w, q of |φ_q(U(β_q) e_w) − φ₀(e_w)|, the transport evaluated through `order`
Rational transport_coordinate_check(const Block& phi0, const DeformationField& field, const std::vector<TensorIndex>& ws,
                                    const std::vector<Scalar>& qs, std::size_t order);
// max over σ, w and 1 ≤ n ≤ order of the q^n coefficient of φ_q(U(β_q)(σ * e_w)), plus |φ₀(σ * e_w)|
Rational transport_section_check(const Block& phi0, const DeformationField& field, const std::vector<SectionDatum>& sections,
                              const std::vector<TensorIndex>& ws, std::size_t order);

// h(z, q) = Σ_k Σ_m h[k][m] q^m z^k
struct FlowSpec {
    std::map<long, std::vector<std::complex<double>>> h;
    double inner = 0.5;
    double outer = 2.0;
    double step = 1e-3;
    double margin = 0.05;

    void validate() const;
    bool is_autonomous() const;
    std::complex<double> field(std::complex<double> z, std::complex<double> q) const;

    nlohmann::json to_json() const;
    static FlowSpec from_json(const nlohmann::json& j);
};

struct FlowPoint {
    double t;
    std::complex<double> q;
    std::complex<double> beta;
};

// RK4 along q(t) = t q_target, t ∈ [0, 1]
std::vector<FlowPoint> flow_trajectory(const FlowSpec& spec, std::complex<double> z0, std::complex<double> q_target);
std::complex<double> flow_integrate(const FlowSpec& spec, std::complex<double> z0, std::complex<double> q_target);
void write_trajectory_csv(std::ostream& os, const std::vector<FlowPoint>& traj);

// β_q(r e^{2πij/samples})
std::vector<std::complex<double>> deformed_circle(const FlowSpec& spec, double r, std::complex<double> q, std::size_t samples);
// closed polygon through the samples
long winding_number(const std::vector<std::complex<double>>& curve, std::complex<double> point, double tol = 1e-9);
// |β_{q1+q2}(z) − β_{q1}(β_{q2}(z))|
double flow_group_law_deviation(const FlowSpec& spec, std::complex<double> z, std::complex<double> q1,
                                std::complex<double> q2);

}  // namespace logsew
