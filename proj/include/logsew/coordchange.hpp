#pragma once

#include <map>
#include <optional>

#include "logsew/laurent.hpp"
#include "logsew/voa.hpp"

namespace logsew {

struct MissingBranch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// a point on the universal cover: a₁ = modulus · e^{i arg}
struct Branch {
    double modulus;
    double arg;
};

Branch principal_branch(const Scalar& a1);

class CoordTransform {
public:
    CoordTransform() = default;
    CoordTransform(PowerSeries alpha, Scalar a1, std::vector<Scalar> c)
        : alpha_(std::move(alpha)), a1_(std::move(a1)), c_(std::move(c)) {}

    const PowerSeries& series() const { return alpha_; }
    const Scalar& a1() const { return a1_; }
    // c()[n-1] = c_n
    const std::vector<Scalar>& c() const { return c_; }
    std::size_t order() const { return c_.size(); }
    Mode mode() const { return a1_.mode(); }

    nlohmann::json to_json() const;
    static CoordTransform from_json(const nlohmann::json& j);

private:
    PowerSeries alpha_;
    Scalar a1_;
    std::vector<Scalar> c_;
};

// exp(Σ c_n z^{n+1}∂_z) z, known below prec
PowerSeries canonical_flow(const std::vector<Scalar>& c, std::size_t prec);
CoordTransform extract_cn(const PowerSeries& alpha);
CoordTransform identity_transform(std::size_t order);
// γ_z(t) = 1/(z+t) − 1/z
PowerSeries gamma_series(const ComplexRational& z, std::size_t order);

// a₁^{L(0)} via the Jordan–Chevalley split of the module's L(0)
Vector scale_L0(const VertexModule& m, const JordanChevalley& jc, const Scalar& a1, const Vector& v,
                std::optional<Branch> branch = std::nullopt);
Vector apply_U(const CoordTransform& t, const VertexModule& m, const Vector& v, std::optional<Branch> branch = std::nullopt);
Vector apply_U(const CoordTransform& t, const VertexModule& m, const JordanChevalley& jc, const Vector& v,
               std::optional<Branch> branch = std::nullopt);

// ρ(ζ, z) = Σ r_{ij} ζ^i z^j
struct FamilyOfTransforms {
    std::map<std::pair<int, int>, Scalar> coeffs;

    PowerSeries at(const Scalar& zeta, std::size_t prec) const;
    void check_identity_at_zero() const;
};

struct FamilyDerivative {
    Vector value;     // ∂_ζ U(ρ_ζ) v at ζ = 0
    Vector inverse;   // ∂_ζ U(ρ_ζ^{-1}) v at ζ = 0
};

FamilyDerivative family_derivative(const FamilyOfTransforms& rho, const VertexModule& m, const Vector& v);

// S_η f for f given as its expansion f(η0 + t)
PowerSeries schwarzian(const PowerSeries& f);

using VLaurent = std::map<long, FockVector>;

void vlaurent_axpy(VLaurent& x, const ComplexRational& c, const VLaurent& y);
VLaurent vlaurent_mul(const Laurent& h, const VLaurent& u);
VLaurent vlaurent_derivative(const VLaurent& u);

VLaurent lie_local(const Laurent& h, const std::vector<ComplexRational>& g, const std::vector<VLaurent>& dtau_u,
                   const VLaurent& u, bool with_form);

}  // namespace logsew
