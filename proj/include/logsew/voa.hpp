#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "logsew/graded.hpp"

namespace logsew {

struct TruncationOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Truncation { Drop, Strict };

// nonincreasing positive parts
using Partition = std::vector<int>;

std::vector<Partition> partitions_of(int n);  // reverse-lexicographic
int partition_weight(const Partition& p);

struct FockState {
    Partition parts;
    std::uint32_t a = 0;  // index in the coefficient algebra factor
    auto operator<=>(const FockState&) const = default;
};

using FockVector = std::map<FockState, ComplexRational>;

void fock_add(FockVector& x, const FockState& s, const ComplexRational& c);
void fock_axpy(FockVector& x, const ComplexRational& c, const FockVector& y);
FockVector fock_scaled(const FockVector& x, const ComplexRational& c);
bool fock_equal(const FockVector& x, const FockVector& y);

// elements of the Heisenberg VOA V = F_0
FockVector vacuum();
FockVector conformal_vector();
FockVector oscillator_state(const Partition& parts, const ComplexRational& c = ComplexRational(1));
// homogeneous components of a V element, keyed by weight
std::map<int, FockVector> homogeneous_components(const FockVector& v);
int v_weight(const FockVector& v);  // throws if not homogeneous
int max_weight(const FockVector& v);

// oscillator algebra on F ⊗ C^d with a(0) = μ·1 + n0
class FockCore {
public:
    FockCore(ComplexRational mu = ComplexRational(0), std::vector<std::vector<ComplexRational>> n0 = {});

    std::size_t coeff_dim() const { return dim_; }
    const ComplexRational& momentum() const { return mu_; }
    const std::vector<std::vector<ComplexRational>>& zero_mode() const { return m0_; }

    FockVector a(long n, const FockVector& w) const;
    FockVector L(long n, const FockVector& w) const;
    // Y(v)_m w for v in V
    FockVector Y(const FockVector& v, long m, const FockVector& w) const;

private:
    FockVector a_state(long n, const FockState& s) const;
    const FockVector& Y_basis(const Partition& v, long m, const FockState& w) const;

    ComplexRational mu_;
    std::size_t dim_;
    std::vector<std::vector<ComplexRational>> m0_;  // m0_[b][a]: a(0) e_a = Σ_b m0_[b][a] e_b
    mutable std::mutex mu_cache_;
    mutable std::map<std::tuple<Partition, long, FockState>, FockVector> cache_;
};

const FockCore& vacuum_core();

// V-side Virasoro action
FockVector v_virasoro(long n, const FockVector& v);

class VertexModule {
public:
    virtual ~VertexModule() = default;

    virtual SpacePtr space() const = 0;
    virtual ComplexRational central_charge() const { return ComplexRational(1); }
    virtual Vector mode(const FockVector& v, long n, const Vector& w, Truncation t = Truncation::Drop) const = 0;
    virtual Vector virasoro(long n, const Vector& w, Truncation t = Truncation::Drop) const;

    // Y†(v)_n = Σ_k ((−1)^d / k!) Y(L(1)^k v)_{2d−k−n−2}; the contragredient action is its transpose
    Vector adjoint_mode(const FockVector& v, long n, const Vector& w, Truncation t = Truncation::Drop) const;

    GradedMap mode_map(const FockVector& v, long n) const;
    GradedMap virasoro_map(long n) const;
    GradedMap adjoint_mode_map(const FockVector& v, long n) const;
    JordanChevalley jc() const;

    // lowest Re weight of the space, used to bound mode sums
    Rational lowest_weight() const;
    // largest n for which Y(v)_n w can be nonzero, v of weight d
    long max_mode_index(int d, const Vector& w) const;
};

using ModulePtr = std::shared_ptr<const VertexModule>;

// F_μ ⊗ C^d truncated at level K; a(0) = μ + left action of n0 on the coefficient factor
class FockModule : public VertexModule {
public:
    FockModule(ComplexRational mu, int K, std::vector<std::vector<ComplexRational>> n0 = {},
               std::vector<std::string> coeff_labels = {});

    SpacePtr space() const override { return space_; }
    Vector mode(const FockVector& v, long n, const Vector& w, Truncation t = Truncation::Drop) const override;
    Vector virasoro(long n, const Vector& w, Truncation t = Truncation::Drop) const override;

    int cutoff() const { return K_; }
    const FockCore& core() const { return core_; }
    std::size_t coeff_dim() const { return core_.coeff_dim(); }
    std::size_t index_of(const FockState& s) const;
    const FockState& state_of(std::size_t global) const { return states_.at(global); }

    Vector to_vector(const FockVector& x, Truncation t = Truncation::Drop) const;
    FockVector from_vector(const Vector& v) const;

private:
    ComplexRational mu_;
    int K_;
    FockCore core_;
    SpacePtr space_;
    std::vector<FockState> states_;
    std::map<FockState, std::size_t> index_;
};

std::shared_ptr<FockModule> heisenberg_module(const ComplexRational& mu, int K);
std::shared_ptr<FockModule> heisenberg_voa(int K);

// graded dual with ⟨Y'(v)_n m', m⟩ = ⟨m', Y†(v)_n m⟩
class ContragredientModule : public VertexModule {
public:
    explicit ContragredientModule(ModulePtr base) : base_(std::move(base)) {}

    SpacePtr space() const override { return base_->space(); }
    ComplexRational central_charge() const override { return base_->central_charge(); }
    Vector mode(const FockVector& v, long n, const Vector& w, Truncation t = Truncation::Drop) const override;
    Vector virasoro(long n, const Vector& w, Truncation t = Truncation::Drop) const override;

    const ModulePtr& base() const { return base_; }

private:
    ModulePtr base_;
};

ModulePtr contragredient(ModulePtr m);

// user-supplied mode tables on a graded space
class TableModule : public VertexModule {
public:
    TableModule(SpacePtr space, ComplexRational c = ComplexRational(1)) : space_(std::move(space)), c_(std::move(c)) {}

    void set_mode(const Partition& v, long n, GradedMap m);
    void set_virasoro(long n, GradedMap m);

    SpacePtr space() const override { return space_; }
    ComplexRational central_charge() const override { return c_; }
    Vector mode(const FockVector& v, long n, const Vector& w, Truncation t = Truncation::Drop) const override;
    Vector virasoro(long n, const Vector& w, Truncation t = Truncation::Drop) const override;

    static std::shared_ptr<TableModule> from_json(const nlohmann::json& j, Mode mode = Mode::Exact);

private:
    SpacePtr space_;
    ComplexRational c_;
    std::map<std::pair<Partition, long>, GradedMap> modes_;
    std::map<long, GradedMap> virasoro_;
};

using TensorIndex = std::vector<std::size_t>;
using TensorVector = std::map<TensorIndex, Scalar>;

void tensor_add(TensorVector& x, const TensorIndex& i, const Scalar& c);
void tensor_axpy(TensorVector& x, const Scalar& c, const TensorVector& y);

class TensorModule {
public:
    explicit TensorModule(std::vector<ModulePtr> factors) : factors_(std::move(factors)) {}

    std::size_t size() const { return factors_.size(); }
    const ModulePtr& factor(std::size_t i) const { return factors_.at(i); }
    const std::vector<ModulePtr>& factors() const { return factors_; }
    Weight weight(const TensorIndex& idx) const;

    TensorVector mode(std::size_t slot, const FockVector& v, long n, const TensorVector& w,
                      Truncation t = Truncation::Drop) const;
    TensorVector virasoro(std::size_t slot, long n, const TensorVector& w, Truncation t = Truncation::Drop) const;

private:
    template <class F>
    TensorVector act(std::size_t slot, const TensorVector& w, F&& f) const;

    std::vector<ModulePtr> factors_;
};

}  // namespace logsew
