#include <doctest.h>

#include "logsew/voa.hpp"
#include "support.hpp"

using namespace testsupport;

namespace {

FockVector a_minus(std::vector<int> parts, long num = 1, long den = 1) { return oscillator_state(parts, cr(num, den)); }

Vector random_vector(std::mt19937& rng, SpacePtr s, int max_index) {
    Vector v(s);
    std::uniform_int_distribution<int> pick(0, max_index);
    for (int t = 0; t < 3; ++t) v.add(pick(rng), Scalar(rand_complex(rng)));
    return v;
}

// vectors of the window whose weight is at most wmax above the bottom
int top_index(const VertexModule& m, int levels) {
    auto s = m.space();
    int idx = 0;
    for (std::size_t p = 0; p < s->num_pieces() && int(p) <= levels; ++p) idx = int(s->offset(p) + s->piece(p).dim) - 1;
    return idx;
}

std::shared_ptr<FockModule> epsilon_toy(int K, const ComplexRational& mu) {
    // coefficient algebra C[ε]/ε², basis (1, ε); n0 = left multiplication by ε
    return std::make_shared<FockModule>(mu, K, std::vector<std::vector<ComplexRational>>{{cr(0), cr(0)}, {cr(1), cr(0)}},
                                        std::vector<std::string>{"1", "e"});
}

}  // namespace

TEST_CASE("partition enumeration") {
    for (int n = 0; n <= 12; ++n) CHECK(partitions_of(n).size() == partition_count(n));
    auto p4 = partitions_of(4);
    CHECK(p4.front() == Partition{4});
    CHECK(p4.back() == Partition{1, 1, 1, 1});
}

TEST_CASE("Heisenberg Fock module dimensions") {
    auto f = heisenberg_voa(5);
    std::vector<std::size_t> dims;
    for (const auto& p : f->space()->pieces()) dims.push_back(p.dim);
    CHECK(dims == std::vector<std::size_t>{1, 1, 2, 3, 5, 7});
    auto fm = heisenberg_module(cr(1, 2), 2);
    CHECK(fm->space()->piece(0).weight[0] == cr(1, 8));
}

TEST_CASE("Virasoro action on the vacuum module") {
    const auto& core = vacuum_core();
    CHECK(core.L(0, vacuum()).empty());
    CHECK(core.L(-1, vacuum()).empty());
    CHECK(core.L(-1, a_minus({1})) == a_minus({2}));
    CHECK(core.L(0, a_minus({2, 1})) == a_minus({2, 1}, 3));
    auto w = conformal_vector();
    CHECK(core.L(0, w) == fock_scaled(w, cr(2)));
    CHECK(core.L(1, w).empty());
    CHECK(core.L(2, w) == fock_scaled(vacuum(), cr(1, 2)));
}

TEST_CASE("vacuum and oscillator modes") {
    auto f = heisenberg_voa(4);
    auto s = f->space();
    CHECK(f->mode_map(vacuum(), -1) == GradedMap::identity(s));
    for (long n : {-3, -2, 0, 1, 2}) CHECK(f->mode_map(vacuum(), n).is_zero());
    auto vac = Vector::basis(s, 0);
    CHECK(f->mode(a_minus({1}), 0, vac).is_zero());
    // Y(a(−1)𝟏)_n = a(n)
    auto fm = heisenberg_module(cr(2, 3), 4);
    for (std::size_t j = 0; j < fm->space()->dim(); ++j) {
        auto x = fm->from_vector(Vector::basis(fm->space(), j));
        for (long n = -3; n <= 3; ++n)
            CHECK(fm->core().Y(a_minus({1}), n, x) == fm->core().a(n, x));
    }
}

TEST_CASE("Sugawara modes agree with modes of the conformal vector") {
    for (auto mu : {cr(0), cr(1, 2), cr(1, 3, 1, 2)}) {
        auto fm = heisenberg_module(mu, 5);
        for (std::size_t j = 0; j < fm->space()->dim(); ++j) {
            auto x = fm->from_vector(Vector::basis(fm->space(), j));
            for (long n = -3; n <= 3; ++n) CHECK(fm->core().Y(conformal_vector(), n + 1, x) == fm->core().L(n, x));
        }
    }
}

TEST_CASE("Virasoro relations") {
    auto check = [](const VertexModule& m, int K) {
        auto s = m.space();
        auto c = Scalar(m.central_charge());
        int top = top_index(m, K - 3);
        for (int j = 0; j <= top; ++j) {
            auto x = Vector::basis(s, j);
            for (long p = -3; p <= 3; ++p)
                for (long q = -3; q <= 3; ++q) {
                    auto lhs = m.virasoro(p, m.virasoro(q, x)) - m.virasoro(q, m.virasoro(p, x));
                    auto rhs = m.virasoro(p + q, x).scaled(Scalar(p - q));
                    if (p + q == 0) rhs += x.scaled(c * Scalar(rat(p * p * p - p, 12)));
                    CHECK(lhs == rhs);
                }
        }
    };
    check(*heisenberg_module(cr(1, 2), 6), 6);
    check(*epsilon_toy(5, cr(1)), 5);
}

TEST_CASE("Borcherds commutator on generators") {
    auto fm = heisenberg_module(cr(1, 3), 6);
    auto& core = fm->core();
    std::vector<FockVector> gens{a_minus({1}), a_minus({2}), conformal_vector()};
    for (const auto& u : gens)
        for (const auto& v : gens)
            for (long m = -2; m <= 2; ++m)
                for (long n = -2; n <= 2; ++n)
                    for (std::size_t j = 0; j < 5; ++j) {
                        auto x = fm->from_vector(Vector::basis(fm->space(), j));
                        auto lhs = core.Y(u, m, core.Y(v, n, x));
                        fock_axpy(lhs, cr(-1), core.Y(v, n, core.Y(u, m, x)));
                        FockVector rhs;
                        for (long k = 0; k <= 6; ++k)
                            fock_axpy(rhs, ComplexRational(binomial(m, k)),
                                      core.Y(vacuum_core().Y(u, k, v), m + n - k, x));
                        CHECK(lhs == rhs);
                    }
}

TEST_CASE("mode weight bookkeeping") {
    auto fm = heisenberg_module(cr(1, 2), 5);
    auto v = a_minus({2, 1});
    for (long n = -2; n <= 4; ++n) {
        auto m = fm->mode_map(v, n);
        REQUIRE(m.weight_shift());
        CHECK((*m.weight_shift())[0] == cr(3 - n - 1));
    }
}

TEST_CASE("log toy module") {
    auto toy = epsilon_toy(3, cr(1));
    auto jc = toy->jc();
    CHECK(jc.nilpotency_index == 2);
    CHECK(!jc.nilpotent.is_zero());
    // L(0)_n = μ·ε on the coefficient factor
    auto s = toy->space();
    auto vac1 = Vector::basis(s, toy->index_of(FockState{{}, 0}));
    auto vace = Vector::basis(s, toy->index_of(FockState{{}, 1}));
    CHECK(jc.nilpotent.apply(vac1) == vace);
    CHECK(jc.nilpotent.apply(vace).is_zero());
}

TEST_CASE("contragredient module") {
    auto fm = heisenberg_module(cr(1, 2), 5);
    auto dual = contragredient(fm);
    for (long n = -3; n <= 3; ++n) CHECK(dual->virasoro_map(n) == fm->virasoro_map(-n).transpose());
    // the conformal vector's contragredient modes reproduce L'(n) = L(−n)^T
    for (long n = -3; n <= 3; ++n) CHECK(dual->mode_map(conformal_vector(), n + 1) == fm->virasoro_map(-n).transpose());
    auto dd = contragredient(dual);
    std::vector<FockVector> vs{a_minus({1}), a_minus({2}), a_minus({1, 1}), a_minus({3, 1})};
    for (const auto& v : vs)
        for (long n = -2; n <= 3; ++n) CHECK(dd->mode_map(v, n) == fm->mode_map(v, n));

    auto one = std::make_shared<GradedSpace>(1, std::vector<Piece>{{{cr(3, 4)}, 1, {}}});
    auto triv = std::make_shared<TableModule>(one);
    auto tdual = contragredient(triv);
    CHECK(*tdual->space() == *one);
}

TEST_CASE("tensor module actions commute across slots") {
    std::mt19937 rng(1);
    auto f0 = heisenberg_voa(4);
    auto fm = heisenberg_module(cr(1, 2), 4);
    TensorModule t({f0, contragredient(fm), fm});
    std::vector<FockVector> vs{a_minus({1}), conformal_vector(), a_minus({2, 1})};
    for (int trial = 0; trial < 10; ++trial) {
        std::uniform_int_distribution<int> pick(0, 3), slot(0, 2), mode(-2, 2), vi(0, 2);
        TensorVector w;
        tensor_add(w, {std::size_t(pick(rng)), std::size_t(pick(rng)), std::size_t(pick(rng))}, Scalar(1L));
        std::size_t i = slot(rng), j = (i + 1 + slot(rng) % 2) % 3;
        auto &u = vs[vi(rng)], &v = vs[vi(rng)];
        long m = mode(rng), n = mode(rng);
        CHECK(t.mode(i, u, m, t.mode(j, v, n, w)) == t.mode(j, v, n, t.mode(i, u, m, w)));
    }
    (void)random_vector;
}

TEST_CASE("table module") {
    auto s = std::make_shared<GradedSpace>(1, std::vector<Piece>{{{cr(0)}, 2, {}}});
    auto tm = std::make_shared<TableModule>(s, cr(0));
    Matrix l0(2, 2);
    l0(0, 1) = Scalar(1L);
    GradedMap g(s, s);
    g.set_block(0, 0, l0);
    tm->set_virasoro(0, g);
    CHECK(tm->jc().nilpotency_index == 2);
    CHECK(tm->virasoro(5, Vector::basis(s, 0)).is_zero());
    CHECK_THROWS(tm->mode(a_minus({1}), 0, Vector::basis(s, 0)));
}
