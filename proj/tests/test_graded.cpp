#include <doctest.h>

#include "support.hpp"

using namespace testsupport;

namespace {

SpacePtr space1(std::vector<std::pair<ComplexRational, std::size_t>> pieces) {
    std::vector<Piece> ps;
    for (auto& [w, d] : pieces) ps.push_back({{w}, d, {}});
    return std::make_shared<GradedSpace>(1, ps);
}

}  // namespace

TEST_CASE("projection") {
    auto s = space1({{cr(1), 1}, {cr(2), 1}});
    auto m1 = Vector::basis(s, 0), m2 = Vector::basis(s, 1);
    CHECK(project(m1, {cr(1)}, ProjectMode::Exact) == m1);
    CHECK(project(m1, {cr(0)}, ProjectMode::Exact).is_zero());
    CHECK(project(m1 + m2, {cr(1)}, ProjectMode::AtMost) == m1);
    CHECK_THROWS_AS(project(m1, {cr(1), cr(1)}, ProjectMode::Exact), ArityMismatch);
}

TEST_CASE("jc_split examples") {
    auto s = space1({{cr(3, 2), 2}});
    auto l0 = GradedMap::identity(s).scaled(Scalar(cr(3, 2)));
    auto jc = jc_split(l0);
    CHECK(jc.nilpotent.is_zero());
    CHECK(jc.nilpotency_index == 1);

    auto lam = cr(1, 3);
    Matrix j(2, 2);
    j(0, 0) = Scalar(lam);
    j(1, 1) = Scalar(lam);
    j(0, 1) = Scalar(1L);
    GradedMap l0j(s, s);
    auto s2 = space1({{lam, 2}});
    GradedMap jordan(s2, s2);
    jordan.set_block(0, 0, j);
    auto jc2 = jc_split(jordan);
    CHECK(jc2.nilpotency_index == 2);
    CHECK(jc2.nilpotent.entry(0, 1) == Scalar(1L));
    CHECK(jc2.nilpotent.entry(0, 0).is_zero());
    CHECK(jc2.semisimple * jc2.nilpotent == jc2.nilpotent * jc2.semisimple);
    CHECK(jc2.semisimple + jc2.nilpotent == jordan);

    auto bad = space1({{cr(0), 2}});
    CHECK_THROWS_AS(jc_split(GradedMap::identity(bad)), NotNilpotent);
}

TEST_CASE("jc_split on random block-triangular inputs") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        auto s = space1({{cr(0), 3}, {cr(1, 2), 2}});
        GradedMap l0(s, s);
        for (std::size_t p = 0; p < 2; ++p) {
            std::size_t d = s->piece(p).dim;
            Matrix u(d, d);
            for (std::size_t i = 0; i < d; ++i) {
                u(i, i) = Scalar(s->piece(p).weight[0]);
                for (std::size_t k = i + 1; k < d; ++k) u(i, k) = Scalar(rand_rational(rng));
            }
            Matrix b = rand_invertible(rng, d);
            l0.set_block(p, p, b * u * b.inverse());
        }
        auto jc = jc_split(l0);
        CHECK(jc.semisimple + jc.nilpotent == l0);
        CHECK(jc.semisimple * jc.nilpotent == jc.nilpotent * jc.semisimple);
        GradedMap pw = GradedMap::identity(s);
        for (std::size_t k = 0; k < jc.nilpotency_index; ++k) pw = pw * jc.nilpotent;
        CHECK(pw.is_zero());
    }
}

TEST_CASE("q^L0 insertion examples") {
    auto s = space1({{cr(1, 2), 1}});
    auto jc = jc_split(GradedMap::identity(s).scaled(Scalar(cr(1, 2))));
    auto ins = q_L0_insert(s, {jc}, std::nullopt, Rational(10));
    auto m = Vector::basis(s, 0);
    CHECK(ins.pair(m, m) == q1(cr(1, 2), 0, Scalar(1L), Rational(10)));

    auto lam = cr(2);
    auto s2 = space1({{lam, 2}});
    Matrix j(2, 2);
    j(0, 0) = Scalar(lam);
    j(1, 1) = Scalar(lam);
    j(1, 0) = Scalar(1L);  // N m1 = m2
    GradedMap l0(s2, s2);
    l0.set_block(0, 0, j);
    auto ins2 = q_L0_insert(s2, {jc_split(l0)}, std::nullopt, Rational(10));
    auto e1 = Vector::basis(s2, 0), e2 = Vector::basis(s2, 1);
    auto c = Rational(10);
    CHECK(ins2.pair(e1, e1) == q1(lam, 0, Scalar(1L), c));
    CHECK(ins2.pair(e2, e2) == q1(lam, 0, Scalar(1L), c));
    CHECK(ins2.pair(e2, e1) == q1(lam, 1, Scalar(1L), c));
    CHECK(ins2.pair(e1, e2).is_zero());
    CHECK(ins2.max_log_power() == 1);

    auto ins0 = q_L0_insert(s2, {jc_split(l0)}, GradedMap::zero(s2, s2), Rational(10));
    CHECK(ins0.terms.empty());
}

TEST_CASE("q^L0 insertion is basis independent") {
    std::mt19937 rng(9);
    auto s = space1({{cr(0), 3}, {cr(1), 2}});
    GradedMap l0(s, s);
    Matrix n0(3, 3);
    n0(1, 0) = Scalar(1L);
    n0(2, 1) = Scalar(1L);
    Matrix d0 = Matrix::identity(3).scaled(Scalar(0L)) + n0;
    l0.set_block(0, 0, d0);
    l0.set_block(1, 1, Matrix::identity(2));
    GradedMap basis_change(s, s), inv(s, s);
    for (std::size_t p = 0; p < 2; ++p) {
        Matrix b = rand_invertible(rng, s->piece(p).dim);
        basis_change.set_block(p, p, b);
        inv.set_block(p, p, b.inverse());
    }
    GradedMap l0b = inv * l0 * basis_change;
    auto a = q_L0_insert(s, {jc_split(l0)}, std::nullopt, Rational(5));
    auto b = q_L0_insert(s, {jc_split(l0b)}, std::nullopt, Rational(5));
    CHECK(a.max_log_power() == 2);
    CHECK(b.max_log_power() <= jc_split(l0b).nilpotency_index - 1);
    for (int t = 0; t < 5; ++t) {
        Vector m(s), md(s);
        for (std::size_t i = 0; i < s->dim(); ++i) {
            m.add(i, Scalar(rand_rational(rng)));
            md.add(i, Scalar(rand_rational(rng)));
        }
        Vector m_new = inv.apply(m);
        Vector md_new = basis_change.transpose().apply(md);
        CHECK(a.pair(md, m) == b.pair(md_new, m_new));
    }
}

TEST_CASE("semisimple insertion has no logs") {
    auto s = space1({{cr(0), 2}, {cr(1, 3), 1}, {cr(2), 1}});
    GradedMap l0(s, s);
    for (std::size_t p = 0; p < 3; ++p)
        l0.set_block(p, p, Matrix::identity(s->piece(p).dim).scaled(Scalar(s->piece(p).weight[0])));
    auto ins = q_L0_insert(s, {jc_split(l0)}, std::nullopt, Rational(1));
    CHECK(ins.terms.size() == 2);
    CHECK(ins.max_log_power() == 0);
    auto m = Vector::basis(s, 2);
    CHECK(ins.pair(m, m) == q1(cr(1, 3), 0, Scalar(1L), Rational(1)));
}

TEST_CASE("empty graded space") {
    auto s = std::make_shared<GradedSpace>(1);
    CHECK(s->dim() == 0);
    auto jc = jc_split(GradedMap::identity(s));
    CHECK(q_L0_insert(s, {jc}, std::nullopt, Rational(3)).terms.empty());
}
