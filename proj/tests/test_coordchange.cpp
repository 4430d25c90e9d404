#include <doctest.h>

#include <cmath>
#include <numbers>

#include "logsew/coordchange.hpp"
#include "support.hpp"

using namespace testsupport;

namespace {

PowerSeries poly(std::vector<ComplexRational> c, std::size_t prec) {
    std::vector<Scalar> s;
    for (auto& x : c) s.emplace_back(x);
    return PowerSeries(s, prec);
}

PowerSeries rand_transform(std::mt19937& rng, std::size_t prec, bool real = true) {
    PowerSeries a = PowerSeries::constant(Scalar(0L), prec);
    ComplexRational a1;
    do a1 = rand_complex(rng, real);
    while (a1.is_zero());
    a.set(1, Scalar(a1));
    for (std::size_t k = 2; k < prec; ++k) a.set(k, Scalar(rand_complex(rng, real)));
    return a;
}

// series exp(m) by summing powers until they vanish (m nilpotent)
Matrix dense_exp(const Matrix& m) {
    Matrix sum = Matrix::identity(m.rows()), term = Matrix::identity(m.rows());
    for (long k = 1; !term.is_zero(); ++k) {
        term = (term * m).scaled(Scalar(rat(1, k)));
        sum = sum + term;
    }
    return sum;
}

std::vector<std::complex<double>> to_c(const std::vector<Scalar>& x) {
    std::vector<std::complex<double>> r;
    for (auto& s : x) r.push_back(s.to_complex());
    return r;
}

FockVector fsum(const FockVector& a, const FockVector& b) {
    FockVector r = a;
    fock_axpy(r, ComplexRational(1), b);
    return r;
}

}  // namespace

TEST_CASE("extract_cn on the basic examples") {
    auto t = extract_cn(poly({cr(0), cr(2)}, 8));
    CHECK(t.a1() == Scalar(cr(2)));
    for (auto& c : t.c()) CHECK(c.is_zero());

    // z/(1−z)
    std::vector<ComplexRational> geo(8, cr(1));
    geo[0] = cr(0);
    t = extract_cn(poly(geo, 8));
    CHECK(t.a1() == Scalar(1L));
    CHECK(t.c()[0] == Scalar(1L));
    for (std::size_t n = 1; n < t.order(); ++n) CHECK(t.c()[n].is_zero());

    // z + z³: exp(c z³∂)z = z(1 − 2cz²)^{−1/2} = z + cz³ + (3/2)c²z⁵ + …, so c₄ = −3/2
    t = extract_cn(poly({cr(0), cr(1), cr(0), cr(1)}, 7));
    CHECK(t.c()[0].is_zero());
    CHECK(t.c()[1] == Scalar(1L));
    CHECK(t.c()[2].is_zero());
    CHECK(t.c()[3] == Scalar(cr(-3, 2)));
    auto back = canonical_flow(t.c(), 7).scaled(t.a1());
    CHECK(back.equal_to_prec(t.series()));

    CHECK_THROWS_AS(extract_cn(poly({cr(0), cr(0), cr(1)}, 5)), std::domain_error);
    CHECK_THROWS_AS(extract_cn(poly({cr(1), cr(1)}, 5)), std::domain_error);
}

TEST_CASE("canonical coefficients reconstruct random transforms") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = rand_transform(rng, 9, trial % 2 == 0);
        auto t = extract_cn(a);
        CHECK(t.order() == 7);
        CHECK(canonical_flow(t.c(), 9).scaled(t.a1()).equal_to_prec(a));
    }
}

TEST_CASE("gamma_z canonical form") {
    for (auto z : {cr(1), cr(2, 3), cr(-1, 2, 1, 3)}) {
        auto g = gamma_series(z, 6);
        // direct expansion of 1/(z+t) − 1/z
        auto inv = poly({z, cr(1)}, 7).reciprocal();
        auto expect = inv - PowerSeries::constant(Scalar(ComplexRational(1) / z), 7);
        CHECK(g.equal_to_prec(expect));
        auto t = extract_cn(g);
        CHECK(t.a1() == Scalar(-ComplexRational(1) / (z * z)));
        CHECK(t.c()[0] == Scalar(-ComplexRational(1) / z));
        for (std::size_t n = 1; n < t.order(); ++n) CHECK(t.c()[n].is_zero());
    }
}

TEST_CASE("U(identity) is the identity") {
    auto f = heisenberg_voa(4);
    std::mt19937 rng(2);
    auto id = identity_transform(5);
    for (std::size_t j = 0; j < f->space()->dim(); ++j) {
        auto v = Vector::basis(f->space(), j);
        CHECK(apply_U(id, *f, v) == v);
    }
    auto toy = std::make_shared<FockModule>(cr(1), 3, std::vector<std::vector<ComplexRational>>{{cr(0), cr(0)}, {cr(1), cr(0)}});
    auto v = Vector::basis(toy->space(), 0);
    CHECK(apply_U(id, *toy, v) == v);
}

TEST_CASE("U(gamma_z) equals e^{zL(1)} (-z^{-2})^{L(0)} on integral weights") {
    auto f = heisenberg_voa(4);
    auto s = f->space();
    Matrix L1 = f->virasoro_map(1).to_dense();
    for (auto z : {cr(1), cr(3, 2), cr(1, 2, -1, 1)}) {
        auto t = extract_cn(gamma_series(z, 6));
        Matrix scale(s->dim(), s->dim());
        ComplexRational a = -ComplexRational(1) / (z * z);
        for (std::size_t i = 0; i < s->dim(); ++i) scale(i, i) = Scalar(pow(a, s->weight_of(i)[0].to_long()));
        Matrix expect = dense_exp(L1.scaled(Scalar(z))) * scale;
        for (std::size_t j = 0; j < s->dim(); ++j) {
            auto got = apply_U(t, *f, Vector::basis(s, j)).to_dense();
            for (std::size_t i = 0; i < s->dim(); ++i) CHECK(got[i] == expect(i, j));
        }
    }
}

TEST_CASE("U(gamma_z) on non-integral weights needs a branch") {
    auto m = heisenberg_module(cr(1, 2), 4);
    auto s = m->space();
    auto t = extract_cn(gamma_series(cr(1), 6));  // a₁ = −1
    auto v = Vector::basis(s, 2);
    CHECK_THROWS_AS(apply_U(t, *m, v), MissingBranch);
    Branch b{1.0, std::numbers::pi};
    Matrix L1 = m->virasoro_map(1).to_dense();
    Matrix E = dense_exp(L1);
    for (std::size_t j = 0; j < s->dim(); ++j) {
        auto got = to_c(apply_U(t, *m, Vector::basis(s, j), b).to_dense());
        std::complex<double> ph = std::exp(std::complex<double>(0, std::numbers::pi) * s->weight_of(j)[0].to_complex());
        for (std::size_t i = 0; i < s->dim(); ++i) CHECK(std::abs(got[i] - E(i, j).to_complex() * ph) < 1e-12);
    }
    CHECK_THROWS_AS(apply_U(t, *m, v, Branch{2.0, 0.0}), std::invalid_argument);
}

TEST_CASE("a1^{L(0)} on a logarithmic module") {
    // L(0) = μ²/2 + μ n0 on the lowest piece; n0 = ε
    auto toy = std::make_shared<FockModule>(cr(1), 2, std::vector<std::vector<ComplexRational>>{{cr(0), cr(0)}, {cr(1), cr(0)}});
    auto s = toy->space();
    auto jc = toy->jc();
    CHECK_THROWS_AS(scale_L0(*toy, jc, Scalar(cr(-2)), Vector::basis(s, 0)), MissingBranch);
    auto got = to_c(scale_L0(*toy, jc, Scalar(cr(2)), Vector::basis(s, 0)).to_dense());
    double l2 = std::log(2.0);
    CHECK(std::abs(got[0] - std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(got[1] - std::sqrt(2.0) * l2) < 1e-12);
    // branch shift by 2π multiplies by e^{2πiλ} and shifts the log
    auto w = to_c(scale_L0(*toy, jc, Scalar(cr(2)), Vector::basis(s, 0), Branch{2.0, 2 * std::numbers::pi}).to_dense());
    std::complex<double> L(l2, 2 * std::numbers::pi);
    CHECK(std::abs(w[0] - std::exp(0.5 * L)) < 1e-12);
    CHECK(std::abs(w[1] - std::exp(0.5 * L) * L) < 1e-12);
}

TEST_CASE("U is a group homomorphism") {
    auto f = heisenberg_voa(4);
    auto s = f->space();
    auto jc = f->jc();
    std::mt19937 rng(5);
    for (int trial = 0; trial < 6; ++trial) {
        auto a = rand_transform(rng, 7, trial % 2), b = rand_transform(rng, 7, trial % 3 == 0);
        auto ta = extract_cn(a), tb = extract_cn(b), tab = extract_cn(a.compose(b));
        for (std::size_t j = 0; j < s->dim(); ++j) {
            auto v = Vector::basis(s, j);
            CHECK(apply_U(tab, *f, jc, v) == apply_U(ta, *f, jc, apply_U(tb, *f, jc, v)));
        }
    }
}

TEST_CASE("U(gamma_{1/z}) U(gamma_z) = id") {
    auto f = heisenberg_voa(4);
    auto s = f->space();
    auto jc = f->jc();
    for (auto z : {cr(2), cr(-1, 3), cr(1, 1, 1, 1)}) {
        auto g = extract_cn(gamma_series(z, 6)), gi = extract_cn(gamma_series(ComplexRational(1) / z, 6));
        for (std::size_t j = 0; j < s->dim(); ++j) {
            auto v = Vector::basis(s, j);
            CHECK(apply_U(gi, *f, jc, apply_U(g, *f, jc, v)) == v);
        }
    }
}

TEST_CASE("family derivative examples") {
    auto f = heisenberg_voa(4);
    auto s = f->space();
    FamilyOfTransforms quad{{{{0, 1}, Scalar(1L)}, {{1, 2}, Scalar(1L)}}};
    FamilyOfTransforms scale;
    scale.coeffs[{0, 1}] = Scalar(1L);
    for (int i = 1; i <= 5; ++i) scale.coeffs[{i, 1}] = Scalar(Rational(1) / factorial(i));
    FamilyOfTransforms id{{{{0, 1}, Scalar(1L)}}};
    for (std::size_t j = 0; j < s->dim(); ++j) {
        auto v = Vector::basis(s, j);
        auto d = family_derivative(quad, *f, v);
        CHECK(d.value == f->virasoro(1, v));
        CHECK(d.inverse == f->virasoro(1, v).scaled(Scalar(-1L)));
        CHECK(family_derivative(scale, *f, v).value == f->virasoro(0, v));
        CHECK(family_derivative(id, *f, v).value.is_zero());
    }
    FamilyOfTransforms bad{{{{0, 1}, Scalar(2L)}}};
    CHECK_THROWS_AS(family_derivative(bad, *f, Vector::basis(s, 0)), std::invalid_argument);
}

TEST_CASE("family derivative matches first-order finite differences") {
    auto f = heisenberg_voa(4);
    auto s = f->space();
    auto jc = f->jc();
    std::mt19937 rng(17);
    int compared = 0;
    for (int trial = 0; trial < 4; ++trial) {
        FamilyOfTransforms rho;
        rho.coeffs[{0, 1}] = Scalar(1L);
        for (int i = 1; i <= 2; ++i)
            for (int k = 1; k <= 6; ++k) rho.coeffs[{i, k}] = Scalar(rand_rational(rng));
        Vector v(s);
        for (std::size_t j = 0; j < s->dim(); ++j) v.add(j, Scalar(rand_complex(rng)));
        auto D = family_derivative(rho, *f, v).value.to_dense();
        auto err = [&](const Rational& h) {
            auto t = extract_cn(rho.at(Scalar(h), 7));
            auto q = (apply_U(t, *f, jc, v) - v).scaled(Scalar(Rational(1) / h)).to_dense();
            std::vector<Rational> e;
            for (std::size_t i = 0; i < q.size(); ++i) {
                auto d = q[i] - D[i];
                e.push_back(d.exact().re * d.exact().re + d.exact().im * d.exact().im);
            }
            return e;
        };
        auto e1 = err(rat(1, 1000)), e2 = err(rat(1, 10000));
        for (std::size_t i = 0; i < e1.size(); ++i) {
            if (e1[i] == 0 && e2[i] == 0) continue;
            double ratio = std::sqrt(e1[i].get_d() / e2[i].get_d());
            CHECK(ratio >= 8.0);
            CHECK(ratio <= 12.0);
            ++compared;
        }
    }
    CHECK(compared > 10);
}

TEST_CASE("Schwarzian examples") {
    std::mt19937 rng(3);
    // Möbius maps expanded at a base point
    for (int trial = 0; trial < 10; ++trial) {
        ComplexRational a, b, c, d;
        do {
            a = rand_complex(rng), b = rand_complex(rng), c = rand_complex(rng), d = rand_complex(rng);
        } while ((a * d - b * c).is_zero());
        ComplexRational eta0;
        do eta0 = rand_complex(rng);
        while ((c * eta0 + d).is_zero());
        auto num = poly({a * eta0 + b, a}, 10), den = poly({c * eta0 + d, c}, 10);
        auto S = schwarzian(num / den);
        CHECK(S.prec() == 7);
        for (std::size_t k = 0; k < 7; ++k) CHECK(S[k].is_zero());
    }
    // e^t
    std::vector<ComplexRational> e;
    for (unsigned k = 0; k < 10; ++k) e.push_back(ComplexRational(Rational(1) / factorial(k)));
    auto S = schwarzian(poly(e, 10));
    CHECK(S[0] == Scalar(cr(-1, 2)));
    for (std::size_t k = 1; k < S.prec(); ++k) CHECK(S[k].is_zero());
    // η² at η0: −(3/2)(η0+t)^{−2}
    for (auto eta0 : {cr(1), cr(-2, 3), cr(1, 2, 1, 1)}) {
        auto f = poly({cr(0), cr(0), cr(1)}, 10).shifted(Scalar(eta0));
        auto S2 = schwarzian(f);
        auto expect = poly({eta0, cr(1)}, 7).reciprocal();
        expect = (expect * expect).scaled(Scalar(cr(-3, 2)));
        CHECK(S2.equal_to_prec(expect));
    }
    CHECK_THROWS_AS(schwarzian(poly({cr(1), cr(0), cr(1)}, 6)), std::domain_error);
}

TEST_CASE("Schwarzian cocycle") {
    std::mt19937 rng(8);
    for (int trial = 0; trial < 8; ++trial) {
        auto f = rand_transform(rng, 10, trial % 2);
        f.set(0, Scalar(rand_complex(rng)));
        auto g = rand_transform(rng, 10, trial % 3);
        auto lhs = schwarzian(f.compose(g));
        auto gp = g.derivative();
        auto rhs = schwarzian(f).compose(g) * gp * gp + schwarzian(g);
        CHECK(lhs.prec() == 7);
        CHECK(lhs.equal_to_prec(rhs));
    }
}

TEST_CASE("local Lie derivative") {
    auto v = oscillator_state({1, 1}, cr(1));
    auto w = oscillator_state({2}, cr(1, 3));
    VLaurent u{{0, v}};
    CHECK(lie_local({}, {}, {}, u, false).empty());
    CHECK(lie_local({{0, cr(1)}}, {}, {}, u, false).empty());
    // h = η with the form term: −L(0)v + v
    auto r = lie_local({{1, cr(1)}}, {}, {}, u, true);
    FockVector expect = fsum(fock_scaled(v_virasoro(0, v), cr(-1)), v);
    CHECK(r.size() == 1);
    CHECK(fock_equal(r[0], expect));
    // h = η²: −2η L(0)v − L(1)v
    VLaurent u2{{0, fsum(v, w)}};
    r = lie_local({{2, cr(1)}}, {cr(3)}, {{{-1, w}}}, u2, false);
    VLaurent e2;
    vlaurent_axpy(e2, cr(-2), VLaurent{{1, v_virasoro(0, fsum(v, w))}});
    vlaurent_axpy(e2, cr(-1), VLaurent{{0, v_virasoro(1, fsum(v, w))}});
    vlaurent_axpy(e2, cr(3), VLaurent{{-1, w}});
    CHECK(r.size() == e2.size());
    for (auto& [k, x] : e2) CHECK(fock_equal(r[k], x));
    // η-derivative term: h = 1, u = η^{-2} v gives −2η^{-3} v
    r = lie_local({{0, cr(1)}}, {}, {}, VLaurent{{-2, v}}, false);
    CHECK(r.size() == 1);
    CHECK(fock_equal(r[-3], fock_scaled(v, cr(-2))));
}
