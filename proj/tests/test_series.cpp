#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace testsupport;

TEST_CASE("series addition") {
    auto half = cr(1, 2);
    CHECK(q1(half) + q1(half) == q1(half, 0, Scalar(2L)));
    auto a = q1(cr(1)) + q1(cr(2), 1);
    CHECK(a + MultiLogSeries(1) == a);
    CHECK(a + q1(cr(1), 0, Scalar(-1L)) == q1(cr(2), 1));
    CHECK_THROWS_AS(a + q2(cr(1), cr(1)), ArityMismatch);
    CHECK_THROWS_AS(a + a.to_mode(Mode::Approx), ModeMismatch);
}

TEST_CASE("series multiplication") {
    auto half = cr(1, 2);
    CHECK(q1(half) * q1(half) == q1(cr(1)));
    CHECK(q1(cr(0), 1) * q1(cr(0), 1) == q1(cr(0), 2));
    auto one = q1(cr(0));
    auto lhs = (one + q1(cr(1))).truncated(2) * (one - q1(cr(1)));
    CHECK(lhs == one - q1(cr(2)));
    auto cut = (one + q1(cr(1))).truncated(1) * (one + q1(cr(1)));
    CHECK(cut == one + q1(cr(1), 0, Scalar(2L)));
    CHECK(*cut.cutoff() == 1);
}

TEST_CASE("series ring axioms on random inputs") {
    std::mt19937 rng(7);
    auto rand_series = [&] {
        MultiLogSeries s(2, Mode::Exact, Rational(3));
        for (int t = 0; t < 4; ++t) {
            std::uniform_int_distribution<int> e(0, 3), l(0, 2);
            s.add_term({{cr(e(rng), 2), cr(e(rng), 2)}, {unsigned(l(rng)), unsigned(l(rng))}}, Scalar(rand_complex(rng)));
        }
        return s;
    };
    for (int trial = 0; trial < 10; ++trial) {
        auto a = rand_series(), b = rand_series(), c = rand_series();
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK(a * b == b * a);
    }
}

TEST_CASE("diagonal restriction") {
    CHECK(diagonal_restrict(q2(cr(1), cr(1))) == q1(cr(1)));
    auto lhs = q2(cr(2), cr(2), 1, 0) + q2(cr(2), cr(2), 0, 1);
    CHECK(diagonal_restrict(lhs) == q1(cr(2), 1));
    CHECK_THROWS_AS(diagonal_restrict(q2(cr(1), cr(0))), NotDiagonal);
    // (log q1 + log q2)^2 = log^2 q1 + 2 log q1 log q2 + log^2 q2
    auto sq = q2(cr(1), cr(1), 2, 0) + q2(cr(1), cr(1), 1, 1, Scalar(2L)) + q2(cr(1), cr(1), 0, 2);
    CHECK(diagonal_restrict(sq) == q1(cr(1), 2));
    auto bad = q2(cr(1), cr(1), 2, 0) + q2(cr(1), cr(1), 1, 1) + q2(cr(1), cr(1), 0, 2);
    CHECK_THROWS_AS(diagonal_restrict(bad), NotDiagonal);
}

TEST_CASE("diagonal restriction inverts the substitution on random polynomials") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        MultiLogSeries f(1);
        MultiLogSeries lifted(2);
        for (int t = 0; t < 4; ++t) {
            std::uniform_int_distribution<int> e(0, 5), l(0, 2);
            auto E = cr(e(rng), 3);
            unsigned L = l(rng);
            Scalar c(rand_complex(rng));
            f.add_term({{E}, {L}}, c);
            for (unsigned l1 = 0; l1 <= L; ++l1)
                lifted.add_term({{E, E}, {l1, L - l1}}, c * Scalar(binomial(L, l1)));
        }
        CHECK(diagonal_restrict(lifted) == f);
    }
}

TEST_CASE("evaluation on the universal cover") {
    auto half = cr(1, 2);
    auto v = q1(half).eval({{4.0, 0.0}});
    CHECK(v.real() == doctest::Approx(2.0));
    auto w = q1(half).eval({{4.0, 2 * std::numbers::pi}});
    CHECK(w.real() == doctest::Approx(-2.0));
    CHECK(std::abs(w.imag()) < 1e-12);
    auto l = q1(cr(0), 1).eval({{1.0, std::numbers::pi}});
    CHECK(std::abs(l.real()) < 1e-15);
    CHECK(l.imag() == doctest::Approx(std::numbers::pi));
    CHECK_THROWS(q1(half).eval({{0.0, 0.0}}));
}

TEST_CASE("evaluation is multiplicative up to truncation") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        MultiLogSeries a(1, Mode::Exact, Rational(6)), b(1, Mode::Exact, Rational(6));
        for (int n = 0; n <= 3; ++n) {
            a.add_term({{cr(n)}, {0}}, Scalar(rand_complex(rng)));
            b.add_term({{cr(n)}, {unsigned(n % 2)}}, Scalar(rand_complex(rng)));
        }
        EvalPoint p{0.3, 0.7};
        CHECK(std::abs((a * b).eval({p}) - a.eval({p}) * b.eval({p})) < 1e-12);
    }
}

TEST_CASE("json round trip") {
    auto s = q1(cr(1, 2, 1, 3), 2, Scalar(cr(3, 7, -1, 2)), Rational(5)) + q1(cr(0), 0, Scalar(1L), Rational(5));
    auto j = s.to_json();
    CHECK(MultiLogSeries::from_json(j) == s);
    CHECK(j["terms"][0]["exponents"][0] == nlohmann::json::array({0, 1, 0, 1}));
}
