#pragma once

#include <random>

#include "logsew/graded.hpp"
#include "logsew/series.hpp"

namespace testsupport {

using namespace logsew;

inline Rational rat(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline ComplexRational cr(long num, long den = 1, long inum = 0, long iden = 1) {
    return {rat(num, den), rat(inum, iden)};
}

// c q^e (log q)^l, one variable
inline MultiLogSeries q1(const ComplexRational& e, unsigned l = 0, const Scalar& c = Scalar(1L),
                         std::optional<Rational> cutoff = std::nullopt) {
    return MultiLogSeries::term(Monomial{{e}, {l}}, c, cutoff);
}

inline MultiLogSeries q2(const ComplexRational& e1, const ComplexRational& e2, unsigned l1 = 0, unsigned l2 = 0,
                         const Scalar& c = Scalar(1L), std::optional<Rational> cutoff = std::nullopt) {
    return MultiLogSeries::term(Monomial{{e1, e2}, {l1, l2}}, c, cutoff);
}

inline Rational rand_rational(std::mt19937& rng, int range = 5, int den = 4) {
    std::uniform_int_distribution<int> n(-range, range), d(1, den);
    return rat(n(rng), d(rng));
}

inline ComplexRational rand_complex(std::mt19937& rng, bool real = false) {
    return {rand_rational(rng), real ? Rational(0) : rand_rational(rng)};
}

inline Matrix rand_matrix(std::mt19937& rng, std::size_t r, std::size_t c, bool real = true) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = Scalar(rand_complex(rng, real));
    return m;
}

inline Matrix rand_invertible(std::mt19937& rng, std::size_t n) {
    while (true) {
        Matrix m = rand_matrix(rng, n, n);
        if (m.rank() == n) return m;
    }
}

inline std::size_t partition_count(int n) {
    // Euler recurrence via dynamic programming over part sizes
    std::vector<std::size_t> p(n + 1, 0);
    p[0] = 1;
    for (int k = 1; k <= n; ++k)
        for (int m = k; m <= n; ++m) p[m] += p[m - k];
    return p[n];
}

}  // namespace testsupport
