#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "deepsic/complex_linalg.hpp"
#include "deepsic/rng.hpp"
#include "deepsic/special.hpp"

using namespace deepsic;

namespace {

// Independent truncated power-series evaluation of J0, 20 terms.
double j0_series(double x) {
    double term = 1.0, sum = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k <= 20; ++k) {
        term *= -q / (static_cast<double>(k) * k);
        sum += term;
    }
    return sum;
}

CMat random_hpd(SeededRng& rng, std::size_t n, double ridge) {
    CMat b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b.at(i, j) = rng.complex_gaussian(1.0);
    CMat a = b.adjoint().mul(b);
    for (std::size_t i = 0; i < n; ++i) a.at(i, i) += ridge;
    return a;
}

// Unitary similarity transform built from complex Givens rotations; keeps the
// spectrum of the diagonal seed intact.
CMat rotated_diagonal(const std::vector<cplx>& d, SeededRng& rng) {
    CMat a = CMat::diagonal(d);
    const std::size_t n = d.size();
    for (std::size_t p = 0; p + 1 < n; ++p) {
        const double th = rng.uniform() * 3.0;
        const cplx c = std::cos(th), s = std::sin(th) * std::exp(cplx(0.0, rng.uniform()));
        CMat g = CMat::identity(n);
        g.at(p, p) = c;
        g.at(p, p + 1) = s;
        g.at(p + 1, p) = -std::conj(s);
        g.at(p + 1, p + 1) = std::conj(c);
        a = g.mul(a).mul(g.adjoint());
    }
    return a;
}

}  // namespace

TEST_CASE("hermitian_solve: identity and diagonal cases") {
    CMat eye = CMat::identity(2);
    CVec b{cplx(1, 0), cplx(0, 2)};
    CVec x = hermitian_solve(eye, b);
    CHECK(std::abs(x[0] - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(x[1] - cplx(0, 2)) < 1e-14);

    CMat d = CMat::diagonal({cplx(2, 0), cplx(4, 0)});
    CVec b2{cplx(2, 0), cplx(4, 0)};
    CVec x2 = hermitian_solve(d, b2);
    CHECK(std::abs(x2[0] - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(x2[1] - cplx(1, 0)) < 1e-14);
}

TEST_CASE("hermitian_solve: residual oracle on random HPD systems") {
    SeededRng rng(11, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 6;
        CMat a = random_hpd(rng, n, 1.0);
        CVec b = draw_complex_gaussian(rng, n, 1.0);
        CVec x = hermitian_solve(a, b);
        CVec r = a.mul(x) - b;
        CHECK(r.norm() < 1e-9 * (1.0 + b.norm()));
    }
}

TEST_CASE("hermitian_solve: 1000 round trips x -> A x -> solve") {
    SeededRng rng(12, 0);
    CMat a = random_hpd(rng, 4, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        CVec x = draw_complex_gaussian(rng, 4, 1.0);
        CVec x2 = hermitian_solve(a, a.mul(x));
        CHECK((x2 - x).norm() < 1e-8 * (1.0 + x.norm()));
    }
}

TEST_CASE("hermitian_solve: rejects indefinite and mismatched input") {
    CMat z = CMat::diagonal({cplx(1, 0), cplx(-1, 0)});
    CVec b{cplx(1, 0), cplx(1, 0)};
    CHECK_THROWS_AS(hermitian_solve(z, b), NotPositiveDefinite);

    CMat eye = CMat::identity(3);
    CHECK_THROWS_AS(hermitian_solve(eye, b), DimensionMismatch);
}

TEST_CASE("power iteration: diagonal and identity spectra") {
    CMat d = CMat::diagonal({cplx(1, 0), cplx(3, 0), cplx(2, 0)});
    CHECK(power_iteration_lambda_max(d) == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(smallest_eigenvalue(d) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(power_iteration_lambda_max(CMat::identity(4)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("power iteration: unitary-similar 5x5 keeps known extremes") {
    SeededRng rng(13, 0);
    CMat a = rotated_diagonal({cplx(1, 0), cplx(2, 0), cplx(3, 0), cplx(4, 0), cplx(7, 0)}, rng);
    CHECK(power_iteration_lambda_max(a) == doctest::Approx(7.0).epsilon(1e-6));
    CHECK(smallest_eigenvalue(a) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("power iteration: dominates Rayleigh quotients of random vectors") {
    SeededRng rng(14, 0);
    CMat a = random_hpd(rng, 5, 0.5);
    const double lmax = power_iteration_lambda_max(a);
    const double lmin = smallest_eigenvalue(a);
    CHECK(lmin <= lmax);
    for (int trial = 0; trial < 100; ++trial) {
        CVec v = draw_complex_gaussian(rng, 5, 1.0);
        const double rq = std::real(inner(v, a.mul(v))) / v.norm_sq();
        CHECK(rq <= lmax * (1.0 + 1e-9));
        CHECK(rq >= lmin * (1.0 - 1e-9) - 1e-12);
    }
}

TEST_CASE("bessel_j0: pinned values and series oracle") {
    CHECK(bessel_j0(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bessel_j0(0.314159) == doctest::Approx(0.9754778152).epsilon(1e-9));
    CHECK(bessel_j0(0.314159) == doctest::Approx(0.9754).epsilon(2e-4));
    CHECK(std::abs(bessel_j0(2.404826)) < 1e-6);  // first zero
    for (double x = 0.0; x <= 10.0; x += 0.25) {
        CHECK(bessel_j0(x) == doctest::Approx(j0_series(x)).epsilon(1e-9));
    }
    CHECK(bessel_j0(-0.314159) == doctest::Approx(bessel_j0(0.314159)).epsilon(1e-12));
    CHECK_THROWS_AS(bessel_j0(60.0), std::domain_error);
}

TEST_CASE("rng: seeded streams are reproducible and distinct") {
    SeededRng a(42, 0), b(42, 0), c(42, 1);
    bool same = true, differ = false;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t va = a.next_u64();
        same = same && (va == b.next_u64());
        differ = differ || (va != c.next_u64());
    }
    CHECK(same);
    CHECK(differ);
}

TEST_CASE("rng: complex gaussian moments at 1e5 samples") {
    SeededRng rng(42, 7);
    const int n = 100000;
    cplx mean = 0.0;
    double pow_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const cplx z = rng.complex_gaussian(1.0);
        mean += z;
        pow_sum += std::norm(z);
    }
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean) < 0.01);
    CHECK(pow_sum / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("rng: |z|^2 of CN(0,1) is exponential(1)") {
    SeededRng rng(42, 9);
    const int n = 100000;
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) p[i] = std::norm(rng.complex_gaussian(1.0));
    // Empirical CDF against 1 - exp(-x) at a handful of quantile points.
    for (double x : {0.1, 0.5, 1.0, 2.0, 3.0}) {
        int count = 0;
        for (double v : p) count += (v <= x);
        const double emp = static_cast<double>(count) / n;
        CHECK(std::abs(emp - (1.0 - std::exp(-x))) < 0.01);
    }
}

TEST_CASE("rng: distinct streams are uncorrelated") {
    SeededRng a(7, 100), b(7, 200);
    const int n = 20000;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = a.gaussian(), y = b.gaussian();
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.05);
}

TEST_CASE("rng: degenerate inputs are rejected") {
    SeededRng rng(1, 0);
    CHECK_THROWS_AS(draw_complex_gaussian(rng, 4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rng.uniform_below(0), std::invalid_argument);
}

TEST_CASE("vector algebra: inner product and norms") {
    CVec a{cplx(1, 1), cplx(0, 2)};
    CVec b{cplx(2, 0), cplx(1, 0)};
    // <a,b> = conj(1+i)*2 + conj(2i)*1 = 2-2i - 2i = 2 - 4i
    CHECK(std::abs(inner(a, b) - cplx(2, -4)) < 1e-14);
    CHECK(a.norm_sq() == doctest::Approx(6.0));
    CHECK(a.norm() == doctest::Approx(std::sqrt(6.0)));
    CHECK_THROWS_AS(inner(a, CVec(3)), DimensionMismatch);
}
