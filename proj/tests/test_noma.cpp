#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "deepsic/noma.hpp"
#include "deepsic/rng.hpp"

using namespace deepsic;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// Direct 4-term LLR evaluation over all constellation points.
QpskLlr llr_bruteforce(cplx y, cplx g, double a, double sigma_sq) {
    double p_b0[2] = {0.0, 0.0}, p_b1[2] = {0.0, 0.0};
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
            const cplx s = qpsk_modulate(b0, b1);
            const double lik = std::exp(-std::norm(y - g * a * s) / sigma_sq);
            p_b0[b0] += lik;
            p_b1[b1] += lik;
        }
    return {std::log(p_b0[1] / p_b0[0]), std::log(p_b1[1] / p_b1[0])};
}

}  // namespace

TEST_CASE("qpsk: modulation, hard decision and bit recovery") {
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
            const cplx s = qpsk_modulate(b0, b1);
            CHECK(std::abs(s) == doctest::Approx(1.0).epsilon(1e-12));
            int r0 = -1, r1 = -1;
            qpsk_bits(s, r0, r1);
            CHECK(r0 == b0);
            CHECK(r1 == b1);
            CHECK(qpsk_hard_decision(1.7 * s) == s);
        }
}

TEST_CASE("superpose: single-user identity and two-user amplitude sum") {
    Precoders pre{{CVec{cplx(1, 0), cplx(0, 0)}}};
    PowerAllocation pa{{1.0}};
    CVec x = superpose({cplx(1, 0)}, pa, pre);
    CHECK(std::abs(x[0] - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(x[1]) < 1e-14);

    // Shared precoder e1, powers (0.8, 0.2), unit symbols.
    Precoders pre2{{CVec{cplx(1, 0)}, CVec{cplx(1, 0)}}};
    PowerAllocation pa2{{0.8, 0.2}};
    CVec x2 = superpose({cplx(1, 0), cplx(1, 0)}, pa2, pre2);
    CHECK(x2[0].real() == doctest::Approx(std::sqrt(0.8) + std::sqrt(0.2)).epsilon(1e-12));
    CHECK(x2[0].real() == doctest::Approx(1.3416).epsilon(1e-4));
}

TEST_CASE("superpose: orthogonal precoders conserve power") {
    Precoders pre{{CVec{cplx(1, 0), cplx(0, 0)}, CVec{cplx(0, 0), cplx(1, 0)}}};
    PowerAllocation pa{{0.7, 0.3}};
    SeededRng rng(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const cplx s1 = qpsk_modulate(static_cast<int>(rng.uniform_below(2)),
                                      static_cast<int>(rng.uniform_below(2)));
        const cplx s2 = qpsk_modulate(static_cast<int>(rng.uniform_below(2)),
                                      static_cast<int>(rng.uniform_below(2)));
        CHECK(superpose({s1, s2}, pa, pre).norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(superpose({cplx(1, 0)}, pa, pre), DimensionMismatch);
}

TEST_CASE("receive: noiseless identity, zero channel, noise variance") {
    SeededRng rng(4, 0);
    CVec e1{cplx(1, 0), cplx(0, 0)};
    CHECK(std::abs(receive(e1, e1, rng, 0.0) - cplx(1, 0)) < 1e-14);

    CVec zero(2);
    const int n = 20000;
    double pow_sum = 0.0;
    for (int i = 0; i < n; ++i) pow_sum += std::norm(receive(e1, zero, rng, 0.25));
    CHECK(pow_sum / n == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("qpsk_llr: limits and brute-force oracle") {
    // Vanishing noise: signs match the transmitted bits and magnitudes blow up.
    const cplx s = qpsk_modulate(1, 0);
    QpskLlr llr = qpsk_llr(s, cplx(1, 0), 1.0, 1e-4);
    CHECK(llr.b0 > 100.0);
    CHECK(llr.b1 < -100.0);

    // y = 0 is equidistant from all points.
    llr = qpsk_llr(cplx(0, 0), cplx(1, 0), 1.0, 0.5);
    CHECK(llr.b0 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(llr.b1 == doctest::Approx(0.0).epsilon(1e-14));

    // Worked example against the direct 4-term evaluation.
    const cplx y(0.3, 0.1);
    llr = qpsk_llr(y, cplx(1, 0), 1.0, 0.5);
    const QpskLlr ref = llr_bruteforce(y, cplx(1, 0), 1.0, 0.5);
    CHECK(llr.b0 == doctest::Approx(ref.b0).epsilon(1e-12));
    CHECK(llr.b1 == doctest::Approx(ref.b1).epsilon(1e-12));

    // Random instances, complex gains.
    SeededRng rng(5, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const cplx yr = rng.complex_gaussian(1.0);
        const cplx g = rng.complex_gaussian(1.0);
        const QpskLlr got = qpsk_llr(yr, g, 0.8, 0.3);
        const QpskLlr want = llr_bruteforce(yr, g, 0.8, 0.3);
        CHECK(got.b0 == doctest::Approx(want.b0).epsilon(1e-10));
        CHECK(got.b1 == doctest::Approx(want.b1).epsilon(1e-10));
    }
}

TEST_CASE("sic_decode: noiseless two-user cancellation is exact") {
    PowerAllocation pa{{0.8, 0.2}};
    const cplx g(0.9, 0.2);
    SeededRng rng(6, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const cplx s_far = qpsk_modulate(static_cast<int>(rng.uniform_below(2)),
                                         static_cast<int>(rng.uniform_below(2)));
        const cplx s_near = qpsk_modulate(static_cast<int>(rng.uniform_below(2)),
                                          static_cast<int>(rng.uniform_below(2)));
        const cplx y = g * (std::sqrt(0.8) * s_far + std::sqrt(0.2) * s_near);
        const std::vector<cplx> truth = {s_far, s_near};
        SicResult res = sic_decode(y, {g, g}, pa, {0, 1}, 1e-6, &truth);
        REQUIRE(res.stages.size() == 2);
        CHECK(std::abs(res.stages[0].decoded_symbol - s_far) < 1e-12);
        CHECK(std::abs(res.stages[1].decoded_symbol - s_near) < 1e-12);
        CHECK(std::abs(*res.stages[0].pdd_residual) < 1e-12);
        CHECK(std::abs(*res.stages[1].pdd_residual) < 1e-12);
        // Residual signal before the final stage is the near-user component.
        CHECK(std::abs(res.post_cancel_signal - g * std::sqrt(0.2) * s_near) < 1e-12);
    }
}

TEST_CASE("sic_decode: forced wrong decode leaves |residual| = 2") {
    // A sign-flipping y makes the hard decision the antipodal point, so the
    // recorded residual is s - (-s) with modulus 2 for unit-energy QPSK.
    const cplx s2 = qpsk_modulate(0, 0);  // (1+i)/sqrt(2)
    PowerAllocation pa{{1.0}};
    const std::vector<cplx> truth = {s2};
    SicResult res = sic_decode(-s2, {cplx(1, 0)}, pa, {0}, 0.1, &truth);
    CHECK(std::abs(*res.stages[0].pdd_residual - 2.0 * s2) < 1e-12);
    CHECK(std::abs(*res.stages[0].pdd_residual) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("sic_decode: stage-1 BER matches the per-symbol ML oracle") {
    // With a known gain the first SIC stage is exactly the minimum-distance
    // detector, so its bit decisions must coincide with brute-force ML.
    PowerAllocation pa{{1.0}};
    const cplx g(0.8, -0.3);
    const double sigma_sq = 0.5;
    SeededRng rng(7, 0);
    int mismatches = 0;
    const int n = 5000;
    for (int i = 0; i < n; ++i) {
        const int b0 = static_cast<int>(rng.uniform_below(2));
        const int b1 = static_cast<int>(rng.uniform_below(2));
        const cplx s = qpsk_modulate(b0, b1);
        const cplx y = g * s + rng.complex_gaussian(sigma_sq);

        SicResult res = sic_decode(y, {g}, pa, {0}, sigma_sq, nullptr);

        double best = 1e300;
        cplx ml;
        for (int c0 = 0; c0 < 2; ++c0)
            for (int c1 = 0; c1 < 2; ++c1) {
                const cplx cand = qpsk_modulate(c0, c1);
                const double d = std::norm(y - g * cand);
                if (d < best) {
                    best = d;
                    ml = cand;
                }
            }
        if (std::abs(res.stages[0].decoded_symbol - ml) > 1e-12) ++mismatches;
    }
    CHECK(static_cast<double>(mismatches) / n < 0.001);
}

TEST_CASE("sic_decode: empty order is rejected") {
    PowerAllocation pa{{1.0}};
    CHECK_THROWS_AS(sic_decode(cplx(1, 0), {cplx(1, 0)}, pa, {}, 0.1, nullptr), EmptyOrder);
}

TEST_CASE("ber_measure: golden examples") {
    std::vector<int> a(1000), b(1000);
    SeededRng rng(8, 0);
    for (int i = 0; i < 1000; ++i) a[i] = b[i] = static_cast<int>(rng.uniform_below(2));
    CHECK(ber_measure(a, b) == 0.0);

    std::vector<int> c = a;
    for (int& bit : c) bit = 1 - bit;
    CHECK(ber_measure(a, c) == 1.0);

    // 37 planted flips across 1000 bits.
    std::vector<int> d = a;
    for (int i = 0; i < 37; ++i) d[static_cast<std::size_t>(i * 27)] = 1 - d[static_cast<std::size_t>(i * 27)];
    CHECK(ber_measure(a, d) == doctest::Approx(0.037).epsilon(1e-15));

    CHECK_THROWS_AS(ber_measure(a, std::vector<int>(999)), LengthMismatch);
}

TEST_CASE("pdd reliability: window averaging and monotonicity in gain error") {
    PddReliability pdd(4);
    CHECK(pdd.score() == 0.0);
    pdd.add(cplx(1, 0));
    CHECK(pdd.score() == doctest::Approx(1.0));
    pdd.add(cplx(0, 0));
    pdd.add(cplx(0, 0));
    pdd.add(cplx(0, 0));
    CHECK(pdd.score() == doctest::Approx(0.25));
    pdd.add(cplx(0, 2));  // evicts the first sample
    CHECK(pdd.score() == doctest::Approx(1.0));

    // Larger channel-estimate error => more decode errors => higher score.
    PowerAllocation pa{{1.0}};
    const double sigma_sq = 0.05;
    std::vector<double> scores;
    for (double err : {0.0, 0.4, 0.8, 1.2, 1.6}) {
        SeededRng rng(9, 0);
        PddReliability rel(4096);
        const cplx g_est = cplx(1.0 - err, err * 0.5);
        for (int i = 0; i < 4000; ++i) {
            const cplx s = qpsk_modulate(static_cast<int>(rng.uniform_below(2)),
                                         static_cast<int>(rng.uniform_below(2)));
            const cplx y = 1.0 * s + rng.complex_gaussian(sigma_sq);
            SicResult res = sic_decode(y, {g_est}, pa, {0}, sigma_sq, nullptr);
            rel.add(s - res.stages[0].decoded_symbol);
        }
        scores.push_back(rel.score());
    }
    for (std::size_t i = 1; i < scores.size(); ++i) CHECK(scores[i] >= scores[i - 1]);
    CHECK(scores.front() < 0.05);
    CHECK(scores.back() > 0.5);
}
