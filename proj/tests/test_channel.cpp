#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "deepsic/channel.hpp"
#include "deepsic/rng.hpp"
#include "deepsic/special.hpp"

using namespace deepsic;

namespace {

ChannelConfig small_cfg() {
    ChannelConfig cfg;
    cfg.num_antennas = 2;
    cfg.num_users = 2;
    cfg.time_steps = 50;
    return cfg;
}

}  // namespace

TEST_CASE("gauss_markov_rho: static channel and Jakes plug-in") {
    ChannelConfig cfg;
    cfg.velocity = 0.0;
    CHECK(cfg.gauss_markov_rho() == doctest::Approx(1.0).epsilon(1e-15));

    // v/lambda * dt = 0.05 -> rho = J0(0.1 pi).
    cfg.velocity = 0.05 * cfg.carrier_wavelength / cfg.step_duration;
    CHECK(cfg.gauss_markov_rho() ==
          doctest::Approx(bessel_j0(2.0 * std::acos(-1.0) * 0.05)).epsilon(1e-12));
    CHECK(cfg.gauss_markov_rho() == doctest::Approx(0.9754778152).epsilon(1e-6));
}

TEST_CASE("path_loss: far/near mean-power ratio at Table-II geometry") {
    ChannelConfig cfg;  // near 20 m, far 50 m, exponent 3
    CHECK(cfg.path_loss(cfg.distance_far) / cfg.path_loss(cfg.distance_near) ==
          doctest::Approx(1.0 / 15.625).epsilon(1e-12));
    CHECK(cfg.user_distance(0) == doctest::Approx(20.0));
    CHECK(cfg.user_distance(cfg.num_users - 1) == doctest::Approx(50.0));
}

TEST_CASE("config validation rejects out-of-range values") {
    ChannelConfig cfg;
    cfg.pathloss_exponent = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = ChannelConfig{};
    cfg.velocity = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = ChannelConfig{};
    cfg.noise_variance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

TEST_CASE("observables: affine RSRQ map and CQI endpoints") {
    ChannelConfig cfg;
    cfg.total_power = 1.0;
    cfg.noise_variance = 1.0;

    // |h^H w|^2 P / sigma^2 = 1 -> snr_db = 0.
    CVec h{cplx(1, 0)};
    CVec w{cplx(1, 0)};
    Observables obs = observables_from_channel(h, w, cfg);
    CHECK(obs.snr_db == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(obs.rsrq_db == doctest::Approx((0.0 + 9.0) / 23.0 * 12.0 - 20.0).epsilon(1e-12));

    // SNR beyond 14 dB clips to 14 exactly; endpoints pin the CQI range.
    cfg.noise_variance = 1e-4;
    obs = observables_from_channel(h, w, cfg);
    CHECK(obs.snr_db == 14.0);
    CHECK(obs.rsrq_db == doctest::Approx(-8.0).epsilon(1e-12));
    CHECK(obs.cqi == 15);

    cfg.noise_variance = 1e4;
    obs = observables_from_channel(h, w, cfg);
    CHECK(obs.snr_db == -9.0);
    CHECK(obs.rsrq_db == doctest::Approx(-20.0).epsilon(1e-12));
    CHECK(obs.cqi == 0);
}

TEST_CASE("generate_trace: v = 0 freezes the channel") {
    ChannelConfig cfg = small_cfg();
    cfg.velocity = 0.0;
    SeededRng rng(5, 0);
    ChannelTrace trace = generate_trace(cfg, rng);
    for (int u = 0; u < cfg.num_users; ++u) {
        for (int t = 1; t < cfg.time_steps; ++t) {
            CHECK((trace.h[u][static_cast<std::size_t>(t)] - trace.h[u][0]).norm() < 1e-14);
        }
    }
}

TEST_CASE("generate_trace: lag-1 autocorrelation matches rho") {
    ChannelConfig cfg;
    cfg.num_antennas = 1;
    cfg.num_users = 1;
    cfg.time_steps = 100000;
    cfg.velocity = 16.67;
    SeededRng rng(6, 0);
    ChannelTrace trace = generate_trace(cfg, rng);

    const double pl = cfg.path_loss(cfg.user_distance(0));
    double corr = 0.0, pow_sum = 0.0;
    for (int t = 1; t < cfg.time_steps; ++t) {
        const cplx a = trace.h[0][static_cast<std::size_t>(t - 1)][0];
        const cplx b = trace.h[0][static_cast<std::size_t>(t)][0];
        corr += std::real(std::conj(a) * b);
        pow_sum += std::norm(a);
    }
    CHECK(corr / pow_sum == doctest::Approx(cfg.gauss_markov_rho()).epsilon(0.02));
    // Stationarity: mean power stays at the path-loss level.
    CHECK(pow_sum / (cfg.time_steps - 1) == doctest::Approx(pl).epsilon(0.05));
}

TEST_CASE("generate_trace: near user has higher mean gain than far user") {
    ChannelConfig cfg = small_cfg();
    cfg.time_steps = 2000;
    SeededRng rng(7, 0);
    ChannelTrace trace = generate_trace(cfg, rng);
    auto mean_gain = [&](int u) {
        double s = 0.0;
        for (double g : trace.gains[u]) s += g;
        return s / static_cast<double>(trace.gains[u].size());
    };
    CHECK(mean_gain(0) > mean_gain(1));
    CHECK(mean_gain(0) / mean_gain(1) == doctest::Approx(15.625).epsilon(0.35));
}

TEST_CASE("generate_trace: observables stay inside their ranges") {
    ChannelConfig cfg = small_cfg();
    SeededRng rng(8, 0);
    ChannelTrace trace = generate_trace(cfg, rng);
    for (int u = 0; u < cfg.num_users; ++u) {
        for (const Observables& o : trace.observables[u]) {
            CHECK(o.snr_db >= -9.0);
            CHECK(o.snr_db <= 14.0);
            CHECK(o.rsrq_db >= -20.0);
            CHECK(o.rsrq_db <= -8.0);
            CHECK(o.cqi >= 0);
            CHECK(o.cqi <= 15);
            CHECK(o.pdd_score >= 0.0);
        }
    }
}

TEST_CASE("generate_trace: seeded determinism") {
    ChannelConfig cfg = small_cfg();
    SeededRng r1(42, 3), r2(42, 3);
    ChannelTrace a = generate_trace(cfg, r1);
    ChannelTrace b = generate_trace(cfg, r2);
    for (int u = 0; u < cfg.num_users; ++u)
        for (int t = 0; t < cfg.time_steps; ++t)
            CHECK((a.h[u][static_cast<std::size_t>(t)] - b.h[u][static_cast<std::size_t>(t)])
                      .norm() == 0.0);
}

TEST_CASE("export_trace_csv: header and 9-significant-digit floats") {
    ChannelConfig cfg = small_cfg();
    cfg.time_steps = 4;
    SeededRng rng(9, 0);
    ChannelTrace trace = generate_trace(cfg, rng);
    const std::string path = "/tmp/deepsic_trace_test.csv";
    export_trace_csv(trace, cfg, path);

    std::ifstream in(path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "t,user,h0_re,h0_im,h1_re,h1_im,gain,snr_db,rsrq_db,cqi,pdd_score");

    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        // Re-parse one float field and confirm it round-trips through %.9g.
        std::stringstream ss(line);
        std::string field;
        for (int i = 0; i < 7 && std::getline(ss, field, ','); ++i) {
        }
        const double v = std::stod(field);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        CHECK(field == std::string(buf));
    }
    CHECK(rows == cfg.time_steps * cfg.num_users);
    std::remove(path.c_str());
}
