#include "deepsic/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "deepsic/noma.hpp"
#include "deepsic/special.hpp"

namespace deepsic {

double clip(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

double snr_db_from_linear(double linear) {
    if (linear <= 0.0) return -300.0;
    return 10.0 * std::log10(linear);
}

void ChannelConfig::validate() const {
    if (num_antennas < 1 || num_users < 1 || time_steps < 1)
        throw InvalidConfig("M, K, T must be >= 1");
    if (step_duration <= 0.0 || carrier_wavelength <= 0.0)
        throw InvalidConfig("step_duration and carrier_wavelength must be > 0");
    if (distance_near <= 0.0 || distance_far <= 0.0)
        throw InvalidConfig("distances must be > 0");
    if (pathloss_exponent < 2.0 || pathloss_exponent > 6.0)
        throw InvalidConfig("pathloss_exponent must be in [2, 6]");
    if (velocity < 0.0) throw InvalidConfig("velocity must be >= 0");
    if (noise_variance <= 0.0 || total_power <= 0.0)
        throw InvalidConfig("noise_variance and total_power must be > 0");
}

double ChannelConfig::gauss_markov_rho() const {
    const double arg = 2.0 * std::numbers::pi * (velocity / carrier_wavelength) * step_duration;
    return bessel_j0(arg);
}

double ChannelConfig::path_loss(double d) const {
    return std::pow(d, -pathloss_exponent);  // d_ref = 1 m
}

double ChannelConfig::user_distance(int user) const {
    if (num_users == 1) return distance_near;
    const double frac = static_cast<double>(user) / static_cast<double>(num_users - 1);
    return distance_near + frac * (distance_far - distance_near);
}

Observables observables_from_channel(const CVec& h_t, const CVec& w, const ChannelConfig& cfg) {
    const double g = std::norm(inner(h_t, w));
    Observables obs;
    obs.snr_db = clip(snr_db_from_linear(g * cfg.total_power / cfg.noise_variance), -9.0, 14.0);
    // Affine image of the SNR range [-9, 14] onto the RSRQ range [-20, -8].
    obs.rsrq_db = (obs.snr_db + 9.0) / 23.0 * 12.0 - 20.0;
    obs.cqi = static_cast<int>(std::floor((obs.snr_db + 9.0) * 16.0 / 23.0));
    if (obs.cqi > 15) obs.cqi = 15;
    if (obs.cqi < 0) obs.cqi = 0;
    return obs;
}

ChannelTrace generate_trace(const ChannelConfig& cfg, SeededRng& rng) {
    cfg.validate();
    const int m = cfg.num_antennas;
    const int k = cfg.num_users;
    const int t_steps = cfg.time_steps;
    const double rho = (cfg.velocity == 0.0) ? 1.0 : cfg.gauss_markov_rho();
    const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    ChannelTrace trace;
    trace.h.assign(k, {});
    trace.gains.assign(k, {});
    trace.observables.assign(k, {});

    for (int u = 0; u < k; ++u) {
        const double pl = cfg.path_loss(cfg.user_distance(u));
        std::vector<CVec> hs;
        hs.reserve(t_steps);
        hs.push_back(draw_complex_gaussian(rng, m, pl));
        for (int t = 1; t < t_steps; ++t) {
            CVec next = hs.back();
            next *= rho;
            if (innov > 0.0) next += cplx(innov) * draw_complex_gaussian(rng, m, pl);
            hs.push_back(std::move(next));
        }

        PddReliability pdd(16);
        PowerAllocation pa{{cfg.total_power}};
        double prev_gain_amp = std::sqrt(hs[0].norm_sq());
        for (int t = 0; t < t_steps; ++t) {
            const CVec& h = hs[static_cast<std::size_t>(t)];
            const double hn = h.norm();
            CVec w = h;
            if (hn > 0.0) w *= 1.0 / hn;  // maximum-ratio precoder
            trace.gains[u].push_back(std::norm(inner(h, w)));
            Observables obs = observables_from_channel(h, w, cfg);

            // PDD probe: decode one QPSK symbol against the previous step's
            // gain (outdated pilot estimate) and track the residual.
            const double g_true = hn;
            const cplx g_est = prev_gain_amp + rng.complex_gaussian(cfg.noise_variance / 8.0);
            const int b0 = static_cast<int>(rng.uniform_below(2));
            const int b1 = static_cast<int>(rng.uniform_below(2));
            const cplx s = qpsk_modulate(b0, b1);
            const double amp = std::sqrt(cfg.total_power);
            const cplx y = g_true * amp * s + rng.complex_gaussian(cfg.noise_variance);
            SicResult sic = sic_decode(y, {g_est}, pa, {0}, cfg.noise_variance, nullptr);
            pdd.add(s - sic.stages[0].decoded_symbol);
            obs.pdd_score = pdd.score();
            prev_gain_amp = g_true;

            trace.observables[u].push_back(obs);
        }
        trace.h[u] = std::move(hs);
    }
    return trace;
}

void export_trace_csv(const ChannelTrace& trace, const ChannelConfig& cfg,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,user";
    for (int a = 0; a < cfg.num_antennas; ++a) out << ",h" << a << "_re,h" << a << "_im";
    out << ",gain,snr_db,rsrq_db,cqi,pdd_score\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return std::string(buf);
    };
    for (std::size_t t = 0; t < trace.h[0].size(); ++t) {
        for (std::size_t u = 0; u < trace.h.size(); ++u) {
            out << t << ',' << u;
            const CVec& h = trace.h[u][t];
            for (std::size_t a = 0; a < h.dim(); ++a)
                out << ',' << fmt(h[a].real()) << ',' << fmt(h[a].imag());
            const Observables& obs = trace.observables[u][t];
            out << ',' << fmt(trace.gains[u][t]) << ',' << fmt(obs.snr_db) << ','
                << fmt(obs.rsrq_db) << ',' << obs.cqi << ',' << fmt(obs.pdd_score) << '\n';
        }
    }
}

}  // namespace deepsic
