#pragma once

#include <string>
#include <vector>

#include "deepsic/complex_linalg.hpp"
#include "deepsic/rng.hpp"

namespace deepsic {

struct InvalidConfig : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ChannelConfig {
    int num_antennas = 4;       // M
    int num_users = 4;          // K
    int time_steps = 1000;      // T
    double step_duration = 1e-3;       // seconds
    double velocity = 16.67;           // m/s
    double carrier_wavelength = 0.15;  // meters
    double distance_near = 20.0;       // meters
    double distance_far = 50.0;        // meters
    double pathloss_exponent = 3.0;
    double noise_variance = 1e-4;      // linear power
    double total_power = 1.0;          // linear power

    void validate() const;
    /// Gauss-Markov correlation rho = J0(2 pi (v/lambda) dt).
    double gauss_markov_rho() const;
    /// Power-law path loss at distance d (reference 1 m).
    double path_loss(double d) const;
    /// Per-user distance: users interpolate between near and far.
    double user_distance(int user) const;
};

struct Observables {
    double rsrq_db = 0.0;
    double snr_db = 0.0;
    int cqi = 0;
    double pdd_score = 0.0;
};

struct ChannelTrace {
    // h[user][t], each an M-dim vector.
    std::vector<std::vector<CVec>> h;
    // |h^H w|^2 per user per step, linear.
    std::vector<std::vector<double>> gains;
    std::vector<std::vector<Observables>> observables;
};

/// SNR/RSRQ/CQI mapping from an instantaneous channel and precoder.
/// SNR clips to [-9, 14] dB, RSRQ is its affine image on [-20, -8] dB and CQI
/// a 16-level quantization. The RSRQ map is a convention of this simulator.
Observables observables_from_channel(const CVec& h_t, const CVec& w, const ChannelConfig& cfg);

/// Temporally correlated Rayleigh trace: h[0] ~ CN(0, PL I), then first-order
/// Gauss-Markov steps with Jakes-derived rho. Fills pdd_score from a per-step
/// SIC decode against a pilot-quality channel estimate.
ChannelTrace generate_trace(const ChannelConfig& cfg, SeededRng& rng);

/// CSV export, header row mandatory, floats with 9 significant digits.
void export_trace_csv(const ChannelTrace& trace, const ChannelConfig& cfg,
                      const std::string& path);

double clip(double v, double lo, double hi);
double snr_db_from_linear(double linear);

}  // namespace deepsic
