#include "deepsic/handover.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <thread>

#include "deepsic/noma.hpp"
#include "deepsic/special.hpp"

namespace deepsic {

void HandoverConfig::validate() const {
    if (alpha < 0.0) throw InvalidConfig("alpha must be >= 0");
    if (ttt_steps < 0) throw InvalidConfig("ttt_steps must be >= 0");
    if (hysteresis_db < 0.0) throw InvalidConfig("hysteresis_db must be >= 0");
    if (pingpong_window <= ttt_steps)
        throw InvalidConfig("pingpong_window must exceed ttt_steps");
    if (velocity_kmh < 0.0) throw InvalidConfig("velocity_kmh must be >= 0");
}

const char* ho_event_kind_name(HoEventKind k) {
    switch (k) {
        case HoEventKind::TriggerStart: return "trigger_start";
        case HoEventKind::TriggerAbort: return "trigger_abort";
        case HoEventKind::Handover: return "handover";
        case HoEventKind::Hof: return "hof";
        case HoEventKind::Pingpong: return "pingpong";
    }
    return "?";
}

double decision_score(double csi_db, double pdd_score, double alpha) {
    // Lower residual energy is better, so the reliability term enters negated.
    return csi_db + alpha * (-pdd_score);
}

void HandoverSim::step(double score_cell0, double score_cell1, double snr0_db, double snr1_db) {
    const int target = 1 - serving_;
    const double s_serving = serving_ == 0 ? score_cell0 : score_cell1;
    const double s_target = serving_ == 0 ? score_cell1 : score_cell0;
    const double snr_serving = serving_ == 0 ? snr0_db : snr1_db;

    auto log_event = [&](HoEventKind kind) {
        log_.events.push_back({t_, kind, serving_, target, s_serving, s_target});
    };

    if (hof_watch_until_) {
        if (snr_serving < cfg_.hof_sinr_floor_db) {
            log_event(HoEventKind::Hof);
            log_.hof_count += 1;
            hof_watch_until_.reset();
        } else if (t_ >= *hof_watch_until_) {
            hof_watch_until_.reset();
        }
    }

    if (s_target > s_serving + cfg_.hysteresis_db) {
        ttt_counter_ += 1;
        if (ttt_counter_ == 1 && cfg_.ttt_steps > 1) log_event(HoEventKind::TriggerStart);
        if (ttt_counter_ >= std::max(1, cfg_.ttt_steps)) {
            log_event(HoEventKind::Handover);
            log_.handover_count += 1;
            if (last_handover_t_ >= 0 && target == last_handover_from_ &&
                t_ - last_handover_t_ <= cfg_.pingpong_window) {
                log_event(HoEventKind::Pingpong);
                log_.pingpong_count += 1;
            }
            last_handover_from_ = serving_;
            last_handover_t_ = t_;
            serving_ = target;
            ttt_counter_ = 0;
            hof_watch_until_ = t_ + 3;
        }
    } else if (ttt_counter_ > 0) {
        log_event(HoEventKind::TriggerAbort);
        ttt_counter_ = 0;
    }
    t_ += 1;
}

const char* sweep_policy_name(SweepPolicy p) {
    switch (p) {
        case SweepPolicy::PureCsi: return "pure_csi";
        case SweepPolicy::DeepSicNoPdd: return "deepsic_no_pdd";
        case SweepPolicy::DeepSicWithPdd: return "deepsic_with_pdd";
    }
    return "?";
}

HandoverLog run_crossing_trial(double velocity_kmh, SweepPolicy policy, const SweepConfig& cfg,
                               SeededRng& rng) {
    const ChannelConfig& ch = cfg.channel;
    const double v_ms = velocity_kmh / 3.6;
    const double arg = 2.0 * std::numbers::pi * (v_ms / ch.carrier_wavelength) * ch.step_duration;
    const double rho = arg == 0.0 ? 1.0 : bessel_j0(arg);
    const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    // Estimation quality per policy: pure CSI reports with two steps of lag
    // and coarse pilots; the refinement pipeline halves the lag and the noise.
    // Every policy predicts the current fade from its last pilot report with
    // the Gauss-Markov predictor rho^d * h[t-d]; the residual-corrected
    // variant additionally recovers part of the true current fade from the
    // data symbols between pilots.
    const bool refined = policy != SweepPolicy::PureCsi;
    const int est_delay = refined ? 1 : 2;
    const double pilot_var = refined ? 0.005 : 0.02;
    const double track_frac = policy == SweepPolicy::DeepSicWithPdd ? 0.5 : 0.0;
    const double predictor = std::pow(rho, est_delay);
    const double alpha = policy == SweepPolicy::DeepSicWithPdd ? cfg.handover.alpha : 0.0;

    // Nominal SNR at the near distance with unit fade power.
    const double snr0_db = 12.0;
    const int steps = cfg.steps_per_trial;

    HandoverConfig hc = cfg.handover;
    hc.alpha = std::max(hc.alpha, 0.0);
    HandoverSim sim(hc);

    cplx fade[2];
    std::vector<cplx> fade_hist[2];
    PddReliability pdd[2] = {PddReliability(24), PddReliability(24)};
    PowerAllocation pa{{1.0}};
    double csi_filt[2] = {0.0, 0.0};
    bool csi_init = false;
    // Layer-3 style exponential smoothing of the reported channel quality;
    // keeps trigger decisions crossing-driven instead of fade-churn-driven.
    const double l3_coeff = 0.3;
    for (int j = 0; j < 2; ++j) {
        fade[j] = rng.complex_gaussian(1.0);
        fade_hist[j].assign(static_cast<std::size_t>(est_delay) + 1, fade[j]);
    }

    // Trajectory progress scales with speed: a 90 km/h UE completes the
    // near-to-far crossing within the trial window; slower UEs cover
    // proportionally less ground and a parked UE never leaves its cell.
    const double ref_velocity_kmh = 90.0;
    for (int t = 0; t < steps; ++t) {
        const double frac =
            std::min(1.0, (velocity_kmh / ref_velocity_kmh) * static_cast<double>(t) /
                              static_cast<double>(steps - 1));
        const double d0 = ch.distance_near + frac * (ch.distance_far - ch.distance_near);
        const double d1 = ch.distance_far - frac * (ch.distance_far - ch.distance_near);
        const double dist[2] = {d0, d1};

        double score[2], snr_true_db[2];
        for (int j = 0; j < 2; ++j) {
            if (t > 0) {
                fade[j] = rho * fade[j] + innov * rng.complex_gaussian(1.0);
            }
            fade_hist[j].push_back(fade[j]);

            const double pl_db =
                -10.0 * ch.pathloss_exponent * std::log10(dist[j] / ch.distance_near);
            const double snr_lin_true = std::pow(10.0, (snr0_db + pl_db) / 10.0) *
                                        std::norm(fade[j]);
            snr_true_db[j] = clip(snr_db_from_linear(snr_lin_true), -9.0, 14.0);

            const cplx fade_stale =
                fade_hist[j][fade_hist[j].size() - 1 - static_cast<std::size_t>(est_delay)];
            const cplx fade_pred = predictor * fade_stale;
            const cplx fade_est = fade_pred + track_frac * (fade[j] - fade_pred) +
                                  rng.complex_gaussian(pilot_var);

            // Reported channel quality: fading-averaged mean SNR perturbed by
            // the estimator's own error. The error variance is the pilot noise
            // plus the Gauss-Markov staleness term (1 - rho^2d), which grows
            // with speed; residual-corrected tracking recovers part of it.
            const double est_var =
                pilot_var + (1.0 - track_frac) * (1.0 - predictor * predictor);
            const double snr_est_db =
                clip(snr0_db + pl_db + 3.0 * std::sqrt(est_var) * rng.gaussian(), -9.0, 14.0);
            const double csi_raw = (snr_est_db + 9.0) / 23.0 * 12.0 - 20.0;  // RSRQ scale
            csi_filt[j] = csi_init ? (1.0 - l3_coeff) * csi_filt[j] + l3_coeff * csi_raw
                                   : csi_raw;
            const double csi_db = csi_filt[j];

            // PDD probe: one QPSK decode with the estimated gain. The draw
            // sequence is identical for every policy so seeds stay paired.
            const int b0 = static_cast<int>(rng.uniform_below(2));
            const int b1 = static_cast<int>(rng.uniform_below(2));
            const cplx s = qpsk_modulate(b0, b1);
            const double noise_var = 1.0 / std::max(1e-6, snr_lin_true);
            const cplx y = fade[j] * s + rng.complex_gaussian(noise_var);
            SicResult sic = sic_decode(y, {fade_est}, pa, {0}, noise_var, nullptr);
            pdd[j].add(s - sic.stages[0].decoded_symbol);

            score[j] = decision_score(csi_db, pdd[j].score(), alpha);

            // Residual-corrected tracking sees part of the current fade. Use
            // it as a one-sided veto: refuse to switch into a cell whose
            // tracked fade is in a dip right now. Only the candidate cell is
            // penalised, so serving-cell dips and fade peaks never add churn.
            if (track_frac > 0.0 && j != sim.serving_cell()) {
                const double fade_db =
                    10.0 * std::log10(std::max(1e-6, std::norm(fade[j])));
                score[j] += track_frac * clip(std::min(0.0, fade_db), -12.0, 0.0);
            }
        }
        csi_init = true;
        sim.step(score[0], score[1], snr_true_db[0], snr_true_db[1]);
    }
    return sim.log();
}

std::vector<SweepRow> run_mobility_sweep(const std::vector<double>& velocities_kmh, int trials,
                                         const SweepConfig& cfg, const SeededRng& base_rng) {
    if (trials < 1) throw InvalidConfig("run_mobility_sweep: trials must be >= 1");
    const SweepPolicy policies[] = {SweepPolicy::PureCsi, SweepPolicy::DeepSicNoPdd,
                                    SweepPolicy::DeepSicWithPdd};
    std::vector<SweepRow> rows;
    for (std::size_t vi = 0; vi < velocities_kmh.size(); ++vi) {
        for (SweepPolicy policy : policies) {
            SweepRow row;
            row.velocity_kmh = velocities_kmh[vi];
            row.policy = policy;
            row.trials = trials;

            std::vector<HandoverLog> logs(static_cast<std::size_t>(trials));
            const int jobs = std::max(1, cfg.jobs);
            auto work = [&](int begin, int end) {
                for (int tr = begin; tr < end; ++tr) {
                    // Same (seed, stream) per trial across policies: paired seeds.
                    SeededRng rng(base_rng.seed(),
                                  base_rng.stream_id() + vi * 1000003ULL +
                                      static_cast<std::uint64_t>(tr));
                    logs[static_cast<std::size_t>(tr)] =
                        run_crossing_trial(velocities_kmh[vi], policy, cfg, rng);
                }
            };
            if (jobs == 1) {
                work(0, trials);
            } else {
                std::vector<std::thread> pool;
                const int chunk = (trials + jobs - 1) / jobs;
                for (int j = 0; j < jobs; ++j) {
                    const int b = j * chunk;
                    const int e = std::min(trials, b + chunk);
                    if (b < e) pool.emplace_back(work, b, e);
                }
                for (auto& th : pool) th.join();
            }
            for (const HandoverLog& lg : logs) {
                row.handovers += lg.handover_count;
                row.hofs += lg.hof_count;
                row.pingpongs += lg.pingpong_count;
            }
            row.hof_rate = static_cast<double>(row.hofs) / trials;
            row.pingpong_rate = static_cast<double>(row.pingpongs) / trials;
            rows.push_back(row);
        }
    }
    return rows;
}

void export_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "velocity_kmh,policy,trials,handovers,hofs,pingpongs,hof_rate,pingpong_rate\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return std::string(buf);
    };
    for (const SweepRow& r : rows) {
        out << fmt(r.velocity_kmh) << ',' << sweep_policy_name(r.policy) << ',' << r.trials << ','
            << r.handovers << ',' << r.hofs << ',' << r.pingpongs << ',' << fmt(r.hof_rate) << ','
            << fmt(r.pingpong_rate) << '\n';
    }
}

void export_events_ndjson(const HandoverLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return std::string(buf);
    };
    for (const HoEvent& e : log.events) {
        out << "{\"t\": " << e.t << ", \"kind\": \"" << ho_event_kind_name(e.kind)
            << "\", \"serving_cell\": " << e.serving_cell
            << ", \"target_cell\": " << e.target_cell
            << ", \"score_serving\": " << fmt(e.score_serving)
            << ", \"score_target\": " << fmt(e.score_target) << "}\n";
    }
}

}  // namespace deepsic
