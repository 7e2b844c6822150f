#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deepsic/channel.hpp"
#include "deepsic/rng.hpp"

namespace deepsic {

struct HandoverConfig {
    double alpha = 0.5;           // reliability weight
    int ttt_steps = 3;            // consecutive steps before a handover fires
    double hysteresis_db = 1.0;
    int pingpong_window = 20;     // steps
    double hof_sinr_floor_db = -6.0;
    double velocity_kmh = 60.0;

    void validate() const;
};

enum class HoEventKind { TriggerStart, TriggerAbort, Handover, Hof, Pingpong };

struct HoEvent {
    int t = 0;
    HoEventKind kind = HoEventKind::TriggerStart;
    int serving_cell = 0;
    int target_cell = 0;
    double score_serving = 0.0;
    double score_target = 0.0;
};

struct HandoverLog {
    std::vector<HoEvent> events;
    int handover_count = 0;
    int hof_count = 0;
    int pingpong_count = 0;
};

const char* ho_event_kind_name(HoEventKind k);

/// score = csi_db + alpha * (-pdd_score): low residual energy rewards the cell.
double decision_score(double csi_db, double pdd_score, double alpha);

/// Two-cell trigger state machine with time-to-trigger, hysteresis, handover
/// failure (post-handover SNR under the floor within 3 steps) and ping-pong
/// (return to the previous cell inside the window) accounting.
class HandoverSim {
  public:
    explicit HandoverSim(const HandoverConfig& cfg) : cfg_(cfg) { cfg.validate(); }

    /// Advance one step with the current per-cell decision scores and true
    /// per-cell SNRs (the post-handover failure check reads the serving one).
    void step(double score_cell0, double score_cell1, double snr0_db, double snr1_db);

    int serving_cell() const { return serving_; }
    int ttt_counter() const { return ttt_counter_; }
    const HandoverLog& log() const { return log_; }

  private:
    HandoverConfig cfg_;
    HandoverLog log_;
    int t_ = 0;
    int serving_ = 0;
    int ttt_counter_ = 0;
    int last_handover_t_ = -1;
    int last_handover_from_ = -1;
    std::optional<int> hof_watch_until_;
};

enum class SweepPolicy { PureCsi, DeepSicNoPdd, DeepSicWithPdd };
const char* sweep_policy_name(SweepPolicy p);

struct SweepRow {
    double velocity_kmh = 0.0;
    SweepPolicy policy = SweepPolicy::PureCsi;
    int trials = 0;
    int handovers = 0;
    int hofs = 0;
    int pingpongs = 0;
    double hof_rate = 0.0;
    double pingpong_rate = 0.0;
};

struct SweepConfig {
    HandoverConfig handover;
    ChannelConfig channel;
    int steps_per_trial = 240;
    int jobs = 1;
};

/// Two-cell crossing-trajectory Monte-Carlo sweep. Per velocity and policy,
/// `trials` independent runs with per-trial rng streams; rates = counts/trials.
std::vector<SweepRow> run_mobility_sweep(const std::vector<double>& velocities_kmh, int trials,
                                         const SweepConfig& cfg, const SeededRng& base_rng);

/// One trial of the two-cell crossing scenario; exposed for paired-seed tests.
HandoverLog run_crossing_trial(double velocity_kmh, SweepPolicy policy, const SweepConfig& cfg,
                               SeededRng& rng);

void export_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void export_events_ndjson(const HandoverLog& log, const std::string& path);

}  // namespace deepsic
