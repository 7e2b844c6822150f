#pragma once

#include <string>
#include <vector>

#include "deepsic/channel.hpp"
#include "deepsic/handover.hpp"
#include "deepsic/transformer.hpp"

namespace deepsic {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NomaConfig {
    double power_split_far = 0.8;  // far user share of total power
    int n_pilot = 32;
};

struct TrainConfig {
    int epochs = 40;
    double learning_rate = 0.02;
    int windows = 400;
    double augment_noise_scale = 0.0;
};

struct RunConfig {
    ChannelConfig channel;
    NomaConfig noma;
    TransformerConfig transformer;
    TrainConfig train;
    HandoverConfig handover;

    std::uint64_t seed = 1;
    int trials = 200;
    int jobs = 1;
    bool strict = false;
    int steps_per_trial = 240;
    std::string output_dir = "out";
    std::vector<double> velocities_kmh = {0, 30, 60, 90, 120};
    std::vector<double> snr_db_list = {-5, 0, 5, 10};
    int k_min = 1;
    int k_max = 8;
};

/// Strict key = value configuration. Accepts `[section]` headers and dotted
/// keys; unknown keys or malformed values fail with the exact key path.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);
/// Apply one `section.key = value` override onto an existing config.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

/// Effective config echo for the manifest.
std::string config_to_json(const RunConfig& cfg);

}  // namespace deepsic
