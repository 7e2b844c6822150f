#pragma once

#include <string>
#include <vector>

#include "deepsic/config.hpp"
#include "deepsic/estimation.hpp"

namespace deepsic {

struct ScenarioResult {
    int exit_code = 0;
    std::vector<std::string> artifacts;  // paths relative to output_dir
};

/// Scenarios: estimate, train, transfer, handover-sweep, complexity-sweep,
/// theory-check. Writes artifacts plus a manifest into cfg.output_dir.
ScenarioResult run_scenario(const std::string& scenario, const RunConfig& cfg);

/// One scalar-channel estimation trial; shared by the estimate scenario and
/// the acceptance suite.
struct EstimationTrialResult {
    cplx true_gain;
    cplx ls;
    cplx mmse;
    cplx deepsic_no_pdd;
    cplx deepsic_with_pdd;
};

EstimationTrialResult run_estimation_trial(double snr_db, int n_pilot, int n_data,
                                           SeededRng& rng);

/// FNV-1a checksum of a file's bytes, hex string.
std::string file_checksum_hex(const std::string& path);

}  // namespace deepsic
