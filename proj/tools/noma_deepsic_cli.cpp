// Command-line front end. Talks to the core exclusively through the C API.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "noma_deepsic.h"

namespace {

int fail(const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, nd_last_error());
    return 2;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v[i]);
        out += buf;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NOMA Deep-SIC channel estimation and handover simulator"};
    app.set_version_flag("--version", std::string(nd_version()));

    std::string scenario;
    app.add_option("scenario", scenario,
                   "estimate | train | transfer | handover-sweep | complexity-sweep | "
                   "theory-check")
        ->required();

    std::string config_path;
    app.add_option("-c,--config", config_path, "key = value config file");

    std::string out_dir;
    auto* out_opt = app.add_option("-o,--out", out_dir, "output directory");

    long long seed = -1;
    app.add_option("--seed", seed, "RNG seed");
    int trials = -1;
    app.add_option("--trials", trials, "Monte-Carlo trials per point");
    int jobs = 0;
    app.add_option("-j,--jobs", jobs, "worker threads for sweeps");
    bool strict = false;
    app.add_flag("--strict", strict, "fail on uncertified theory checks");
    std::vector<double> snr_db;
    app.add_option("--snr-db", snr_db, "SNR grid in dB")->delimiter(',');
    std::vector<double> velocities;
    app.add_option("--velocities", velocities, "velocity grid in km/h")->delimiter(',');
    int k_max = 0;
    app.add_option("--k", k_max, "max user count for the complexity sweep");
    int epochs = 0;
    app.add_option("--epochs", epochs, "training epochs");
    std::vector<std::string> overrides;
    app.add_option("-D,--set", overrides, "extra overrides as section.key=value");

    CLI11_PARSE(app, argc, argv);

    nd_config* cfg = config_path.empty() ? nd_config_create() : nd_config_load(config_path.c_str());
    if (cfg == nullptr) return fail("loading config");

    auto set = [&](const char* key, const std::string& value) {
        if (nd_config_set(cfg, key, value.c_str()) != ND_OK) {
            const int rc = fail(key);
            nd_config_destroy(cfg);
            std::exit(rc);
        }
    };

    if (seed >= 0) set("run.seed", std::to_string(seed));
    if (trials > 0) set("run.trials", std::to_string(trials));
    if (jobs > 0) set("run.jobs", std::to_string(jobs));
    if (strict) set("run.strict", "true");
    if (!snr_db.empty()) set("run.snr_db", join(snr_db));
    if (!velocities.empty()) set("run.velocities_kmh", join(velocities));
    if (k_max > 0) set("run.k_max", std::to_string(k_max));
    if (epochs > 0) set("train.epochs", std::to_string(epochs));

    if (*out_opt) {
        set("run.output_dir", out_dir);
    } else if (const char* env = std::getenv("NOMA_DEEPSIC_OUT"); env != nullptr && *env != '\0') {
        set("run.output_dir", env);
    }

    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", ov.c_str());
            nd_config_destroy(cfg);
            return 2;
        }
        set(ov.substr(0, eq).c_str(), ov.substr(eq + 1));
    }

    int exit_code = 0;
    const nd_status st = nd_run_scenario(cfg, scenario.c_str(), &exit_code);
    nd_config_destroy(cfg);
    if (st != ND_OK) {
        std::fprintf(stderr, "error: %s\n", nd_last_error());
        return 2;
    }
    return exit_code;
}
