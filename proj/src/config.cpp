#include "deepsic/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace deepsic {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "channel.num_antennas") cfg.channel.num_antennas = static_cast<int>(parse_int(key, value));
    else if (key == "channel.num_users") cfg.channel.num_users = static_cast<int>(parse_int(key, value));
    else if (key == "channel.time_steps") cfg.channel.time_steps = static_cast<int>(parse_int(key, value));
    else if (key == "channel.step_duration") cfg.channel.step_duration = parse_double(key, value);
    else if (key == "channel.velocity_kmh") cfg.channel.velocity = parse_double(key, value) / 3.6;
    else if (key == "channel.velocity") cfg.channel.velocity = parse_double(key, value);
    else if (key == "channel.carrier_wavelength") cfg.channel.carrier_wavelength = parse_double(key, value);
    else if (key == "channel.distance_near") cfg.channel.distance_near = parse_double(key, value);
    else if (key == "channel.distance_far") cfg.channel.distance_far = parse_double(key, value);
    else if (key == "channel.pathloss_exponent") cfg.channel.pathloss_exponent = parse_double(key, value);
    else if (key == "channel.noise_variance") cfg.channel.noise_variance = parse_double(key, value);
    else if (key == "channel.total_power") cfg.channel.total_power = parse_double(key, value);
    else if (key == "noma.power_split_far") cfg.noma.power_split_far = parse_double(key, value);
    else if (key == "noma.n_pilot") cfg.noma.n_pilot = static_cast<int>(parse_int(key, value));
    else if (key == "transformer.seq_len") cfg.transformer.seq_len = static_cast<int>(parse_int(key, value));
    else if (key == "transformer.d_model") cfg.transformer.d_model = static_cast<int>(parse_int(key, value));
    else if (key == "transformer.n_heads") cfg.transformer.n_heads = static_cast<int>(parse_int(key, value));
    else if (key == "transformer.d_ff") cfg.transformer.d_ff = static_cast<int>(parse_int(key, value));
    else if (key == "transformer.n_layers") cfg.transformer.n_layers = static_cast<int>(parse_int(key, value));
    else if (key == "transformer.d_out") cfg.transformer.d_out = static_cast<int>(parse_int(key, value));
    else if (key == "transformer.input_features") cfg.transformer.input_features = static_cast<int>(parse_int(key, value));
    else if (key == "train.epochs") cfg.train.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "train.learning_rate") cfg.train.learning_rate = parse_double(key, value);
    else if (key == "train.windows") cfg.train.windows = static_cast<int>(parse_int(key, value));
    else if (key == "train.augment_noise_scale") cfg.train.augment_noise_scale = parse_double(key, value);
    else if (key == "handover.alpha") cfg.handover.alpha = parse_double(key, value);
    else if (key == "handover.ttt_steps") cfg.handover.ttt_steps = static_cast<int>(parse_int(key, value));
    else if (key == "handover.hysteresis_db") cfg.handover.hysteresis_db = parse_double(key, value);
    else if (key == "handover.pingpong_window") cfg.handover.pingpong_window = static_cast<int>(parse_int(key, value));
    else if (key == "handover.hof_sinr_floor_db") cfg.handover.hof_sinr_floor_db = parse_double(key, value);
    else if (key == "handover.velocity_kmh") cfg.handover.velocity_kmh = parse_double(key, value);
    else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "run.trials") cfg.trials = static_cast<int>(parse_int(key, value));
    else if (key == "run.jobs") cfg.jobs = static_cast<int>(parse_int(key, value));
    else if (key == "run.strict") cfg.strict = parse_bool(key, value);
    else if (key == "run.steps_per_trial") cfg.steps_per_trial = static_cast<int>(parse_int(key, value));
    else if (key == "run.output_dir") cfg.output_dir = value;
    else if (key == "run.velocities_kmh") cfg.velocities_kmh = parse_double_list(key, value);
    else if (key == "run.snr_db") cfg.snr_db_list = parse_double_list(key, value);
    else if (key == "run.k_min") cfg.k_min = static_cast<int>(parse_int(key, value));
    else if (key == "run.k_max") cfg.k_max = static_cast<int>(parse_int(key, value));
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
        try {
            apply_config_entry(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["channel"] = {{"num_antennas", cfg.channel.num_antennas},
                    {"num_users", cfg.channel.num_users},
                    {"time_steps", cfg.channel.time_steps},
                    {"step_duration", cfg.channel.step_duration},
                    {"velocity", cfg.channel.velocity},
                    {"carrier_wavelength", cfg.channel.carrier_wavelength},
                    {"distance_near", cfg.channel.distance_near},
                    {"distance_far", cfg.channel.distance_far},
                    {"pathloss_exponent", cfg.channel.pathloss_exponent},
                    {"noise_variance", cfg.channel.noise_variance},
                    {"total_power", cfg.channel.total_power}};
    j["noma"] = {{"power_split_far", cfg.noma.power_split_far}, {"n_pilot", cfg.noma.n_pilot}};
    j["transformer"] = {{"seq_len", cfg.transformer.seq_len},
                        {"d_model", cfg.transformer.d_model},
                        {"n_heads", cfg.transformer.n_heads},
                        {"d_ff", cfg.transformer.d_ff},
                        {"n_layers", cfg.transformer.n_layers},
                        {"d_out", cfg.transformer.d_out},
                        {"input_features", cfg.transformer.input_features}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"learning_rate", cfg.train.learning_rate},
                  {"windows", cfg.train.windows},
                  {"augment_noise_scale", cfg.train.augment_noise_scale}};
    j["handover"] = {{"alpha", cfg.handover.alpha},
                     {"ttt_steps", cfg.handover.ttt_steps},
                     {"hysteresis_db", cfg.handover.hysteresis_db},
                     {"pingpong_window", cfg.handover.pingpong_window},
                     {"hof_sinr_floor_db", cfg.handover.hof_sinr_floor_db},
                     {"velocity_kmh", cfg.handover.velocity_kmh}};
    j["run"] = {{"seed", cfg.seed},
                {"trials", cfg.trials},
                {"jobs", cfg.jobs},
                {"strict", cfg.strict},
                {"steps_per_trial", cfg.steps_per_trial},
                {"output_dir", cfg.output_dir},
                {"velocities_kmh", cfg.velocities_kmh},
                {"snr_db", cfg.snr_db_list},
                {"k_min", cfg.k_min},
                {"k_max", cfg.k_max}};
    return j.dump(2);
}

}  // namespace deepsic
