#include "noma_deepsic.h"

#include <cstring>
#include <new>
#include <string>

#include "deepsic/config.hpp"
#include "deepsic/scenarios.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
nd_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const deepsic::ConfigError& e) {
        set_error(e.what());
        return ND_ERR_CONFIG;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return ND_ERR_INVALID_ARG;
    } catch (const std::system_error& e) {
        set_error(e.what());
        return ND_ERR_IO;
    } catch (const std::runtime_error& e) {
        set_error(e.what());
        return ND_ERR_NUMERIC;
    } catch (const std::bad_alloc&) {
        set_error("out of memory");
        return ND_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown error");
        return ND_ERR_INTERNAL;
    }
}

}  // namespace

struct nd_config {
    deepsic::RunConfig cfg;
};

extern "C" {

nd_config* nd_config_create(void) {
    g_last_error.clear();
    return new (std::nothrow) nd_config{};
}

nd_config* nd_config_load(const char* path) {
    if (path == nullptr) {
        set_error("path is NULL");
        return nullptr;
    }
    nd_config* out = nullptr;
    const nd_status st = guarded([&]() {
        auto* h = new nd_config{};
        try {
            h->cfg = deepsic::parse_config(path);
        } catch (...) {
            delete h;
            throw;
        }
        out = h;
        return ND_OK;
    });
    return st == ND_OK ? out : nullptr;
}

nd_status nd_config_set(nd_config* cfg, const char* key, const char* value) {
    if (cfg == nullptr || key == nullptr || value == nullptr) {
        set_error("nd_config_set: NULL argument");
        return ND_ERR_INVALID_ARG;
    }
    return guarded([&]() {
        deepsic::apply_config_entry(cfg->cfg, key, value);
        return ND_OK;
    });
}

nd_status nd_config_to_json(const nd_config* cfg, char** out_json) {
    if (cfg == nullptr || out_json == nullptr) {
        set_error("nd_config_to_json: NULL argument");
        return ND_ERR_INVALID_ARG;
    }
    return guarded([&]() {
        const std::string s = deepsic::config_to_json(cfg->cfg);
        char* buf = static_cast<char*>(::operator new(s.size() + 1, std::nothrow));
        if (buf == nullptr) {
            set_error("out of memory");
            return ND_ERR_INTERNAL;
        }
        std::memcpy(buf, s.c_str(), s.size() + 1);
        *out_json = buf;
        return ND_OK;
    });
}

void nd_config_destroy(nd_config* cfg) { delete cfg; }

nd_status nd_run_scenario(const nd_config* cfg, const char* scenario, int* exit_code) {
    if (cfg == nullptr || scenario == nullptr) {
        set_error("nd_run_scenario: NULL argument");
        return ND_ERR_INVALID_ARG;
    }
    return guarded([&]() {
        const deepsic::ScenarioResult res = deepsic::run_scenario(scenario, cfg->cfg);
        if (exit_code != nullptr) *exit_code = res.exit_code;
        return ND_OK;
    });
}

const char* nd_last_error(void) { return g_last_error.c_str(); }

void nd_string_free(char* s) { ::operator delete(static_cast<void*>(s)); }

const char* nd_version(void) { return "1.0.0"; }

}  // extern "C"
