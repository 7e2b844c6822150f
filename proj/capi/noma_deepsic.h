/* C API for the NOMA Deep-SIC simulator core.
 *
 * All entry points return an error code (or NULL for constructors on
 * failure); nd_last_error() gives a thread-local message for the most
 * recent failure on the calling thread. Handles are opaque and must be
 * released with their destroy function.
 */
#ifndef NOMA_DEEPSIC_H
#define NOMA_DEEPSIC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ND_API __declspec(dllexport)
#else
#define ND_API __attribute__((visibility("default")))
#endif

typedef enum nd_status {
    ND_OK = 0,
    ND_ERR_INVALID_ARG = 1,   /* bad handle, bad key, malformed value */
    ND_ERR_CONFIG = 2,        /* config file parse or validation failure */
    ND_ERR_IO = 3,            /* file read/write failure */
    ND_ERR_NUMERIC = 4,       /* guard violation, non-finite loss, ... */
    ND_ERR_INTERNAL = 5
} nd_status;

typedef struct nd_config nd_config;

/* Default configuration. Never returns NULL except on allocation failure. */
ND_API nd_config* nd_config_create(void);

/* Parse a key = value config file into a fresh handle; NULL on failure. */
ND_API nd_config* nd_config_load(const char* path);

/* Apply one dotted-key override, e.g. "run.trials", "120". */
ND_API nd_status nd_config_set(nd_config* cfg, const char* key, const char* value);

/* Effective config as a JSON string. Caller frees with nd_string_free. */
ND_API nd_status nd_config_to_json(const nd_config* cfg, char** out_json);

ND_API void nd_config_destroy(nd_config* cfg);

/* Run one scenario: estimate | train | transfer | handover-sweep |
 * complexity-sweep | theory-check. Artifacts land in the config's output
 * directory. exit_code receives the scenario's own exit status (nonzero only
 * for strict-mode theory-check failures); may be NULL. */
ND_API nd_status nd_run_scenario(const nd_config* cfg, const char* scenario, int* exit_code);

/* Message for the most recent error on this thread; empty string if none. */
ND_API const char* nd_last_error(void);

ND_API void nd_string_free(char* s);

ND_API const char* nd_version(void);

#ifdef __cplusplus
}
#endif

#endif /* NOMA_DEEPSIC_H */
