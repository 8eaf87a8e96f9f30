/* C interface to the flowedit library. All functions return an fe_status;
 * on failure fe_last_error() describes the problem for the calling thread. */
#ifndef FLOWEDIT_FLOWEDIT_H
#define FLOWEDIT_FLOWEDIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(FLOWEDIT_BUILDING_LIBRARY)
#define FE_API __attribute__((visibility("default")))
#else
#define FE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define FE_ABI_VERSION 1u

typedef enum fe_status {
  FE_OK = 0,
  FE_ERR_INVALID_ARGUMENT = 1,
  FE_ERR_SHAPE_MISMATCH = 2,
  FE_ERR_NON_FINITE = 3,
  FE_ERR_DEGENERATE = 4,
  FE_ERR_IO = 5,
  FE_ERR_VERSION_MISMATCH = 6,
  FE_ERR_PROTOCOL = 7,
  FE_ERR_OUT_OF_RANGE = 8,
  FE_ERR_TIMEOUT = 9,
  FE_ERR_CONNECTION = 10,
  FE_ERR_CONFIG = 11,
  FE_ERR_INTERNAL = 99
} fe_status;

typedef struct fe_config fe_config;
typedef struct fe_text fe_text;
typedef struct fe_mock_scorer fe_mock_scorer;

typedef struct fe_score {
  double alignment;
  double coherence;
  double consistency;
} fe_score;

FE_API uint32_t fe_abi_version(void);
FE_API const char* fe_status_name(fe_status status);
/* Message of the last failure on this thread; empty after a success. */
FE_API const char* fe_last_error(void);

/* Run configuration (flat JSON object). */
FE_API fe_status fe_config_new(fe_config** out);
FE_API fe_status fe_config_load(const char* path, fe_config** out);
FE_API fe_status fe_config_parse(const char* json, fe_config** out);
/* value is JSON ("0.3", "[0.3,0.2]") or a bare string for string keys. */
FE_API fe_status fe_config_set(fe_config* config, const char* key, const char* value);
FE_API fe_status fe_config_validate(const fe_config* config);
FE_API fe_status fe_config_json(const fe_config* config, fe_text** out);
FE_API fe_status fe_config_output_dir(const fe_config* config, fe_text** out);
FE_API fe_status fe_config_checkpoint(const fe_config* config, fe_text** out);
FE_API void fe_config_free(fe_config* config);

FE_API const char* fe_text_data(const fe_text* text);
FE_API size_t fe_text_size(const fe_text* text);
FE_API void fe_text_free(fe_text* text);

/* Orchestration; each writes config.json beside its outputs. */
FE_API fe_status fe_pretrain(const fe_config* config, const char* out_dir);
/* algo: "grpo" or "dense". */
FE_API fe_status fe_train(const fe_config* config, const char* algo, const char* checkpoint, const char* out_dir);
/* JSON report with per-component means. */
FE_API fe_status fe_eval(const fe_config* config, const char* checkpoint, fe_text** report);
/* CSV: layer,pos,argmax_position,argmax_token,entropy */
FE_API fe_status fe_probe_attention(const fe_config* config, const char* checkpoint, int code, fe_text** csv);
FE_API fe_status fe_export_curves(const char* const* run_dirs, size_t count, const char* out_path);

/* Rewards. */
FE_API fe_status fe_analytic_score(double source_x, double source_y, double edited_x, double edited_y, int code,
                                   fe_score* out);
FE_API fe_status fe_remote_score(const char* endpoint, int timeout_ms, double source_x, double source_y,
                                 double edited_x, double edited_y, int code, fe_score* out);

/* Mock scorer server. fault: none, out-of-range, malformed, silent, drop. */
FE_API fe_status fe_mock_scorer_start(const char* listen, uint64_t seed, const char* fault, fe_mock_scorer** out);
FE_API uint16_t fe_mock_scorer_port(const fe_mock_scorer* server);
/* Blocks until fe_mock_scorer_stop is called from another thread. */
FE_API fe_status fe_mock_scorer_wait(fe_mock_scorer* server);
FE_API void fe_mock_scorer_stop(fe_mock_scorer* server);
FE_API void fe_mock_scorer_free(fe_mock_scorer* server);

#ifdef __cplusplus
}
#endif

#endif
