/* C API of the graphdial core. All functions return gdial_status; 0 means
 * success and nonzero values match the CLI exit codes. Returned strings are
 * heap-allocated JSON (or plain text) and must be released with
 * gdial_string_free. Handles are opaque; every create has a matching free.
 * On failure, gdial_last_error() returns a thread-local message. */
#ifndef GDIAL_H
#define GDIAL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gdial_status {
  GDIAL_OK = 0,
  GDIAL_ERR_IO = 2,      /* unreadable/unwritable/malformed files */
  GDIAL_ERR_CONFIG = 3,  /* bad config keys, violated contracts */
  GDIAL_ERR_NUMERIC = 4, /* non-finite values during training */
  GDIAL_ERR_COMPAT = 5,  /* checkpoint/corpus mismatch */
} gdial_status;

typedef struct gdial_config gdial_config;
typedef struct gdial_model gdial_model;

const char* gdial_version(void);
const char* gdial_last_error(void);
void gdial_string_free(char* s);

/* --- configuration ----------------------------------------------------- */

gdial_config* gdial_config_new(void);
void gdial_config_free(gdial_config* cfg);
gdial_status gdial_config_load_file(gdial_config* cfg, const char* path);
gdial_status gdial_config_set(gdial_config* cfg, const char* key, const char* value);
/* no-sg | sg | sg-rel | sg-rel-attn | no-vis | no-coattn */
gdial_status gdial_config_apply_ablation(gdial_config* cfg, const char* name);
gdial_status gdial_config_get(const gdial_config* cfg, const char* key, char** value_out);

/* --- commands ------------------------------------------------------------ */

/* Writes a corpus file; summary_json_out reports counts and the checksum. */
gdial_status gdial_gen_data(const gdial_config* cfg, const char* out_path,
                            char** summary_json_out);

/* Per-epoch JSONL lines are forwarded to the callback as they are logged. */
typedef void (*gdial_train_callback)(const char* epoch_json_line, void* user_data);
gdial_status gdial_train(const gdial_config* cfg, const char* corpus_path, const char* out_dir,
                         gdial_train_callback callback, void* user_data,
                         char** summary_json_out);

gdial_model* gdial_model_load(const char* checkpoint_path);
void gdial_model_free(gdial_model* model);

/* split: train | val | all. */
gdial_status gdial_eval(const gdial_model* model, const char* corpus_path, const char* split,
                        int workers, int dump_ranks, char** report_json_out);

gdial_status gdial_infer(const gdial_model* model, const char* corpus_path, uint64_t image_id,
                         int round_index, char** result_json_out);

gdial_status gdial_gradcheck(char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* GDIAL_H */
