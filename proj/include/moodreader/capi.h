#ifndef MOODREADER_CAPI_H
#define MOODREADER_CAPI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Error codes returned by every mr_run_* call. */
enum {
    MR_OK = 0,
    MR_ERR_ARG = 1,      /* bad argument / null handle */
    MR_ERR_CONFIG = 2,   /* invalid configuration */
    MR_ERR_IO = 3,       /* file could not be read or written */
    MR_ERR_DATA = 4,     /* malformed or inconsistent data */
    MR_ERR_SHAPE = 5,    /* tensor shape mismatch */
    MR_ERR_INTERNAL = 6, /* anything else */
};

/* Opaque experiment session: configuration + seed + output directory. */
typedef struct mr_session mr_session;

/* Creates a session from a JSON config file; pass NULL for all defaults.
 * Returns NULL on failure (see mr_global_error()). */
mr_session* mr_session_open(const char* config_path);

/* Same, but from in-memory JSON text. */
mr_session* mr_session_open_text(const char* config_json);

void mr_session_close(mr_session* s);

/* Overrides applied after the config file is parsed. */
int mr_session_set_seed(mr_session* s, uint64_t seed);
int mr_session_set_out_dir(mr_session* s, const char* dir);
/* Supported keys: "preset", "dataset", "manifest", "steps", "pretrain-steps",
 * "encoder-checkpoint", "repeats". */
int mr_session_set_option(mr_session* s, const char* key, const char* value);

/* Human-readable message for the most recent failure on this session. */
const char* mr_session_error(const mr_session* s);
/* Message for the most recent mr_session_open* failure. */
const char* mr_global_error(void);

/* Preprocesses the configured dataset and exports differential-entropy
 * feature tensors plus a summary to <out>/. */
int mr_run_features(mr_session* s);

/* Masked-signal pretraining; writes <out>/encoder.bin and the loss curve. */
int mr_run_pretrain(mr_session* s);

/* Supervised training on the configured split; writes <out>/model.bin,
 * <out>/metrics.json and <out>/loss_curve.csv. */
int mr_run_train(mr_session* s);

/* Evaluates a trained checkpoint on the held-out split;
 * writes <out>/eval_metrics.json. */
int mr_run_eval(mr_session* s, const char* checkpoint_path);

/* Trains every requested arm (comma-separated, NULL = all presets) and
 * writes <out>/ablation.csv + <out>/ablation.json. */
int mr_run_ablate(mr_session* s, const char* arms);

/* Channel-attention visualization for a checkpoint (NULL = train first);
 * writes <out>/attention.csv and <out>/topomap.ppm. */
int mr_run_viz(mr_session* s, const char* checkpoint_path);

/* Writes a synthetic corpus (CSV matrices + manifest.json) under dir. */
int mr_run_synth(mr_session* s, const char* dir);

const char* mr_version(void);

#ifdef __cplusplus
}
#endif

#endif /* MOODREADER_CAPI_H */
