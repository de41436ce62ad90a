#ifndef ADAF2M2_H
#define ADAF2M2_H

/* C interface to the feature-mask multi-forward training laboratory.
 *
 * Usage: build a config handle (defaults, optionally overlaid with a JSON
 * file and dotted-key overrides), then run commands against it. Every
 * command writes its artifacts under the configured output directory with
 * fixed filenames and echoes human-readable progress to a FILE*.
 */

#include <stdio.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum adaf2m2_status {
    ADAF2M2_OK = 0,
    ADAF2M2_ERR_CONFIG = 1,  /* invalid key, value, or combination */
    ADAF2M2_ERR_IO = 2,      /* missing or malformed file */
    ADAF2M2_ERR_NUMERIC = 3, /* non-finite values or a failed numeric guard */
    ADAF2M2_ERR_SHAPE = 4,   /* tensor shape disagreement */
    ADAF2M2_ERR_INVALID = 5, /* null handle or bad argument */
    ADAF2M2_ERR_FAILED = 6,  /* the command ran and reported failure */
    ADAF2M2_ERR_UNKNOWN = 7
} adaf2m2_status;

/* Opaque run configuration. */
typedef struct adaf2m2_config adaf2m2_config;

/* Static version string. */
const char* adaf2m2_version(void);

/* Message describing this thread's most recent error; empty string after a
 * success. The pointer stays valid until the next library call on the same
 * thread. */
const char* adaf2m2_last_error(void);

/* A configuration holding every default. NULL only on allocation failure.
 * Free with adaf2m2_config_free. */
adaf2m2_config* adaf2m2_config_new(void);

/* Defaults overlaid with a JSON config file. NULL on error; see
 * adaf2m2_last_error. */
adaf2m2_config* adaf2m2_config_load(const char* path);

/* Applies one "dotted.path=value" override. */
adaf2m2_status adaf2m2_config_set(adaf2m2_config* cfg, const char* assignment);

/* The resolved tree as pretty-printed JSON. Free the returned string with
 * adaf2m2_string_free. NULL on error. */
char* adaf2m2_config_dump(const adaf2m2_config* cfg);

void adaf2m2_config_free(adaf2m2_config* cfg);

/* Commands. `echo` receives progress and result lines; NULL silences them.
 * Artifacts land under the configured out directory: train writes
 * checkpoint, train_log, resolved_config; eval writes report; analyze writes
 * heatmap_user.csv and heatmap_item.csv; gen-synth writes train.tsv,
 * val.tsv, test.tsv. */
adaf2m2_status adaf2m2_run_train(const adaf2m2_config* cfg, FILE* echo);
adaf2m2_status adaf2m2_run_eval(const adaf2m2_config* cfg, FILE* echo);
adaf2m2_status adaf2m2_run_analyze(const adaf2m2_config* cfg, FILE* echo);
/* ADAF2M2_ERR_FAILED when any model/ablation cell exceeds the gradient
 * tolerance. */
adaf2m2_status adaf2m2_run_gradcheck(const adaf2m2_config* cfg, FILE* echo);
adaf2m2_status adaf2m2_run_gen_synth(const adaf2m2_config* cfg, FILE* echo);

/* Frees strings returned by this library. */
void adaf2m2_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ADAF2M2_H */
