/* mde/mde.h */

/* Copyright 2026  MDE Authors */

/* Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
 * WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
 * MERCHANTABLITY OR NON-INFRINGEMENT.
 * See the Apache 2 License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the mispronunciation-detection engine. The engine core is
 * C++; this header is the stable boundary that the CLI and any external
 * embedder link against. All functions return MDE_OK or an error code;
 * mde_last_error() describes the most recent failure on the calling thread.
 */

#ifndef MDE_MDE_H_
#define MDE_MDE_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mde_status {
  MDE_OK = 0,
  MDE_ERR_VALIDATION = 1, /* bad arguments or configuration */
  MDE_ERR_IO = 2,         /* filesystem or file-format failure */
  MDE_ERR_INTERNAL = 3
} mde_status;

/* Opaque pipeline configuration handle. */
typedef struct mde_config mde_config;

/* Creates a configuration preloaded with defaults. Returns NULL only on
 * allocation failure. Destroy with mde_config_destroy(). */
mde_config *mde_config_create(void);
void mde_config_destroy(mde_config *cfg);

/* Merges "key = value" lines from a file into the configuration. */
mde_status mde_config_load_file(mde_config *cfg, const char *path);

/* Sets one key. Unknown keys are validation errors. */
mde_status mde_config_set(mde_config *cfg, const char *key, const char *value);

/* Copies the current value of a key into buf (NUL-terminated, truncated to
 * buf_len). */
mde_status mde_config_get(const mde_config *cfg, const char *key, char *buf,
                          size_t buf_len);

/* Runs one pipeline stage: synth | train | decode | detect | calibrate |
 * evaluate | run. */
mde_status mde_run_stage(const mde_config *cfg, const char *stage);

/* Message for the most recent error on this thread; empty string if none. */
const char *mde_last_error(void);

const char *mde_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MDE_MDE_H_ */
