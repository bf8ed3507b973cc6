/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CAUSALMIX_H
#define CAUSALMIX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CmConfounderRule {
  CM_CONFOUNDER_RULE_EXCLUSIVE_PATHS = 0,
  CM_CONFOUNDER_RULE_SHARED_ANCESTOR = 1,
} CmConfounderRule;

typedef enum CmStatus {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  CM_STATUS_INVALID_UTF8 = 2,
  CM_STATUS_PARSE = 3,
  CM_STATUS_INVALID_ARGUMENT = 4,
  CM_STATUS_SCHEMA = 5,
  CM_STATUS_IO = 6,
  CM_STATUS_BUFFER_TOO_SMALL = 7,
  CM_STATUS_PANIC = 8,
} CmStatus;

/*
 Opaque dataset handle.
 */
typedef struct CmDataset CmDataset;

/*
 Opaque causal network handle.
 */
typedef struct CmNetwork CmNetwork;

/*
 Node-pair counts by causal relation and confounding.
 */
typedef struct CmPairCounts {
  size_t related_confounded;
  size_t related_unconfounded;
  size_t unrelated_confounded;
  size_t unrelated_unconfounded;
} CmPairCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *cm_last_error(void);

/*
 # Safety
 `s` must be null or a string returned by this library and not yet freed.
 */
void cm_string_free(char *s);

/*
 Parses network text into a new handle stored in `*out`.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum CmStatus cm_network_parse(const char *text, struct CmNetwork **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CmStatus cm_network_read_file(const char *path, struct CmNetwork **out);

/*
 # Safety
 `net` must be null or a handle from this library that has not been freed.
 */
void cm_network_free(struct CmNetwork *net);

/*
 Number of variables, or 0 for a null handle.

 # Safety
 `net` must be null or a live handle.
 */
size_t cm_network_num_variables(const struct CmNetwork *net);

/*
 # Safety
 `net` must be a live handle; `out` must be writable.
 */
enum CmStatus cm_network_classify_pairs(const struct CmNetwork *net,
                                        enum CmConfounderRule rule,
                                        struct CmPairCounts *out);

/*
 Samples `m` experimental cases (half manipulating `x`, half `y`) and `n`
 observational cases over the pair, stored as a new dataset in `*out`.

 # Safety
 `net` must be a live handle; `x` and `y` NUL-terminated; `out` writable.
 */
enum CmStatus cm_generate_mix(const struct CmNetwork *net,
                              const char *x,
                              const char *y,
                              size_t m,
                              size_t n,
                              uint64_t seed,
                              struct CmDataset **out);

/*
 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum CmStatus cm_dataset_parse(const char *text, struct CmDataset **out);

/*
 Serializes the dataset into a new string stored in `*out`.

 # Safety
 `data` must be a live handle; `out` must be writable.
 */
enum CmStatus cm_dataset_write(const struct CmDataset *data, char **out);

/*
 # Safety
 `data` must be null or a handle from this library that has not been freed.
 */
void cm_dataset_free(struct CmDataset *data);

/*
 Number of cases, or 0 for a null handle.

 # Safety
 `data` must be null or a live handle.
 */
size_t cm_dataset_num_cases(const struct CmDataset *data);

/*
 Log marginal likelihood of `data` under `structure` (arcs such as
 `"X->Y"`, comma separated, or `"none"`) with `a_ijk = ess / (q_i r_i)`.

 # Safety
 `data` must be a live handle; `structure` NUL-terminated; `out` writable.
 */
enum CmStatus cm_score_log_marginal(const struct CmDataset *data,
                                    const char *structure,
                                    double ess,
                                    double *out);

/*
 Posterior of `x -> y`, `y -> x` and no arc, written to `out[0..3]`.

 # Safety
 `data` must be a live handle; `x`, `y` NUL-terminated; `out` must point to
 three writable doubles.
 */
enum CmStatus cm_pair_posterior(const struct CmDataset *data,
                                const char *x,
                                const char *y,
                                double *out);

/*
 Model-averaged distribution of `y` given `x = state`, observed or
 manipulated. Writes `r_y` values to `out` and stores `r_y` in `*written`.

 # Safety
 `data` must be a live handle; strings NUL-terminated; `out` must point to
 `out_len` writable doubles; `written` must be writable.
 */
enum CmStatus cm_predict(const struct CmDataset *data,
                         const char *x,
                         const char *y,
                         const char *state,
                         bool manipulate,
                         double *out,
                         size_t out_len,
                         size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAUSALMIX_H */
