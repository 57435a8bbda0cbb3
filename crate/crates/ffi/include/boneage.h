#ifndef BONEAGE_H
#define BONEAGE_H

#include <stddef.h>
#include <stdint.h>

/*
 Result of every fallible call.
 */
typedef enum BaStatus {
  BA_STATUS_OK = 0,
  BA_STATUS_NULL_ARGUMENT = 1,
  BA_STATUS_INVALID_ARGUMENT = 2,
  BA_STATUS_IO = 3,
  BA_STATUS_DATA = 4,
  BA_STATUS_NUMERIC = 5,
  BA_STATUS_BUFFER_TOO_SMALL = 6,
  BA_STATUS_PANIC = 7,
} BaStatus;

/*
 Values accepted by the `measure` argument of [`ba_elastic_distance`].
 */
typedef enum BaMeasure {
  BA_MEASURE_EUCLIDEAN = 0,
  /*
   `param_a`: window fraction.
   */
  BA_MEASURE_DTW = 1,
  /*
   `param_a`: penalty g.
   */
  BA_MEASURE_WDTW = 2,
  /*
   `param_a`: epsilon; no band.
   */
  BA_MEASURE_LCSS = 3,
  /*
   `param_a`: gap value; no band.
   */
  BA_MEASURE_ERP = 4,
  /*
   `param_a`: stiffness, `param_b`: penalty.
   */
  BA_MEASURE_TWED = 5,
  /*
   `param_a`: split/merge cost.
   */
  BA_MEASURE_MSM = 6,
} BaMeasure;

/*
 Values accepted by the `factors` argument of [`ba_age_bank_train`].
 */
typedef enum BaFactors {
  BA_FACTORS_NONE = 0,
  BA_FACTORS_SEX = 1,
  BA_FACTORS_SEX_ETHNICITY = 2,
} BaFactors;

typedef struct BaAgeBank BaAgeBank;

typedef struct BaDataset BaDataset;

typedef struct BaStageModel BaStageModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer is
 valid until the next failing call on the same thread.
 */
const char *ba_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ba_version(void);

/*
 Generates `n_subjects` synthetic subjects with the default generator.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum BaStatus ba_dataset_synth(uintptr_t n_subjects, uint64_t seed, struct BaDataset **out);

/*
 Loads a JSON-lines dataset.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BaStatus ba_dataset_load(const char *path, struct BaDataset **out);

/*
 # Safety
 `ds` must be a live dataset handle; `path` a NUL-terminated string.
 */
enum BaStatus ba_dataset_save(const struct BaDataset *ds, const char *path);

/*
 Number of bone records, or 0 for NULL.

 # Safety
 `ds` must be NULL or a live dataset handle.
 */
uintptr_t ba_dataset_len(const struct BaDataset *ds);

/*
 # Safety
 `ds` must be NULL or a handle not yet freed.
 */
void ba_dataset_free(struct BaDataset *ds);

/*
 Writes the 25 shape features of record `index` into `out` (25 doubles).

 # Safety
 `ds` must be a live handle; `out` must hold 25 doubles.
 */
enum BaStatus ba_dataset_features(const struct BaDataset *ds, uintptr_t index, double *out);

/*
 Number of shape features per record.
 */
uintptr_t ba_feature_count(void);

/*
 Distance between two series of length `n` under `measure`.

 # Safety
 `a` and `b` must each point to `n` doubles; `out` must be writable.
 */
enum BaStatus ba_elastic_distance(int32_t measure,
                                  double param_a,
                                  double param_b,
                                  const double *a,
                                  const double *b,
                                  uintptr_t n,
                                  double *out);

/*
 Loads a stage model written by `boneage train-stage`.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BaStatus ba_stage_model_load(const char *path, struct BaStageModel **out);

/*
 Classifies `n_rows` row-major input vectors of width `n_cols` (feature
 rows or radial series, matching the model) into `out_stages`.

 # Safety
 `x` must point to `n_rows * n_cols` doubles and `out_stages` to `n_rows`
 integers.
 */
enum BaStatus ba_stage_model_classify(const struct BaStageModel *model,
                                      const double *x,
                                      uintptr_t n_rows,
                                      uintptr_t n_cols,
                                      int32_t *out_stages);

/*
 # Safety
 `model` must be NULL or a handle not yet freed.
 */
void ba_stage_model_free(struct BaStageModel *model);

/*
 Letter of stage index 0..=7 (`'B'..='I'`), or 0 when out of range.
 */
char ba_stage_letter(int32_t stage);

/*
 Fits the per-bone age models on a labelled dataset.

 # Safety
 `ds` must be a live handle; `out` must be writable.
 */
enum BaStatus ba_age_bank_train(const struct BaDataset *ds,
                                int32_t factors,
                                struct BaAgeBank **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BaStatus ba_age_bank_load(const char *path, struct BaAgeBank **out);

/*
 # Safety
 `bank` must be a live handle; `path` a NUL-terminated string.
 */
enum BaStatus ba_age_bank_save(const struct BaAgeBank *bank, const char *path);

/*
 Fused age per subject, in order of first appearance in `ds`.
 `*out_count` always receives the number of subjects; when it exceeds
 `capacity` nothing is written and `BufferTooSmall` is returned.

 # Safety
 `bank` and `ds` must be live handles; `out_ages` must hold `capacity`
 doubles; `out_count` must be writable.
 */
enum BaStatus ba_age_bank_predict(const struct BaAgeBank *bank,
                                  const struct BaDataset *ds,
                                  double level,
                                  double *out_ages,
                                  uintptr_t capacity,
                                  uintptr_t *out_count);

/*
 # Safety
 `bank` must be NULL or a handle not yet freed.
 */
void ba_age_bank_free(struct BaAgeBank *bank);

/*
 Fuses one to three per-bone age predictions.

 # Safety
 `preds` must point to `n` doubles; `out` must be writable.
 */
enum BaStatus ba_fuse(const double *preds, uintptr_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BONEAGE_H */
