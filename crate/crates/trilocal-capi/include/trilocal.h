#ifndef TRILOCAL_H
#define TRILOCAL_H

/* Generated by cbindgen from the trilocal-capi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum TlStatus {
  TL_OK = 0,
  TL_ERR_INVALID_ARGUMENT = 1,
  TL_ERR_IO = 2,
  TL_ERR_PARSE = 3,
  TL_ERR_TRAIN = 4,
  TL_ERR_UNSUPPORTED = 5,
  TL_ERR_NULL_POINTER = 6,
  TL_ERR_PANIC = 7,
} TlStatus;

// Target distribution families.
typedef enum TlFamily {
  TL_FAMILY_FRITZ_VISIBILITY = 0,
  TL_FAMILY_ELEGANT_VISIBILITY = 1,
  TL_FAMILY_ELEGANT_DETECTOR = 2,
  TL_FAMILY_RENOU_SCAN = 3,
  TL_FAMILY_RENOU_VISIBILITY = 4,
  TL_FAMILY_RENOU_DETECTOR = 5,
} TlFamily;

// Parties of the triangle.
typedef enum TlParty {
  TL_PARTY_A = 0,
  TL_PARTY_B = 1,
  TL_PARTY_C = 2,
} TlParty;

// Opaque probability distribution over the parties' joint outcomes.
typedef struct TlDistribution TlDistribution;

// Opaque trained triangle model.
typedef struct TlModel TlModel;

// Training hyperparameters; obtain defaults from
// [`tl_train_config_default`] and override fields as needed.
typedef struct TlTrainConfig {
  size_t batch_size;
  size_t depth;
  size_t width;
  // 0 = rectified linear, 1 = tanh.
  int32_t activation;
  // 0 = relative entropy, 1 = mean squared error, 2 = mean absolute.
  int32_t loss;
  double learning_rate;
  size_t training_steps;
  size_t restarts;
  size_t eval_batch_size;
  uint64_t rng_seed;
  uint64_t eval_seed;
} TlTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent error on this thread. The pointer is
// valid until the next failing call on the same thread.
const char *tl_last_error_message(void);

// Library version as a static string.
const char *tl_version(void);

// Generates a family target. `u_squared` selects the measurement for the
// Renou families (pass NAN when not applicable); `v` is the curve
// parameter (the scan coordinate itself for the Renou scan).
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle that must
// be released with [`tl_distribution_free`].
enum TlStatus tl_family_target(enum TlFamily family,
                               double u_squared,
                               double v,
                               struct TlDistribution **out);

// Reads a distribution from a CSV or JSON file (chosen by extension).
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum TlStatus tl_distribution_read_file(const char *path, struct TlDistribution **out);

// Writes a distribution to a CSV or JSON file (chosen by extension).
//
// # Safety
// `dist` must be a live handle and `path` a NUL-terminated string.
enum TlStatus tl_distribution_write_file(const struct TlDistribution *dist, const char *path);

// Outcomes per party, or 0 for a null handle.
//
// # Safety
// `dist` must be null or a live handle.
size_t tl_distribution_cardinality(const struct TlDistribution *dist);

// Number of joint outcomes (`cardinality^3`), or 0 for a null handle.
//
// # Safety
// `dist` must be null or a live handle.
size_t tl_distribution_len(const struct TlDistribution *dist);

// Copies the flat probability vector (index `a*o^2 + b*o + c`) into `buf`.
//
// # Safety
// `buf` must point to at least `len` writable doubles.
enum TlStatus tl_distribution_probs(const struct TlDistribution *dist, double *buf, size_t len);

// Releases a distribution handle; null is ignored.
//
// # Safety
// `dist` must be null or an unfreed handle from this library.
void tl_distribution_free(struct TlDistribution *dist);

// Euclidean distance between two distributions of equal cardinality.
//
// # Safety
// Handles must be live; `out` must be a valid pointer.
enum TlStatus tl_euclidean_distance(const struct TlDistribution *left,
                                    const struct TlDistribution *right,
                                    double *out);

// Default training configuration.
struct TlTrainConfig tl_train_config_default(void);

// Trains the constrained network against a target and returns the best
// model over the configured restarts together with its evaluation
// distance. Pass a null `cfg` for defaults.
//
// # Safety
// `target` must be a live handle; `out_model` and `out_distance` must be
// valid pointers. The returned handle must be freed with [`tl_model_free`].
enum TlStatus tl_fit_model(const struct TlDistribution *target,
                           const struct TlTrainConfig *cfg,
                           struct TlModel **out_model,
                           double *out_distance);

// Response probabilities of one party for a latent pair; `len` must be at
// least the model's outcome cardinality.
//
// # Safety
// `model` must be a live handle; `probs` must point to `len` writable
// doubles.
enum TlStatus tl_model_forward(const struct TlModel *model,
                               enum TlParty party,
                               double latent1,
                               double latent2,
                               double *probs,
                               size_t len);

// Monte Carlo estimate of the model's joint distribution from `samples`
// fresh latent triples drawn with `seed`.
//
// # Safety
// `model` must be a live handle; `out` must be a valid pointer and the
// result freed with [`tl_distribution_free`].
enum TlStatus tl_model_distribution(const struct TlModel *model,
                                    uint64_t seed,
                                    size_t samples,
                                    struct TlDistribution **out);

// Outcomes per party, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t tl_model_cardinality(const struct TlModel *model);

// Saves a model checkpoint as JSON.
//
// # Safety
// `model` must be a live handle and `path` a NUL-terminated string.
enum TlStatus tl_model_save(const struct TlModel *model, const char *path);

// Loads a model checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer
// and the result freed with [`tl_model_free`].
enum TlStatus tl_model_load(const char *path, struct TlModel **out);

// Releases a model handle; null is ignored.
//
// # Safety
// `model` must be null or an unfreed handle from this library.
void tl_model_free(struct TlModel *model);

// Exact minimum distance from a binary-output target to the local set via
// the brute-force classical search. Pass `starts = 0` for the default
// multistart count.
//
// # Safety
// `target` must be a live handle; `out_distance` must be a valid pointer.
enum TlStatus tl_oracle_distance(const struct TlDistribution *target,
                                 size_t hidden_cardinality,
                                 size_t starts,
                                 uint64_t seed,
                                 double *out_distance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRILOCAL_H */
