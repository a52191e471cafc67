#ifndef TFKEY_H
#define TFKEY_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TfkeyStatus {
  TFKEY_STATUS_OK = 0,
  TFKEY_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside its allowed range.
   */
  TFKEY_STATUS_INVALID_ARGUMENT = 2,
  TFKEY_STATUS_NO_DETECTIONS = 3,
  TFKEY_STATUS_INFEASIBLE = 4,
  TFKEY_STATUS_UNBOUNDED = 5,
  TFKEY_STATUS_ITERATION_LIMIT = 6,
  TFKEY_STATUS_MALFORMED_LP = 7,
  TFKEY_STATUS_PARSE = 8,
  /**
   * The output buffer is too small; the required size was reported.
   */
  TFKEY_STATUS_BUFFER_TOO_SMALL = 9,
  TFKEY_STATUS_PANIC = 10,
} TfkeyStatus;

/**
 * Outcome recorded in a report.
 */
typedef enum TfkeyRunStatus {
  TFKEY_RUN_STATUS_OK = 0,
  TFKEY_RUN_STATUS_ZERO_KEY = 1,
  TFKEY_RUN_STATUS_INFEASIBLE = 2,
  TFKEY_RUN_STATUS_NO_DETECTIONS = 3,
} TfkeyRunStatus;

/**
 * Channel, budget and analysis settings reused across calls.
 */
typedef struct TfkeyAnalyzer TfkeyAnalyzer;

/**
 * A linear program `maximize c·x` with equalities, `<=` rows and boxes.
 */
typedef struct TfkeyLp TfkeyLp;

/**
 * Link and device parameters.
 */
typedef struct TfkeyChannel {
  double e_m;
  double p_d;
  double xi;
  double eta_d;
  double f_ec;
} TfkeyChannel;

typedef struct TfkeyBudget {
  double eps_a;
  double eps_total_pe;
  double eps_cor;
  double eps_pa;
  double eps_sec;
  double eps_tol;
} TfkeyBudget;

/**
 * Intensities, sending probabilities, phase slices and pulse count.
 */
typedef struct TfkeyProtocol {
  double mu;
  double nu;
  double p_mu;
  double p_nu;
  size_t slices;
  uint64_t n_tot;
} TfkeyProtocol;

/**
 * One analyzed distance. `plob_rate` is infinite at zero distance.
 */
typedef struct TfkeyReport {
  double distance_km;
  double n_bit;
  double e_bit;
  double n_ph_upper;
  double e_ph_upper;
  double key_length;
  double key_rate;
  double plob_rate;
  enum TfkeyRunStatus status;
} TfkeyReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated name of a status code.
 */
const char *tfkey_status_name(enum TfkeyStatus status);

/**
 * Copies the calling thread's last error message into `buf`.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes; `needed` null or writable.
 */
enum TfkeyStatus tfkey_last_error(char *buf, size_t cap, size_t *needed);

/**
 * Default channel: 3% misalignment, 1e-8 dark counts, 0.2 dB/km,
 * detector efficiency 0.3, error-correction inefficiency 1.1.
 */
struct TfkeyChannel tfkey_channel_default(void);

/**
 * Budget from the total estimation failure probability.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum TfkeyStatus tfkey_budget_from_total(double eps_total_pe,
                                         size_t slices,
                                         double eps_cor,
                                         double eps_pa,
                                         struct TfkeyBudget *out);

/**
 * Budget from the per-bound failure probability.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum TfkeyStatus tfkey_budget_from_eps_a(double eps_a,
                                         size_t slices,
                                         double eps_cor,
                                         double eps_pa,
                                         struct TfkeyBudget *out);

/**
 * Weight of the photon-number class `j` (mod `slices`) of a Poisson
 * distribution with the given mean.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum TfkeyStatus tfkey_folded_poisson(size_t j, double mean, size_t slices, double *out);

/**
 * Fidelity between class `j` states prepared with single-pulse intensities
 * `a` and `b`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum TfkeyStatus tfkey_folded_fidelity(size_t j, double a, double b, size_t slices, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum TfkeyStatus tfkey_binary_entropy(double p, double *out);

/**
 * Repeaterless bound at `distance_km`.
 *
 * # Safety
 * `channel` must be null or valid; `out` null or writable.
 */
enum TfkeyStatus tfkey_plob_rate(double distance_km,
                                 const struct TfkeyChannel *channel,
                                 bool include_detector,
                                 double *out);

/**
 * Creates an analyzer using expected counts. Only `eps_a`, `eps_cor` and
 * `eps_pa` are read from `budget`; the totals follow each protocol's
 * number of slices.
 *
 * # Safety
 * `channel` and `budget` must be null or valid; `out` null or writable.
 */
enum TfkeyStatus tfkey_analyzer_new(const struct TfkeyChannel *channel,
                                    const struct TfkeyBudget *budget,
                                    struct TfkeyAnalyzer **out);

/**
 * Draw counts around their expectations with `seed`, or use the
 * expectations again when `sampled` is false.
 *
 * # Safety
 * `analyzer` must be null or a live handle.
 */
enum TfkeyStatus tfkey_analyzer_set_sampling(struct TfkeyAnalyzer *analyzer,
                                             bool sampled,
                                             uint64_t seed);

/**
 * Multiplies every gap bound by `scale` (1 is the plain analysis).
 *
 * # Safety
 * `analyzer` must be null or a live handle.
 */
enum TfkeyStatus tfkey_analyzer_set_delta_scale(struct TfkeyAnalyzer *analyzer, double scale);

/**
 * Applies the detector efficiency inside the transmittance.
 *
 * # Safety
 * `analyzer` must be null or a live handle.
 */
enum TfkeyStatus tfkey_analyzer_set_detector_in_transmittance(struct TfkeyAnalyzer *analyzer,
                                                              bool enabled);

/**
 * Key rate for `protocol` at `distance_km`.
 *
 * # Safety
 * `analyzer` and `protocol` must be null or valid; `out` null or writable.
 */
enum TfkeyStatus tfkey_analyzer_run(const struct TfkeyAnalyzer *analyzer,
                                    const struct TfkeyProtocol *protocol,
                                    double distance_km,
                                    struct TfkeyReport *out);

/**
 * # Safety
 * `analyzer` must be null or a handle not yet freed.
 */
void tfkey_analyzer_free(struct TfkeyAnalyzer *analyzer);

/**
 * Phase-error program for `protocol` at `distance_km` with expected counts.
 *
 * # Safety
 * `analyzer` and `protocol` must be null or valid; `out` null or writable.
 */
enum TfkeyStatus tfkey_lp_build(const struct TfkeyAnalyzer *analyzer,
                                const struct TfkeyProtocol *protocol,
                                double distance_km,
                                struct TfkeyLp **out);

/**
 * Reads a program from its text dump.
 *
 * # Safety
 * `text` must be null or a NUL-terminated string; `out` null or writable.
 */
enum TfkeyStatus tfkey_lp_parse(const char *text, struct TfkeyLp **out);

/**
 * Number of variables, or 0 for a null handle.
 *
 * # Safety
 * `lp` must be null or a live handle.
 */
size_t tfkey_lp_num_vars(const struct TfkeyLp *lp);

/**
 * Writes the text dump of `lp` into `buf`; `needed` receives the size
 * including the NUL.
 *
 * # Safety
 * `lp` must be null or a live handle, `buf` null or valid for `cap` bytes,
 * `needed` null or writable.
 */
enum TfkeyStatus tfkey_lp_dump(const struct TfkeyLp *lp, char *buf, size_t cap, size_t *needed);

/**
 * Maximizes the program. An infeasible or unbounded program returns the
 * matching status. `values` (length `len`, at least the number of
 * variables) may be null; `iterations` may be null.
 *
 * # Safety
 * `lp` must be null or a live handle; `objective` null or writable;
 * `values` null or valid for `len` doubles; `iterations` null or writable.
 */
enum TfkeyStatus tfkey_lp_solve(const struct TfkeyLp *lp,
                                double *objective,
                                double *values,
                                size_t len,
                                size_t *iterations);

/**
 * # Safety
 * `lp` must be null or a handle not yet freed.
 */
void tfkey_lp_free(struct TfkeyLp *lp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFKEY_H */
