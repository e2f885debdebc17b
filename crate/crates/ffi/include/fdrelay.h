#ifndef FDRELAY_H
#define FDRELAY_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum FdrStatus {
  FDR_STATUS_OK = 0,
  FDR_STATUS_NULL_POINTER = 1,
  FDR_STATUS_DOMAIN = 2,
  FDR_STATUS_CONTRACT = 3,
  FDR_STATUS_WRONG_MODEL = 4,
  FDR_STATUS_RESOURCE_BOUND = 5,
  FDR_STATUS_UNSTABLE = 6,
  FDR_STATUS_TRUNCATION = 7,
  FDR_STATUS_UNDEFINED_FRACTION = 8,
  FDR_STATUS_CONFIG = 9,
  FDR_STATUS_IO = 10,
  FDR_STATUS_INVALID_UTF8 = 11,
  FDR_STATUS_PANIC = 12,
} FdrStatus;

typedef enum FdrReceiver {
  FDR_RECEIVER_RELAY = 0,
  FDR_RECEIVER_DESTINATION = 1,
} FdrReceiver;

typedef enum FdrTableMode {
  FDR_TABLE_MODE_DERIVED = 0,
  FDR_TABLE_MODE_PRINTED = 1,
} FdrTableMode;

typedef enum FdrDelayConvention {
  FDR_DELAY_CONVENTION_HEAD_OF_LINE = 0,
  FDR_DELAY_CONVENTION_ADDITIVE_SERVICE = 1,
} FdrDelayConvention;

typedef enum FdrSamplingMode {
  FDR_SAMPLING_MODE_PROBABILITY = 0,
  FDR_SAMPLING_MODE_SINR = 1,
} FdrSamplingMode;

typedef enum FdrVerdict {
  FDR_VERDICT_STABLE = 0,
  FDR_VERDICT_UNSTABLE = 1,
  FDR_VERDICT_INCONCLUSIVE = 2,
} FdrVerdict;

/**
 * Opaque symmetric network description.
 */
typedef struct FdrParams FdrParams;

/**
 * Analytical results for one user of a symmetric network.
 *
 * Delays are `INFINITY` when the relay queue is unstable and `NAN` when
 * undefined. `relayed_fraction` is `NAN` when the user throughput is zero.
 */
typedef struct FdrEvaluation {
  double mu;
  double lambda0;
  double lambda1;
  double lambda;
  double p_empty;
  double q_bar;
  /**
   * Smallest stabilizing relay access probability; above 1 when none is.
   */
  double q0_min;
  bool stable;
  double t_direct;
  double t_relayed;
  double t_user;
  double t_aggr;
  double relayed_fraction;
  double d_queue;
  double d_relay;
  double delay;
  double baseline_throughput;
  double baseline_delay;
} FdrEvaluation;

/**
 * Simulation estimates (mean and standard error) for a symmetric network.
 */
typedef struct FdrSimSummary {
  uint64_t measured_slots;
  double mu;
  double mu_se;
  double lambda;
  double lambda_se;
  double p_empty;
  double p_empty_se;
  double q_bar;
  double q_bar_se;
  double t_user;
  double t_user_se;
  double t_aggr;
  double t_aggr_se;
  double delay;
  double delay_se;
  uint64_t max_queue;
  enum FdrVerdict verdict;
} FdrSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fdr_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next library call on the same thread.
 */
const char *fdr_last_error(void);

/**
 * Reference setup with `n` users, capture threshold `gamma` at both
 * receivers, self-interference coefficient `g` and access probabilities
 * `q`, `q0`. Returns NULL for an invalid configuration.
 */
struct FdrParams *fdr_params_new(size_t n, double gamma, double g, double q, double q0);

/**
 * # Safety
 * `p` must be NULL or a handle from [`fdr_params_new`] not yet freed.
 */
void fdr_params_free(struct FdrParams *p);

/**
 * Sets one field by name: `n`, `q`, `q0`, `gamma` (both receivers),
 * `gamma_0`, `gamma_d`, `g`, `r_d`, `r_0`, `r_0d`, `alpha`, `eta` (both
 * receivers), `eta_0`, `eta_d`, `p_tx_user`, `p_tx_relay`, `v_d`, `v_0`,
 * `v_0d`. The handle is left unchanged if the result would be invalid.
 *
 * # Safety
 * `p` must be a live handle and `key` a NUL-terminated string.
 */
enum FdrStatus fdr_params_set(struct FdrParams *p, const char *key, double value);

/**
 * Reads one field by name; accepts the same keys as [`fdr_params_set`]
 * except the combined `gamma` and `eta`.
 *
 * # Safety
 * `p` must be a live handle, `key` a NUL-terminated string and `out`
 * writable.
 */
enum FdrStatus fdr_params_get(const struct FdrParams *p, const char *key, double *out);

/**
 * Capture probability of `tx` at `rx` when the relay (if `relay_tx`) and
 * the users listed in `users` transmit. `tx` is a user index, or -1 for
 * the relay; the transmitter must belong to the transmit set.
 *
 * # Safety
 * `p` must be a live handle, `users` must point to `n_users` readable
 * indices (or be NULL when `n_users` is 0) and `out` must be writable.
 */
enum FdrStatus fdr_success_probability(const struct FdrParams *p,
                                       int64_t tx,
                                       enum FdrReceiver rx,
                                       bool relay_tx,
                                       const size_t *users,
                                       size_t n_users,
                                       double *out);

/**
 * Analytical evaluation. An unstable relay queue is not an error: `stable`
 * is false, the delays are infinite and throughput takes its saturated
 * value.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum FdrStatus fdr_evaluate(const struct FdrParams *p,
                            enum FdrTableMode table_mode,
                            enum FdrDelayConvention convention,
                            struct FdrEvaluation *out);

/**
 * Slot-level simulation of `slots` slots (default warmup and batching).
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum FdrStatus fdr_simulate(const struct FdrParams *p,
                            uint64_t slots,
                            uint64_t seed,
                            enum FdrSamplingMode mode,
                            struct FdrSimSummary *out);

/**
 * Runs the experiment described by `config` (the CLI configuration format)
 * and stores the CSV in `*csv_out`, to be released with
 * [`fdr_string_free`]. `*issues_out`, if non-NULL, receives the number of
 * oracle disagreements.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `csv_out` writable.
 */
enum FdrStatus fdr_experiment_csv(const char *config, char **csv_out, size_t *issues_out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void fdr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FDRELAY_H */
