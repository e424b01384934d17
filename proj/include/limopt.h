/* C interface to the limopt optimization library.
 *
 * Every function that can fail returns a limopt_status; LIMOPT_OK is 0. On
 * failure, limopt_last_error() returns a thread-local message describing the
 * most recent error on the calling thread. Pointers returned by the library
 * stay valid until the next failing call on the same thread (messages) or
 * until freed with the matching *_free function (handles).
 */
#ifndef LIMOPT_H
#define LIMOPT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum limopt_status {
  LIMOPT_OK = 0,
  LIMOPT_ERR_USAGE = 1,   /* bad arguments or preconditions */
  LIMOPT_ERR_IO = 2,      /* filesystem failures, overwrite refusals */
  LIMOPT_ERR_FORMAT = 3,  /* malformed input files */
  LIMOPT_ERR_NUMERIC = 4, /* non-finite values where finite ones are required */
  LIMOPT_ERR_INTERNAL = 5
} limopt_status;

const char* limopt_version(void);
const char* limopt_status_name(limopt_status status);
const char* limopt_last_error(void);

/* ---- optimizer handle ---------------------------------------------------
 * kind is one of "sgd", "sgdm", "lim", "adam". gamma configures sgdm (fixed
 * decay in [0,1)); beta configures lim (inverse-proportional decay, > 0);
 * both are ignored by the other kinds. The stepsize is alpha0/sqrt(k).
 */
typedef struct limopt_optimizer limopt_optimizer;

limopt_status limopt_optimizer_new(const char* kind, const double* x0, size_t dim, double alpha0,
                                   double gamma, double beta, limopt_optimizer** out);
limopt_status limopt_optimizer_step(limopt_optimizer* opt, const double* grad, size_t dim);
limopt_status limopt_optimizer_position(const limopt_optimizer* opt, double* out, size_t dim);
/* displacement applied by the most recent step */
limopt_status limopt_optimizer_last_step(const limopt_optimizer* opt, double* out, size_t dim);
long limopt_optimizer_iterations(const limopt_optimizer* opt);
void limopt_optimizer_free(limopt_optimizer* opt);

/* ---- scalar helpers ----------------------------------------------------- */
limopt_status limopt_step_size(double alpha0, long k, double* out);
/* (k/(k+1))^beta */
limopt_status limopt_decay_invprop(double beta, long k, double* out);
/* sum of squared displacement weights times M, fixed decay */
limopt_status limopt_exact_noise_variance_fixed(double gamma, double alpha0, long k, double M,
                                                double* out);
/* same, inverse-proportional decay */
limopt_status limopt_exact_noise_variance_invprop(double beta, double alpha0, long k, double M,
                                                  double* out);
limopt_status limopt_bound_thm2(double alpha0, double gamma, double M, double MV,
                                double gradnorm_sq, double L, double D, double* out);
limopt_status limopt_bound_thm3(double alpha0, double beta, double M, double MV,
                                double gradnorm_sq, double L, double D, double* out);

/* ---- commands ------------------------------------------------------------
 * Mirrors of the CLI subcommands. String fields may be NULL where noted.
 * Commands write their artifacts into out_dir and refuse to overwrite
 * existing files. When out_path is non-NULL it receives the path of the
 * written file (NUL-terminated, truncated to out_path_cap).
 */
typedef struct limopt_run_config {
  const char* problem;   /* noise | quadratic | logreg | mlp2 | mlp3 */
  const char* optimizer; /* sgd | sgdm | lim | adam */
  double alpha0;
  double gamma;
  double beta;
  long batch;
  long iters;
  unsigned long long seed;
  const char* data; /* IDX directory for logreg/mlp; NULL = synthetic blobs */
  long hidden_width;
  const char* out_dir; /* NULL = current directory */
} limopt_run_config;

void limopt_run_config_defaults(limopt_run_config* cfg);
limopt_status limopt_cmd_run(const limopt_run_config* cfg, char* out_path, size_t out_path_cap);

typedef struct limopt_variance_config {
  const char* problem;   /* noise | quadratic */
  const char* optimizer; /* sgdm | lim */
  double alpha0;
  double gamma;
  double beta;
  const long* ks;
  size_t n_ks;
  long replicas;
  unsigned long long seed;
  const char* out_dir;
} limopt_variance_config;

void limopt_variance_config_defaults(limopt_variance_config* cfg);
limopt_status limopt_cmd_variance(const limopt_variance_config* cfg, char* out_path,
                                  size_t out_path_cap);

limopt_status limopt_cmd_sweep(const char* grid_path, const limopt_run_config* base,
                               char* summary_path, size_t summary_path_cap);

limopt_status limopt_cmd_plot(const char* const* inputs, size_t n_inputs, const char* out_path,
                              int log_y);

/* Runs the self-check suite. Writes one "[PASS|FAIL] name: detail" line per
 * check into report (NUL-terminated, truncated to report_cap) and stores the
 * number of failed checks in *n_failed. corrupt_decay != 0 perturbs the decay
 * factors used by the closed-form reconstructions (a mutation hook; the
 * equivalence checks must then fail). Returns LIMOPT_OK even when checks
 * fail; inspect *n_failed.
 */
limopt_status limopt_cmd_check(double corrupt_decay, char* report, size_t report_cap,
                               int* n_failed);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LIMOPT_H */
