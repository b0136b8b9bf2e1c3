/* C interface to the panelmetrics library.
 *
 * Every fallible call returns a pm_status; on failure pm_last_error() holds a
 * message for the calling thread. Objects are opaque handles released with the
 * matching *_free function. Strings returned through char** are heap copies
 * released with pm_string_free. Names returned through const char** stay valid
 * for the lifetime of the owning handle.
 */
#ifndef PANELMETRICS_H
#define PANELMETRICS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pm_status {
  PM_OK = 0,
  PM_ERR_IO = 1,
  PM_ERR_MISSING_COLUMN,
  PM_ERR_DUPLICATE_KEY,
  PM_ERR_NON_NUMERIC_CELL,
  PM_ERR_UNBALANCED_PANEL,
  PM_ERR_BOUNDARY_MISSING,
  PM_ERR_NON_POSITIVE_VALUE,
  PM_ERR_MISSING_CELLS,
  PM_ERR_EMPTY_MATRIX,
  PM_ERR_DIMENSION_MISMATCH,
  PM_ERR_ZERO_MEAN_COLUMN,
  PM_ERR_DEGENERATE_WEIGHTS,
  PM_ERR_ALL_UNIFORM_COLUMNS,
  PM_ERR_INVALID_ARGUMENT,
  PM_ERR_ZERO_SHARE,
  PM_ERR_RANK_DEFICIENT,
  PM_ERR_TOO_FEW_OBSERVATIONS,
  PM_ERR_SINGULAR_BREAD,
  PM_ERR_TOO_SHORT_PANEL,
  PM_ERR_SINGULAR_WEIGHTING,
  PM_ERR_INSUFFICIENT_PERIODS,
  PM_ERR_EXACTLY_IDENTIFIED,
  PM_ERR_ZERO_DENOMINATOR,
  PM_ERR_ZERO_TOTAL_EFFECT,
  PM_ERR_INVALID_CONFIG,
  PM_ERR_STYLE_MISMATCH,
  PM_ERR_STAGE_FAILED,
  PM_ERR_NULL_ARGUMENT = 100,
  PM_ERR_NOT_AVAILABLE,
  PM_ERR_INTERNAL
} pm_status;

typedef struct pm_panel pm_panel;
typedef struct pm_fe_result pm_fe_result;
typedef struct pm_gmm_result pm_gmm_result;
typedef struct pm_mediation_result pm_mediation_result;

const char* pm_version(void);
const char* pm_status_name(pm_status status);
/* Message of the last failure on this thread; empty after a success. */
const char* pm_last_error(void);
void pm_string_free(char* s);

/* ---- panels ---- */
pm_status pm_panel_load_csv(const char* path, pm_panel** out);
pm_status pm_panel_parse_csv(const char* text, pm_panel** out);
pm_status pm_panel_save_csv(const pm_panel* panel, const char* path);
pm_status pm_panel_to_csv(const pm_panel* panel, char** out);
size_t pm_panel_n_entities(const pm_panel* panel);
size_t pm_panel_n_years(const pm_panel* panel);
size_t pm_panel_n_variables(const pm_panel* panel);
pm_status pm_panel_variable_name(const pm_panel* panel, size_t index, const char** name);
/* Entity-major values of one variable; missing cells are NaN. */
pm_status pm_panel_column(const pm_panel* panel, const char* name, double* values, size_t capacity);
pm_status pm_panel_log(const pm_panel* panel, const char* name, pm_panel** out);
pm_status pm_panel_interpolate(const pm_panel* panel, const char* name, pm_panel** out);
void pm_panel_free(pm_panel* panel);

/* ---- synthetic data ---- */
typedef struct pm_synth_options {
  const char* kind; /* static_fe | dynamic_ar1 | mediation | provincial */
  size_t n_entities;
  size_t n_years;
  uint64_t seed;
  const char* params; /* "k=v,k=v" or NULL */
  double fe_variance;
  double idio_variance;
  int burn_in;
  int first_year;
} pm_synth_options;

void pm_synth_options_init(pm_synth_options* opts);
pm_status pm_synth_generate(const pm_synth_options* opts, pm_panel** out);

/* ---- reports ---- */
typedef struct pm_report_options {
  const char* parens;   /* "se" (default) or "pvalues" */
  const char* language; /* "ascii", "en", "zh"; NULL reads PANELMETRICS_LANG */
  int decimals;
} pm_report_options;

void pm_report_options_init(pm_report_options* opts);

/* ---- composite index ---- */
/* indicators: "name:+,name:-,..."; weights_from may be NULL (estimate the
 * weights). out_panel receives the input panel plus the score column. Any of
 * the output pointers may be NULL. */
pm_status pm_index_build(const pm_panel* panel, const char* indicators, double beta, const char* weights_from,
                         const char* weights_column, const char* output_name, pm_panel** out_panel,
                         char** scores_csv, char** weights_csv);

/* ---- inequality ---- */
pm_status pm_theil_two_group(const double* value_totals, const double* populations, size_t groups, double* out);
pm_status pm_theil_individual(const double* values, size_t n, double* out);
pm_status pm_gap_compute(const pm_panel* panel, const char* value_urban, const char* value_rural,
                         const char* pop_urban, const char* pop_rural, const char* output_name, pm_panel** out_panel,
                         char** csv);

/* ---- fixed effects ---- */
typedef struct pm_fe_options {
  const char* dependent;
  const char* regressors; /* comma separated */
  int time_effects;
  int cluster; /* nonzero: entity-clustered covariance */
} pm_fe_options;

void pm_fe_options_init(pm_fe_options* opts);
pm_status pm_fe_run(const pm_panel* panel, const pm_fe_options* opts, pm_fe_result** out);
size_t pm_fe_n_terms(const pm_fe_result* res);
pm_status pm_fe_term(const pm_fe_result* res, size_t index, const char** name, double* coef, double* se, double* p);
size_t pm_fe_n_obs(const pm_fe_result* res);
double pm_fe_r2_within(const pm_fe_result* res);
double pm_fe_r2_adj(const pm_fe_result* res);
/* style: "table2" or "table3"; several results render side by side. */
pm_status pm_fe_report(const pm_fe_result* const* results, size_t n, const char* style,
                       const pm_report_options* opts, char** text, char** csv);
void pm_fe_result_free(pm_fe_result* res);

/* ---- system GMM ---- */
typedef struct pm_gmm_options {
  const char* dependent;
  int lags;
  const char* exogenous;     /* comma separated or NULL */
  const char* predetermined; /* comma separated or NULL */
  int min_lag;
  int max_lag; /* <= 0: all available lags */
  int collapse;
  int steps;
  int level_equation;
  int time_dummies;
} pm_gmm_options;

void pm_gmm_options_init(pm_gmm_options* opts);
pm_status pm_gmm_run(const pm_panel* panel, const pm_gmm_options* opts, pm_gmm_result** out);
size_t pm_gmm_n_terms(const pm_gmm_result* res);
pm_status pm_gmm_term(const pm_gmm_result* res, size_t index, const char** name, double* coef, double* se, double* p);
size_t pm_gmm_n_obs(const pm_gmm_result* res);
size_t pm_gmm_instrument_count(const pm_gmm_result* res);
pm_status pm_gmm_ar(const pm_gmm_result* res, int order, double* z, double* p);
pm_status pm_gmm_hansen(const pm_gmm_result* res, double* stat, int* df, double* p);
pm_status pm_gmm_sargan(const pm_gmm_result* res, double* stat, int* df, double* p);
pm_status pm_gmm_report(const pm_gmm_result* res, const pm_report_options* opts, char** text, char** csv);
void pm_gmm_result_free(pm_gmm_result* res);

/* ---- mediation ---- */
typedef struct pm_mediation_options {
  const char* treatment;
  const char* mediator;
  const char* outcome;
  const char* controls; /* comma separated or NULL */
  double alpha;
  int time_effects;
  int cluster;
} pm_mediation_options;

typedef struct pm_effects {
  double total;
  double path_a;
  double path_b;
  double direct;
  double indirect;
  double proportion; /* NaN when undefined */
  int inconsistent;  /* direct and indirect effects have opposite signs */
  double sobel_z;
  double sobel_p;
  double sobel_se;
} pm_effects;

void pm_mediation_options_init(pm_mediation_options* opts);
pm_status pm_mediation_run(const pm_panel* panel, const pm_mediation_options* opts, pm_mediation_result** out);
pm_status pm_mediation_effects(const pm_mediation_result* res, pm_effects* out);
const char* pm_mediation_classification(const pm_mediation_result* res);
pm_status pm_mediation_report(const pm_mediation_result* res, const pm_report_options* opts, char** text, char** csv);
void pm_mediation_result_free(pm_mediation_result* res);

pm_status pm_sobel(double a, double se_a, double b, double se_b, double* z, double* p, double* se);
pm_status pm_proportion_mediated(double indirect, double total, double* proportion, int* inconsistent);

/* ---- pipeline ---- */
/* Runs a config file. output_dir overrides [run] output_dir when non-NULL.
 * A failed stage returns PM_ERR_STAGE_FAILED; the manifest is still written. */
pm_status pm_run_config(const char* config_path, const char* output_dir, char** manifest_path);

#ifdef __cplusplus
}
#endif

#endif
