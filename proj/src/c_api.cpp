#include "panelmetrics.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "panelmetrics/composite_index.hpp"
#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"
#include "panelmetrics/fixed_effects.hpp"
#include "panelmetrics/inequality.hpp"
#include "panelmetrics/mediation.hpp"
#include "panelmetrics/panel.hpp"
#include "panelmetrics/pipeline.hpp"
#include "panelmetrics/report.hpp"
#include "panelmetrics/synthetic.hpp"
#include "panelmetrics/system_gmm.hpp"

struct pm_panel {
  pm::PanelDataset data;
};
struct pm_fe_result {
  pm::RegressionResult res;
};
struct pm_gmm_result {
  pm::GmmResult res;
};
struct pm_mediation_result {
  pm::MediationResult res;
};

namespace {

thread_local std::string g_last_error;

pm_status fail(pm_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

/// Runs `body`, translating exceptions into status codes.
template <class F>
pm_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const pm::Error& e) {
    return fail(static_cast<pm_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PM_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** dst, const std::string& s) {
  if (dst) *dst = dup(s);
}

std::string str(const char* s) { return s ? std::string(s) : std::string(); }

std::vector<std::string> list(const char* s) { return pm::csv::split_list(str(s)); }

#define PM_REQUIRE(ptr) \
  if (!(ptr)) return fail(PM_ERR_NULL_ARGUMENT, std::string(__func__) + ": " #ptr " is NULL")

pm::ReportOptions report_options(const pm_report_options* opts) {
  pm::ReportOptions o;
  o.language = pm::language_from_env();
  if (!opts) return o;
  if (opts->parens) o.parens = pm::parse_paren_mode(opts->parens);
  if (opts->language) o.language = pm::parse_language(opts->language);
  if (opts->decimals < 0 || opts->decimals > 12)
    throw pm::Error(pm::ErrorCode::InvalidArgument, "decimals must lie in [0, 12]");
  o.decimals = opts->decimals;
  return o;
}

pm_status emit(const pm::Report& r, char** text, char** csv) {
  char* t = text ? dup(r.text) : nullptr;
  try {
    put(csv, r.csv);
  } catch (...) {
    std::free(t);
    throw;
  }
  if (text) *text = t;
  return PM_OK;
}

pm_status term(const std::vector<std::string>& terms, const Eigen::VectorXd& b, const Eigen::VectorXd& se,
               const Eigen::VectorXd& p, size_t index, const char** name, double* coef, double* se_out,
               double* p_out) {
  if (index >= terms.size()) return fail(PM_ERR_INVALID_ARGUMENT, "term index out of range");
  const auto i = static_cast<Eigen::Index>(index);
  if (name) *name = terms[index].c_str();
  if (coef) *coef = b(i);
  if (se_out) *se_out = se(i);
  if (p_out) *p_out = p(i);
  return PM_OK;
}

}  // namespace

extern "C" {

const char* pm_version(void) { return "1.0.0"; }

const char* pm_status_name(pm_status status) {
  switch (status) {
    case PM_OK: return "Ok";
    case PM_ERR_NULL_ARGUMENT: return "NullArgument";
    case PM_ERR_NOT_AVAILABLE: return "NotAvailable";
    case PM_ERR_INTERNAL: return "Internal";
    default: return pm::error_code_name(static_cast<pm::ErrorCode>(static_cast<int>(status)));
  }
}

const char* pm_last_error(void) { return g_last_error.c_str(); }

void pm_string_free(char* s) { std::free(s); }

pm_status pm_panel_load_csv(const char* path, pm_panel** out) {
  return guarded([&] {
    PM_REQUIRE(path);
    PM_REQUIRE(out);
    *out = new pm_panel{pm::load_panel_csv(path)};
    return PM_OK;
  });
}

pm_status pm_panel_parse_csv(const char* text, pm_panel** out) {
  return guarded([&] {
    PM_REQUIRE(text);
    PM_REQUIRE(out);
    *out = new pm_panel{pm::parse_panel_csv(text)};
    return PM_OK;
  });
}

pm_status pm_panel_save_csv(const pm_panel* panel, const char* path) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(path);
    pm::write_panel_csv(panel->data, path);
    return PM_OK;
  });
}

pm_status pm_panel_to_csv(const pm_panel* panel, char** out) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(out);
    *out = dup(pm::panel_to_csv(panel->data));
    return PM_OK;
  });
}

size_t pm_panel_n_entities(const pm_panel* panel) { return panel ? panel->data.n_entities() : 0; }
size_t pm_panel_n_years(const pm_panel* panel) { return panel ? panel->data.n_years() : 0; }
size_t pm_panel_n_variables(const pm_panel* panel) { return panel ? panel->data.n_variables() : 0; }

pm_status pm_panel_variable_name(const pm_panel* panel, size_t index, const char** name) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(name);
    if (index >= panel->data.n_variables()) return fail(PM_ERR_INVALID_ARGUMENT, "variable index out of range");
    *name = panel->data.variables()[index].c_str();
    return PM_OK;
  });
}

pm_status pm_panel_column(const pm_panel* panel, const char* name, double* values, size_t capacity) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(name);
    PM_REQUIRE(values);
    const auto col = panel->data.raw_column(name);
    if (capacity < col.size())
      return fail(PM_ERR_DIMENSION_MISMATCH, "buffer holds " + std::to_string(capacity) + " values, column has " +
                                                 std::to_string(col.size()));
    std::copy(col.begin(), col.end(), values);
    return PM_OK;
  });
}

pm_status pm_panel_log(const pm_panel* panel, const char* name, pm_panel** out) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(name);
    PM_REQUIRE(out);
    *out = new pm_panel{pm::apply_log(panel->data, name)};
    return PM_OK;
  });
}

pm_status pm_panel_interpolate(const pm_panel* panel, const char* name, pm_panel** out) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(name);
    PM_REQUIRE(out);
    *out = new pm_panel{pm::interpolate_missing(panel->data, name)};
    return PM_OK;
  });
}

void pm_panel_free(pm_panel* panel) { delete panel; }

void pm_synth_options_init(pm_synth_options* opts) {
  if (!opts) return;
  const pm::DgpConfig d;
  opts->kind = "static_fe";
  opts->n_entities = d.n_entities;
  opts->n_years = d.n_years;
  opts->seed = d.seed;
  opts->params = nullptr;
  opts->fe_variance = d.fe_variance;
  opts->idio_variance = d.idio_variance;
  opts->burn_in = d.burn_in;
  opts->first_year = d.first_year;
}

pm_status pm_synth_generate(const pm_synth_options* opts, pm_panel** out) {
  return guarded([&] {
    PM_REQUIRE(opts);
    PM_REQUIRE(out);
    pm::DgpConfig d;
    d.kind = pm::parse_dgp_kind(str(opts->kind));
    d.n_entities = opts->n_entities;
    d.n_years = opts->n_years;
    d.seed = opts->seed;
    d.params = pm::parse_params(str(opts->params));
    d.fe_variance = opts->fe_variance;
    d.idio_variance = opts->idio_variance;
    d.burn_in = opts->burn_in;
    d.first_year = opts->first_year;
    *out = new pm_panel{pm::generate(d).data};
    return PM_OK;
  });
}

void pm_report_options_init(pm_report_options* opts) {
  if (!opts) return;
  opts->parens = "se";
  opts->language = nullptr;
  opts->decimals = 4;
}

pm_status pm_index_build(const pm_panel* panel, const char* indicators, double beta, const char* weights_from,
                         const char* weights_column, const char* output_name, pm_panel** out_panel,
                         char** scores_csv, char** weights_csv) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(indicators);
    std::vector<pm::VariableSpec> specs;
    for (const auto& item : list(indicators)) {
      pm::VariableSpec v;
      const auto colon = item.find(':');
      v.name = pm::csv::trim(item.substr(0, colon));
      if (colon != std::string::npos) v.direction = pm::parse_direction(pm::csv::trim(item.substr(colon + 1)));
      specs.push_back(v);
    }
    const std::string name = output_name && *output_name ? output_name : "Dig";
    const auto raw = pm::indicator_matrix(panel->data, specs);
    pm::IndexResult r;
    if (weights_from && *weights_from) {
      const auto [names, w] =
          pm::load_weights_csv(weights_from, weights_column && *weights_column ? weights_column : "combined");
      r = pm::score_with_weights(raw, names, w);
    } else {
      r = pm::build_index(raw, beta);
    }
    const std::string scores = pm::emit_surface_csv(r.normalized.rows, r.scores, name);
    const std::string weights = pm::weights_to_csv(r.weights);
    auto joined = std::make_unique<pm_panel>(pm_panel{pm::join_scores(panel->data, r, name)});
    char* s = scores_csv ? dup(scores) : nullptr;
    char* w = nullptr;
    try {
      if (weights_csv) w = dup(weights);
    } catch (...) {
      std::free(s);
      throw;
    }
    if (scores_csv) *scores_csv = s;
    if (weights_csv) *weights_csv = w;
    if (out_panel) *out_panel = joined.release();
    return PM_OK;
  });
}

pm_status pm_theil_two_group(const double* value_totals, const double* populations, size_t groups, double* out) {
  return guarded([&] {
    PM_REQUIRE(value_totals);
    PM_REQUIRE(populations);
    PM_REQUIRE(out);
    const auto g = pm::GroupShares::from_totals({value_totals, groups}, {populations, groups});
    *out = pm::theil_two_group(g);
    return PM_OK;
  });
}

pm_status pm_theil_individual(const double* values, size_t n, double* out) {
  return guarded([&] {
    PM_REQUIRE(values);
    PM_REQUIRE(out);
    *out = pm::theil_individual({values, n});
    return PM_OK;
  });
}

pm_status pm_gap_compute(const pm_panel* panel, const char* value_urban, const char* value_rural,
                         const char* pop_urban, const char* pop_rural, const char* output_name, pm_panel** out_panel,
                         char** csv) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(value_urban);
    PM_REQUIRE(value_rural);
    PM_REQUIRE(pop_urban);
    PM_REQUIRE(pop_rural);
    const std::string name = output_name && *output_name ? output_name : "gap";
    const auto series = pm::gap_series(panel->data, {value_urban, value_rural, pop_urban, pop_rural});
    auto joined = std::make_unique<pm_panel>(pm_panel{panel->data.with_column(name, series)});
    put(csv, pm::panel_to_csv(joined->data.select({name})));
    if (out_panel) *out_panel = joined.release();
    return PM_OK;
  });
}

void pm_fe_options_init(pm_fe_options* opts) {
  if (!opts) return;
  opts->dependent = nullptr;
  opts->regressors = nullptr;
  opts->time_effects = 0;
  opts->cluster = 1;
}

pm_status pm_fe_run(const pm_panel* panel, const pm_fe_options* opts, pm_fe_result** out) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(opts);
    PM_REQUIRE(opts->dependent);
    PM_REQUIRE(out);
    pm::ModelSpec spec;
    spec.dependent = opts->dependent;
    spec.regressors = list(opts->regressors);
    spec.time_effects = opts->time_effects != 0;
    spec.vcov = opts->cluster ? pm::VcovKind::ClusterEntity : pm::VcovKind::Classical;
    *out = new pm_fe_result{pm::fe_estimate(panel->data, spec)};
    return PM_OK;
  });
}

size_t pm_fe_n_terms(const pm_fe_result* res) { return res ? res->res.terms.size() : 0; }

pm_status pm_fe_term(const pm_fe_result* res, size_t index, const char** name, double* coef, double* se, double* p) {
  return guarded([&] {
    PM_REQUIRE(res);
    const auto& r = res->res;
    return term(r.terms, r.coefficients, r.std_errors, r.p_values, index, name, coef, se, p);
  });
}

size_t pm_fe_n_obs(const pm_fe_result* res) { return res ? res->res.n_obs : 0; }
double pm_fe_r2_within(const pm_fe_result* res) { return res ? res->res.r2_within : std::nan(""); }
double pm_fe_r2_adj(const pm_fe_result* res) { return res ? res->res.r2_adj : std::nan(""); }

pm_status pm_fe_report(const pm_fe_result* const* results, size_t n, const char* style,
                       const pm_report_options* opts, char** text, char** csv) {
  return guarded([&] {
    PM_REQUIRE(results);
    PM_REQUIRE(style);
    std::vector<pm::RegressionResult> cols;
    for (size_t i = 0; i < n; ++i) {
      PM_REQUIRE(results[i]);
      cols.push_back(results[i]->res);
    }
    return emit(pm::emit_fe_report(cols, pm::parse_report_style(style), report_options(opts)), text, csv);
  });
}

void pm_fe_result_free(pm_fe_result* res) { delete res; }

void pm_gmm_options_init(pm_gmm_options* opts) {
  if (!opts) return;
  const pm::DynamicModelSpec d;
  opts->dependent = nullptr;
  opts->lags = d.lag_order;
  opts->exogenous = nullptr;
  opts->predetermined = nullptr;
  opts->min_lag = d.min_lag;
  opts->max_lag = d.max_lag;
  opts->collapse = d.collapse;
  opts->steps = d.steps;
  opts->level_equation = d.level_equation;
  opts->time_dummies = d.time_dummies;
}

pm_status pm_gmm_run(const pm_panel* panel, const pm_gmm_options* opts, pm_gmm_result** out) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(opts);
    PM_REQUIRE(opts->dependent);
    PM_REQUIRE(out);
    pm::DynamicModelSpec spec;
    spec.dependent = opts->dependent;
    spec.lag_order = opts->lags;
    spec.exogenous = list(opts->exogenous);
    spec.predetermined = list(opts->predetermined);
    spec.min_lag = opts->min_lag;
    spec.max_lag = opts->max_lag;
    spec.collapse = opts->collapse != 0;
    spec.steps = opts->steps;
    spec.level_equation = opts->level_equation != 0;
    spec.time_dummies = opts->time_dummies != 0;
    *out = new pm_gmm_result{pm::system_gmm_estimate(panel->data, spec)};
    return PM_OK;
  });
}

size_t pm_gmm_n_terms(const pm_gmm_result* res) { return res ? res->res.terms.size() : 0; }

pm_status pm_gmm_term(const pm_gmm_result* res, size_t index, const char** name, double* coef, double* se, double* p) {
  return guarded([&] {
    PM_REQUIRE(res);
    const auto& r = res->res;
    return term(r.terms, r.coefficients, r.std_errors, r.p_values, index, name, coef, se, p);
  });
}

size_t pm_gmm_n_obs(const pm_gmm_result* res) { return res ? res->res.n_obs : 0; }
size_t pm_gmm_instrument_count(const pm_gmm_result* res) { return res ? res->res.instrument_count : 0; }

pm_status pm_gmm_ar(const pm_gmm_result* res, int order, double* z, double* p) {
  return guarded([&] {
    PM_REQUIRE(res);
    const auto& r = res->res;
    std::optional<pm::ZTest> t;
    if (order == 1) t = r.ar1;
    else if (order == 2) t = r.ar2;
    else t = pm::ar_test(r, order);
    if (!t) return fail(PM_ERR_NOT_AVAILABLE, "AR(" + std::to_string(order) + ") test was not computed");
    if (z) *z = t->z;
    if (p) *p = t->p;
    return PM_OK;
  });
}

namespace {
pm_status overid(const std::optional<pm::OverIdTest>& t, const char* what, double* stat, int* df, double* p) {
  if (!t) return fail(PM_ERR_NOT_AVAILABLE, std::string(what) + " test was not computed");
  if (stat) *stat = t->statistic;
  if (df) *df = t->df;
  if (p) *p = t->p;
  return PM_OK;
}
}  // namespace

pm_status pm_gmm_hansen(const pm_gmm_result* res, double* stat, int* df, double* p) {
  return guarded([&] {
    PM_REQUIRE(res);
    return overid(pm::hansen_test(res->res), "Hansen", stat, df, p);
  });
}

pm_status pm_gmm_sargan(const pm_gmm_result* res, double* stat, int* df, double* p) {
  return guarded([&] {
    PM_REQUIRE(res);
    return overid(res->res.sargan, "Sargan", stat, df, p);
  });
}

pm_status pm_gmm_report(const pm_gmm_result* res, const pm_report_options* opts, char** text, char** csv) {
  return guarded([&] {
    PM_REQUIRE(res);
    return emit(pm::emit_report(res->res, pm::ReportStyle::Table4, report_options(opts)), text, csv);
  });
}

void pm_gmm_result_free(pm_gmm_result* res) { delete res; }

void pm_mediation_options_init(pm_mediation_options* opts) {
  if (!opts) return;
  opts->treatment = nullptr;
  opts->mediator = nullptr;
  opts->outcome = nullptr;
  opts->controls = nullptr;
  opts->alpha = 0.05;
  opts->time_effects = 0;
  opts->cluster = 1;
}

pm_status pm_mediation_run(const pm_panel* panel, const pm_mediation_options* opts, pm_mediation_result** out) {
  return guarded([&] {
    PM_REQUIRE(panel);
    PM_REQUIRE(opts);
    PM_REQUIRE(opts->treatment);
    PM_REQUIRE(opts->mediator);
    PM_REQUIRE(opts->outcome);
    PM_REQUIRE(out);
    pm::MediationSpec spec;
    spec.treatment = opts->treatment;
    spec.mediator = opts->mediator;
    spec.outcome = opts->outcome;
    spec.controls = list(opts->controls);
    spec.alpha = opts->alpha;
    spec.estimator.time_effects = opts->time_effects != 0;
    spec.estimator.vcov = opts->cluster ? pm::VcovKind::ClusterEntity : pm::VcovKind::Classical;
    *out = new pm_mediation_result{pm::mediation_run(panel->data, spec)};
    return PM_OK;
  });
}

pm_status pm_mediation_effects(const pm_mediation_result* res, pm_effects* out) {
  return guarded([&] {
    PM_REQUIRE(res);
    PM_REQUIRE(out);
    const auto& m = res->res;
    out->total = m.total_effect;
    out->path_a = m.path_a;
    out->path_b = m.path_b;
    out->direct = m.direct_effect;
    out->indirect = m.indirect_effect;
    out->proportion = m.proportion ? m.proportion->value : std::nan("");
    out->inconsistent = m.proportion && m.proportion->inconsistent;
    out->sobel_z = m.sobel.z;
    out->sobel_p = m.sobel.p;
    out->sobel_se = m.sobel.se;
    return PM_OK;
  });
}

const char* pm_mediation_classification(const pm_mediation_result* res) {
  return res ? pm::to_string(res->res.classification) : "";
}

pm_status pm_mediation_report(const pm_mediation_result* res, const pm_report_options* opts, char** text, char** csv) {
  return guarded([&] {
    PM_REQUIRE(res);
    return emit(pm::emit_report(res->res, pm::ReportStyle::Table5, report_options(opts)), text, csv);
  });
}

void pm_mediation_result_free(pm_mediation_result* res) { delete res; }

pm_status pm_sobel(double a, double se_a, double b, double se_b, double* z, double* p, double* se) {
  return guarded([&] {
    const auto s = pm::sobel_test(a, se_a, b, se_b);
    if (z) *z = s.z;
    if (p) *p = s.p;
    if (se) *se = s.se;
    return PM_OK;
  });
}

pm_status pm_proportion_mediated(double indirect, double total, double* proportion, int* inconsistent) {
  return guarded([&] {
    const auto r = pm::proportion_mediated(indirect, 1.0, total);
    if (proportion) *proportion = r.value;
    if (inconsistent) *inconsistent = r.inconsistent;
    return PM_OK;
  });
}

pm_status pm_run_config(const char* config_path, const char* output_dir, char** manifest_path) {
  return guarded([&] {
    PM_REQUIRE(config_path);
    auto cfg = pm::load_run_config(config_path);
    if (output_dir && *output_dir) cfg.output_dir = output_dir;
    const auto summary = pm::run_pipeline(cfg);
    put(manifest_path, summary.manifest_path);
    if (!summary.ok()) return fail(PM_ERR_STAGE_FAILED, "StageFailed: " + summary.first_error());
    return PM_OK;
  });
}

}  // extern "C"
