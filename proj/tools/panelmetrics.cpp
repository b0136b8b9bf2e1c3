// panelmetrics command-line driver. Talks to the library only through the C API.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "panelmetrics.h"

namespace fs = std::filesystem;

namespace {

/// Carries the stage tag of a failed library call up to main().
struct Failure {
  std::string stage;
  std::string message;
};

void check(pm_status s, const std::string& stage) {
  if (s != PM_OK) throw Failure{stage, pm_last_error()};
}

struct PanelDeleter {
  void operator()(pm_panel* p) const { pm_panel_free(p); }
};
using Panel = std::unique_ptr<pm_panel, PanelDeleter>;

struct FeDeleter {
  void operator()(pm_fe_result* r) const { pm_fe_result_free(r); }
};
struct GmmDeleter {
  void operator()(pm_gmm_result* r) const { pm_gmm_result_free(r); }
};
struct MedDeleter {
  void operator()(pm_mediation_result* r) const { pm_mediation_result_free(r); }
};

/// Takes ownership of a library-allocated string.
std::string take(char* s) {
  std::string out = s ? s : "";
  pm_string_free(s);
  return out;
}

void write_file(const fs::path& path, const std::string& content, const std::string& stage) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) throw Failure{stage, "cannot write " + path.string()};
}

Panel load_panel(const std::string& path, const std::vector<std::string>& logs, const std::string& stage) {
  pm_panel* raw = nullptr;
  check(pm_panel_load_csv(path.c_str(), &raw), stage);
  Panel p(raw);
  for (const auto& v : logs) {
    pm_panel* next = nullptr;
    check(pm_panel_log(p.get(), v.c_str(), &next), stage);
    p.reset(next);
  }
  return p;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

struct ReportFlags {
  std::string parens = "se";
  std::string language;  // empty: environment
  int decimals = 4;

  pm_report_options options() const {
    pm_report_options o;
    pm_report_options_init(&o);
    o.parens = parens.c_str();
    o.language = language.empty() ? nullptr : language.c_str();
    o.decimals = decimals;
    return o;
  }
};

void add_report_flags(CLI::App* app, ReportFlags& f) {
  app->add_option("--parens", f.parens, "Parenthesised value: se or pvalues")->check(CLI::IsMember({"se", "pvalues"}));
  app->add_option("--lang", f.language, "Header language: ascii, en, zh (default: PANELMETRICS_LANG)");
  app->add_option("--decimals", f.decimals, "Decimal places in the text table")->check(CLI::Range(0, 12));
}

/// Prints the text table and, with an output directory, writes <stem>.txt/.csv.
void deliver(const std::string& text, const std::string& csv, const std::string& out_dir, const std::string& stem,
             const std::string& stage) {
  std::cout << text;
  if (out_dir.empty()) return;
  write_file(fs::path(out_dir) / (stem + ".txt"), text, stage);
  write_file(fs::path(out_dir) / (stem + ".csv"), csv, stage);
}

/// Accepts "2,4", "2:4", "2:all".
void parse_window(const std::string& text, pm_gmm_options& o) {
  const auto sep = text.find_first_of(",:");
  try {
    o.min_lag = std::stoi(text.substr(0, sep));
    if (sep == std::string::npos) return;
    const auto hi = text.substr(sep + 1);
    o.max_lag = (hi == "all" || hi.empty()) ? 0 : std::stoi(hi);
  } catch (const std::exception&) {
    throw Failure{"gmm", "InvalidArgument: bad --lag-window '" + text + "'"};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panel econometrics toolkit: composite index, Theil gaps, FE, system GMM, mediation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pm_version()));

  // synth generate
  auto* synth = app.add_subcommand("synth", "Synthetic known-truth panels")->require_subcommand(1);
  auto* synth_gen = synth->add_subcommand("generate", "Write a synthetic panel CSV");
  pm_synth_options so;
  pm_synth_options_init(&so);
  std::string kind = "static_fe", params, synth_out;
  synth_gen->add_option("--kind", kind, "static_fe, dynamic_ar1, mediation or provincial")->capture_default_str();
  synth_gen->add_option("--seed", so.seed, "Master seed")->capture_default_str();
  synth_gen->add_option("--entities", so.n_entities, "Number of entities")->capture_default_str();
  synth_gen->add_option("--years", so.n_years, "Number of years")->capture_default_str();
  synth_gen->add_option("--first-year", so.first_year, "Calendar year of the first period")->capture_default_str();
  synth_gen->add_option("--burn-in", so.burn_in, "Discarded periods for dynamic_ar1")->capture_default_str();
  synth_gen->add_option("--fe-variance", so.fe_variance, "Fixed-effect variance")->capture_default_str();
  synth_gen->add_option("--idio-variance", so.idio_variance, "Idiosyncratic variance")->capture_default_str();
  synth_gen->add_option("--params", params, "Model parameters as k=v,k=v");
  synth_gen->add_option("--out", synth_out, "Output CSV path (default: stdout)");

  // index build
  auto* index = app.add_subcommand("index", "CRITIC-entropy composite index")->require_subcommand(1);
  auto* index_build = index->add_subcommand("build", "Score a panel of indicators");
  std::string index_panel, indicators, weights_from, weights_column = "combined", index_name = "Dig", index_out;
  double beta = 0.5;
  index_build->add_option("--panel", index_panel, "Indicator CSV (entity,year,...)")->required();
  index_build->add_option("--indicators", indicators, "name:+|- list (default: every column, positive)");
  index_build->add_option("--beta", beta, "CRITIC share of the combined weight")->capture_default_str();
  index_build->add_option("--weights-from", weights_from, "Score with weights from this CSV instead");
  index_build->add_option("--weights-column", weights_column, "Weight column in --weights-from")->capture_default_str();
  index_build->add_option("--name", index_name, "Score column name")->capture_default_str();
  index_build->add_option("--out", index_out, "Output directory for index_scores.csv and index_weights.csv")->required();

  // gap compute
  auto* gap = app.add_subcommand("gap", "Two-group Theil gaps")->require_subcommand(1);
  auto* gap_compute = gap->add_subcommand("compute", "Urban/rural Theil index per entity-year");
  std::string gap_panel, vu, vr, pu, pr, gap_name = "gap", gap_out;
  gap_compute->add_option("--panel", gap_panel, "Panel CSV")->required();
  gap_compute->add_option("--value-urban", vu, "Urban per-capita value column")->required();
  gap_compute->add_option("--value-rural", vr, "Rural per-capita value column")->required();
  gap_compute->add_option("--pop-urban", pu, "Urban population column")->required();
  gap_compute->add_option("--pop-rural", pr, "Rural population column")->required();
  gap_compute->add_option("--name", gap_name, "Output column name")->capture_default_str();
  gap_compute->add_option("--out", gap_out, "Output CSV path")->required();

  // fe run
  auto* fe = app.add_subcommand("fe", "Fixed-effects regression")->require_subcommand(1);
  auto* fe_run = fe->add_subcommand("run", "Estimate and print a Table-2 style report");
  std::string fe_panel, fe_dep, fe_out, fe_cluster = "entity", fe_style = "table2";
  std::vector<std::string> fe_regs, fe_logs, fe_robust;
  bool fe_time = false;
  ReportFlags fe_report;
  fe_run->add_option("--panel", fe_panel, "Panel CSV")->required();
  fe_run->add_option("--dep", fe_dep, "Dependent variable")->required();
  fe_run->add_option("--regressors", fe_regs, "Regressors")->required()->delimiter(',');
  fe_run->add_option("--cluster", fe_cluster, "entity or none")->check(CLI::IsMember({"entity", "none"}));
  fe_run->add_flag("--time-effects", fe_time, "Add year effects");
  fe_run->add_option("--robust-dep", fe_robust, "Extra dependents for a Table-3 style robustness report")->delimiter(',');
  fe_run->add_option("--log", fe_logs, "Variables to log-transform first (adds ln_<name>)")->delimiter(',');
  fe_run->add_option("--out", fe_out, "Directory for fe_table2/3 .txt and .csv");
  add_report_flags(fe_run, fe_report);

  // gmm run
  auto* gmm = app.add_subcommand("gmm", "Blundell-Bond system GMM")->require_subcommand(1);
  auto* gmm_run = gmm->add_subcommand("run", "Estimate and print a Table-4 style report");
  pm_gmm_options go;
  pm_gmm_options_init(&go);
  std::string gmm_panel, gmm_dep, gmm_out, window = "2,4";
  std::vector<std::string> gmm_exog, gmm_pre, gmm_logs;
  bool no_collapse = false, difference = false, time_dummies = false;
  ReportFlags gmm_report;
  gmm_run->add_option("--panel", gmm_panel, "Panel CSV")->required();
  gmm_run->add_option("--dep", gmm_dep, "Dependent variable")->required();
  gmm_run->add_option("--lags", go.lags, "Lags of the dependent variable")->capture_default_str();
  gmm_run->add_option("--exog", gmm_exog, "Strictly exogenous regressors")->delimiter(',');
  gmm_run->add_option("--predetermined", gmm_pre, "Predetermined regressors")->delimiter(',');
  gmm_run->add_option("--lag-window", window, "Instrument lags min,max (max may be 'all')")->capture_default_str();
  gmm_run->add_flag("--collapse", "Collapse the instrument matrix (default)");
  gmm_run->add_flag("--no-collapse", no_collapse, "One instrument column per period and lag");
  gmm_run->add_option("--steps", go.steps, "1 or 2")->check(CLI::IsMember({1, 2}))->capture_default_str();
  gmm_run->add_flag("--difference", difference, "Drop the level equation (difference GMM)");
  gmm_run->add_flag("--time-dummies", time_dummies, "Add year dummies");
  gmm_run->add_option("--log", gmm_logs, "Variables to log-transform first (adds ln_<name>)")->delimiter(',');
  gmm_run->add_option("--out", gmm_out, "Directory for gmm_table4 .txt and .csv");
  add_report_flags(gmm_run, gmm_report);

  // mediate run
  auto* med = app.add_subcommand("mediate", "Stepwise mediation with Sobel test")->require_subcommand(1);
  auto* med_run = med->add_subcommand("run", "Estimate and print a Table-5 style report");
  pm_mediation_options mo;
  pm_mediation_options_init(&mo);
  std::string med_panel, treatment, mediator, outcome, med_out, med_cluster = "entity";
  std::vector<std::string> controls, med_logs;
  bool med_time = false;
  ReportFlags med_report;
  med_run->add_option("--panel", med_panel, "Panel CSV")->required();
  med_run->add_option("--treatment", treatment, "Treatment variable")->required();
  med_run->add_option("--mediator", mediator, "Mediator variable")->required();
  med_run->add_option("--outcome", outcome, "Outcome variable")->required();
  med_run->add_option("--controls", controls, "Control variables")->delimiter(',');
  med_run->add_option("--alpha", mo.alpha, "Significance level")->capture_default_str();
  med_run->add_option("--cluster", med_cluster, "entity or none")->check(CLI::IsMember({"entity", "none"}));
  med_run->add_flag("--time-effects", med_time, "Add year effects");
  med_run->add_option("--log", med_logs, "Variables to log-transform first (adds ln_<name>)")->delimiter(',');
  med_run->add_option("--out", med_out, "Directory for mediation_table5 .txt and .csv");
  add_report_flags(med_run, med_report);

  // run
  auto* run = app.add_subcommand("run", "Run a pipeline config");
  std::string config, run_out;
  run->add_option("--config", config, "Pipeline config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (overrides [run] output_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_gen->parsed()) {
      so.kind = kind.c_str();
      so.params = params.empty() ? nullptr : params.c_str();
      pm_panel* raw = nullptr;
      check(pm_synth_generate(&so, &raw), "synth");
      Panel p(raw);
      char* text = nullptr;
      check(pm_panel_to_csv(p.get(), &text), "synth");
      const auto csv = take(text);
      if (synth_out.empty()) std::cout << csv;
      else write_file(synth_out, csv, "synth");
    } else if (index_build->parsed()) {
      Panel p = load_panel(index_panel, {}, "index");
      if (indicators.empty()) {
        for (size_t i = 0; i < pm_panel_n_variables(p.get()); ++i) {
          const char* name = nullptr;
          check(pm_panel_variable_name(p.get(), i, &name), "index");
          indicators += (indicators.empty() ? "" : ",") + std::string(name) + ":+";
        }
      }
      char* scores = nullptr;
      char* weights = nullptr;
      check(pm_index_build(p.get(), indicators.c_str(), beta, weights_from.empty() ? nullptr : weights_from.c_str(),
                           weights_column.c_str(), index_name.c_str(), nullptr, &scores, &weights),
            "index");
      const auto s = take(scores);
      const auto w = take(weights);
      write_file(fs::path(index_out) / "index_scores.csv", s, "index");
      write_file(fs::path(index_out) / "index_weights.csv", w, "index");
      std::cout << w;
    } else if (gap_compute->parsed()) {
      Panel p = load_panel(gap_panel, {}, "gap");
      char* csv = nullptr;
      check(pm_gap_compute(p.get(), vu.c_str(), vr.c_str(), pu.c_str(), pr.c_str(), gap_name.c_str(), nullptr, &csv),
            "gap");
      write_file(gap_out, take(csv), "gap");
    } else if (fe_run->parsed()) {
      Panel p = load_panel(fe_panel, fe_logs, "fe");
      const auto regs = join(fe_regs);
      pm_fe_options fo;
      pm_fe_options_init(&fo);
      fo.regressors = regs.c_str();
      fo.time_effects = fe_time;
      fo.cluster = fe_cluster == "entity";
      auto estimate = [&](const std::string& dep) {
        fo.dependent = dep.c_str();
        pm_fe_result* r = nullptr;
        check(pm_fe_run(p.get(), &fo, &r), "fe");
        return std::unique_ptr<pm_fe_result, FeDeleter>(r);
      };
      const auto opts = fe_report.options();
      auto main_res = estimate(fe_dep);
      const pm_fe_result* one[] = {main_res.get()};
      char* text = nullptr;
      char* csv = nullptr;
      check(pm_fe_report(one, 1, "table2", &opts, &text, &csv), "fe");
      deliver(take(text), take(csv), fe_out, "fe_table2", "fe");
      if (!fe_robust.empty()) {
        std::vector<std::unique_ptr<pm_fe_result, FeDeleter>> owned;
        std::vector<const pm_fe_result*> cols;
        for (const auto& dep : fe_robust) {
          owned.push_back(estimate(dep));
          cols.push_back(owned.back().get());
        }
        check(pm_fe_report(cols.data(), cols.size(), "table3", &opts, &text, &csv), "fe");
        std::cout << '\n';
        deliver(take(text), take(csv), fe_out, "fe_table3", "fe");
      }
    } else if (gmm_run->parsed()) {
      Panel p = load_panel(gmm_panel, gmm_logs, "gmm");
      const auto exog = join(gmm_exog);
      const auto pre = join(gmm_pre);
      go.dependent = gmm_dep.c_str();
      go.exogenous = exog.c_str();
      go.predetermined = pre.c_str();
      go.collapse = !no_collapse;
      go.level_equation = !difference;
      go.time_dummies = time_dummies;
      parse_window(window, go);
      pm_gmm_result* raw = nullptr;
      check(pm_gmm_run(p.get(), &go, &raw), "gmm");
      std::unique_ptr<pm_gmm_result, GmmDeleter> r(raw);
      const auto opts = gmm_report.options();
      char* text = nullptr;
      char* csv = nullptr;
      check(pm_gmm_report(r.get(), &opts, &text, &csv), "gmm");
      deliver(take(text), take(csv), gmm_out, "gmm_table4", "gmm");
    } else if (med_run->parsed()) {
      Panel p = load_panel(med_panel, med_logs, "mediate");
      const auto ctrl = join(controls);
      mo.treatment = treatment.c_str();
      mo.mediator = mediator.c_str();
      mo.outcome = outcome.c_str();
      mo.controls = ctrl.c_str();
      mo.time_effects = med_time;
      mo.cluster = med_cluster == "entity";
      pm_mediation_result* raw = nullptr;
      check(pm_mediation_run(p.get(), &mo, &raw), "mediate");
      std::unique_ptr<pm_mediation_result, MedDeleter> r(raw);
      const auto opts = med_report.options();
      char* text = nullptr;
      char* csv = nullptr;
      check(pm_mediation_report(r.get(), &opts, &text, &csv), "mediate");
      deliver(take(text), take(csv), med_out, "mediation_table5", "mediate");
    } else if (run->parsed()) {
      char* manifest = nullptr;
      const pm_status s = pm_run_config(config.c_str(), run_out.empty() ? nullptr : run_out.c_str(), &manifest);
      const std::string manifest_path = take(manifest);
      if (s != PM_OK) {
        // Stage failures already carry their stage name.
        std::cerr << "panelmetrics: run: " << pm_last_error() << '\n';
        if (!manifest_path.empty()) std::cerr << "manifest: " << manifest_path << '\n';
        return 1;
      }
      std::cout << "manifest: " << manifest_path << '\n';
    }
  } catch (const Failure& f) {
    std::cerr << "panelmetrics: " << f.stage << ": " << f.message << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "panelmetrics: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
