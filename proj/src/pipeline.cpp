#include "panelmetrics/pipeline.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "panelmetrics/composite_index.hpp"
#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"

namespace pm {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

[[noreturn]] void config_error(const std::string& source, const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, source + ": " + msg);
}

/// Key/value view of one section that remembers which keys were consumed.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name, std::string source)
      : tree_(tree), name_(std::move(name)), source_(std::move(source)) {}

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto child = tree_->get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return csv::trim(child->data());
  }

  std::string str(const std::string& key, const std::string& fallback = {}) { return get(key).value_or(fallback); }

  std::string required(const std::string& key) {
    auto v = get(key);
    if (!v || v->empty()) fail("missing required key '" + key + "'");
    return *v;
  }

  std::vector<std::string> list(const std::string& key) { return csv::split_list(str(key)); }

  bool flag(const std::string& key, bool fallback) {
    auto v = get(key);
    if (!v || v->empty()) return fallback;
    if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
    fail("key '" + key + "' expects true/false, got '" + *v + "'");
  }

  double number(const std::string& key, double fallback) {
    auto v = get(key);
    if (!v || v->empty()) return fallback;
    auto d = csv::parse_double(*v);
    if (!d) fail("key '" + key + "' expects a number, got '" + *v + "'");
    return *d;
  }

  long long integer(const std::string& key, long long fallback) {
    const double d = number(key, static_cast<double>(fallback));
    if (d != static_cast<double>(static_cast<long long>(d))) fail("key '" + key + "' expects an integer");
    return static_cast<long long>(d);
  }

  /// Every key of the section; used for free-form sections.
  std::vector<std::pair<std::string, std::string>> items() {
    std::vector<std::pair<std::string, std::string>> out;
    if (!tree_) return out;
    for (const auto& [k, v] : *tree_) {
      used_.insert(k);
      out.emplace_back(k, csv::trim(v.data()));
    }
    return out;
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_)
      if (!used_.count(k)) fail("unknown key '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const { config_error(source_, "[" + name_ + "] " + msg); }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::string source_;
  std::set<std::string> used_;
};

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(base) / p).lexically_normal().string();
}

VariableSpec parse_indicator(const std::string& item, Section& sec) {
  VariableSpec v;
  v.role = Role::Raw;
  const auto colon = item.find(':');
  v.name = csv::trim(item.substr(0, colon));
  if (v.name.empty()) sec.fail("empty indicator name");
  if (colon != std::string::npos) {
    try {
      v.direction = parse_direction(csv::trim(item.substr(colon + 1)));
    } catch (const Error& e) {
      sec.fail(e.what());
    }
  }
  return v;
}

void set_estimator(ModelSpec& spec, Section& sec) {
  spec.time_effects = sec.flag("time_effects", false);
  spec.vcov = sec.flag("cluster", true) ? VcovKind::ClusterEntity : VcovKind::Classical;
}

}  // namespace

const char* to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Ok: return "ok";
    case StageStatus::Failed: return "failed";
    case StageStatus::Skipped: return "skipped";
  }
  return "?";
}

RunConfig parse_run_config(const std::string& text, const std::string& source, const std::string& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(source, "line " + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::set<std::string> known{"run", "synth", "input", "schema", "index", "gap", "ratio", "fe", "gmm", "mediation"};
  for (const auto& [name, sub] : tree) {
    if (!known.count(name)) config_error(source, "unknown section [" + name + "]");
    if (!sub.data().empty()) config_error(source, "key '" + name + "' outside any section");
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name, source);
  };

  RunConfig cfg;
  cfg.source = source;
  cfg.base_dir = base_dir;

  Section run = section("run");
  cfg.output_dir = resolve(base_dir, run.str("output_dir", "panelmetrics_out"));
  try {
    cfg.report.parens = parse_paren_mode(run.str("parens", "se"));
    cfg.report.language = parse_language(run.str("language", ""));
  } catch (const Error& e) {
    run.fail(e.what());
  }
  cfg.report.decimals = static_cast<int>(run.integer("decimals", 4));
  if (cfg.report.decimals < 0 || cfg.report.decimals > 12) run.fail("decimals must lie in [0, 12]");
  run.reject_unknown();

  Section synth = section("synth");
  if (synth.present()) {
    DgpConfig d;
    try {
      d.kind = parse_dgp_kind(synth.str("kind", "provincial"));
      d.params = parse_params(synth.str("params"));
    } catch (const Error& e) {
      synth.fail(e.what());
    }
    const auto entities = synth.integer("entities", 30);
    const auto years = synth.integer("years", 10);
    const auto seed = synth.integer("seed", 1);
    if (entities < 1 || years < 1) synth.fail("entities and years must be positive");
    if (seed < 0) synth.fail("seed must be non-negative");
    d.n_entities = static_cast<std::size_t>(entities);
    d.n_years = static_cast<std::size_t>(years);
    d.seed = static_cast<std::uint64_t>(seed);
    d.fe_variance = synth.number("fe_variance", d.fe_variance);
    d.idio_variance = synth.number("idio_variance", d.idio_variance);
    d.burn_in = static_cast<int>(synth.integer("burn_in", d.burn_in));
    d.first_year = static_cast<int>(synth.integer("first_year", d.first_year));
    synth.reject_unknown();
    cfg.synth = d;
  }

  Section input = section("input");
  cfg.panel_path = resolve(base_dir, input.str("panel"));
  input.reject_unknown();
  if (cfg.synth && !cfg.panel_path.empty()) config_error(source, "[synth] and [input] panel are mutually exclusive");
  if (!cfg.synth && cfg.panel_path.empty()) config_error(source, "either [synth] or [input] panel is required");

  Section schema = section("schema");
  for (const auto& [name, value] : schema.items()) {
    SchemaEntry entry;
    entry.spec.name = name;
    const auto parts = csv::split_list(value);
    if (parts.empty()) schema.fail("variable '" + name + "' needs a role");
    try {
      entry.spec.role = parse_role(parts[0]);
    } catch (const Error& e) {
      schema.fail(e.what());
    }
    for (std::size_t i = 1; i < parts.size(); ++i) {
      if (parts[i] == "log") {
        entry.spec.transform = Transform::Log;
      } else if (parts[i] == "interpolate") {
        entry.interpolate = true;
      } else {
        try {
          entry.spec.direction = parse_direction(parts[i]);
        } catch (const Error&) {
          schema.fail("variable '" + name + "': unknown option '" + parts[i] + "'");
        }
      }
    }
    cfg.schema.push_back(entry);
  }

  Section index = section("index");
  if (index.present()) {
    IndexBlock b;
    for (const auto& item : index.list("indicators")) b.indicators.push_back(parse_indicator(item, index));
    if (b.indicators.empty()) index.fail("indicators is empty");
    b.beta = index.number("beta", kDefaultBeta);
    b.output = index.str("output", "Dig");
    b.weights_from = resolve(base_dir, index.str("weights_from"));
    b.weights_column = index.str("weights_column", "combined");
    index.reject_unknown();
    cfg.index = b;
  }

  Section gap = section("gap");
  Section ratio = section("ratio");
  if (gap.present() || ratio.present()) {
    GapBlock b;
    for (const auto& [name, value] : gap.items()) {
      const auto cols = csv::split_list(value);
      if (cols.size() != 4) gap.fail("'" + name + "' expects value_urban, value_rural, pop_urban, pop_rural");
      b.gaps.push_back({name, GapColumns{cols[0], cols[1], cols[2], cols[3]}});
    }
    for (const auto& [name, value] : ratio.items()) {
      const auto slash = value.find('/');
      if (slash == std::string::npos) ratio.fail("'" + name + "' expects numerator / denominator");
      const auto num = csv::trim(value.substr(0, slash));
      const auto den = csv::trim(value.substr(slash + 1));
      if (num.empty() || den.empty()) ratio.fail("'" + name + "' expects numerator / denominator");
      b.ratios.push_back({name, {num, den}});
    }
    cfg.gap = b;
  }

  Section fe = section("fe");
  if (fe.present()) {
    FeBlock b;
    b.spec.dependent = fe.required("dep");
    b.spec.regressors = fe.list("regressors");
    if (b.spec.regressors.empty()) fe.fail("regressors is empty");
    set_estimator(b.spec, fe);
    b.robust_dependents = fe.list("robust_dep");
    fe.reject_unknown();
    cfg.fe = b;
  }

  Section gmm = section("gmm");
  if (gmm.present()) {
    DynamicModelSpec g;
    g.dependent = gmm.required("dep");
    g.lag_order = static_cast<int>(gmm.integer("lags", 1));
    g.exogenous = gmm.list("exog");
    g.predetermined = gmm.list("predetermined");
    const auto window = gmm.str("lag_window", "2:4");
    const auto colon = window.find_first_of(",:");
    if (colon == std::string::npos) gmm.fail("lag_window expects min:max (max may be 'all')");
    const auto lo = csv::parse_double(window.substr(0, colon));
    const auto hi_text = csv::trim(window.substr(colon + 1));
    if (!lo) gmm.fail("lag_window expects min:max");
    g.min_lag = static_cast<int>(*lo);
    if (hi_text == "all" || hi_text.empty()) {
      g.max_lag = 0;
    } else {
      const auto hi = csv::parse_double(hi_text);
      if (!hi) gmm.fail("lag_window expects min:max");
      g.max_lag = static_cast<int>(*hi);
    }
    g.collapse = gmm.flag("collapse", true);
    g.steps = static_cast<int>(gmm.integer("steps", 2));
    g.time_dummies = gmm.flag("time_dummies", false);
    g.level_equation = gmm.flag("level_equation", true);
    gmm.reject_unknown();
    if (g.lag_order < 1) gmm.fail("lags must be at least 1");
    if (g.steps != 1 && g.steps != 2) gmm.fail("steps must be 1 or 2");
    if (g.min_lag < 2) gmm.fail("lag_window minimum must be at least 2");
    if (g.max_lag > 0 && g.max_lag < g.min_lag) gmm.fail("lag_window maximum is below its minimum");
    cfg.gmm = g;
  }

  Section med = section("mediation");
  if (med.present()) {
    MediationSpec m;
    m.treatment = med.required("treatment");
    m.mediator = med.required("mediator");
    m.outcome = med.required("outcome");
    m.controls = med.list("controls");
    m.alpha = med.number("alpha", 0.05);
    set_estimator(m.estimator, med);
    med.reject_unknown();
    if (!(m.alpha > 0.0 && m.alpha < 1.0)) med.fail("alpha must lie in (0, 1)");
    cfg.mediation = m;
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = csv::read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  const auto base = fs::path(path).parent_path().string();
  return parse_run_config(text, path, base.empty() ? "." : base);
}

bool RunSummary::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == StageStatus::Ok; });
}

std::string RunSummary::first_error() const {
  for (const auto& s : stages)
    if (s.status == StageStatus::Failed) return s.stage + ": " + s.error;
  return {};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

struct Prepared {
  PanelDataset raw;       // as generated or loaded
  PanelDataset analysis;  // after schema selection and transforms
};

Prepared prepare(const RunConfig& cfg) {
  auto invalid = [&](const std::string& msg) { config_error(cfg.source, msg); };
  Prepared p;
  try {
    if (cfg.synth) {
      p.raw = generate(*cfg.synth).data;
    } else {
      if (!fs::is_regular_file(cfg.panel_path)) invalid("input panel '" + cfg.panel_path + "' does not exist");
      p.raw = load_panel_csv(cfg.panel_path);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    invalid(std::string("input data: ") + e.what());
  }

  // Names usable by the model blocks.
  std::set<std::string> available;
  PanelDataset ds = p.raw;
  if (cfg.schema.empty()) {
    available.insert(ds.variables().begin(), ds.variables().end());
  } else {
    std::vector<std::string> names;
    for (const auto& s : cfg.schema) {
      if (!ds.has_variable(s.spec.name)) invalid("schema variable '" + s.spec.name + "' is not in the input data");
      names.push_back(s.spec.name);
    }
    ds = ds.select(names);
    try {
      for (const auto& s : cfg.schema)
        if (s.interpolate) ds = interpolate_missing(ds, s.spec.name);
      std::vector<VariableSpec> specs;
      for (const auto& s : cfg.schema) specs.push_back(s.spec);
      ds = apply_schema_transforms(ds, specs);
    } catch (const Error& e) {
      invalid(std::string("schema transforms: ") + e.what());
    }
    available.insert(ds.variables().begin(), ds.variables().end());
  }

  auto require = [&](const std::string& block, const std::string& var) {
    if (!available.count(var)) invalid("[" + block + "] references '" + var + "', which is not in the schema or data");
  };
  if (cfg.index) {
    const auto& b = *cfg.index;
    for (const auto& v : b.indicators) require("index", v.name);
    if (!(b.beta >= 0.0 && b.beta <= 1.0)) invalid("[index] beta must lie in [0, 1]");
    if (b.output.empty()) invalid("[index] output name is empty");
    if (!b.weights_from.empty() && !fs::is_regular_file(b.weights_from))
      invalid("[index] weights file '" + b.weights_from + "' does not exist");
    available.insert(b.output);
  }
  if (cfg.gap) {
    for (const auto& [name, cols] : cfg.gap->gaps) {
      for (const auto* c : {&cols.value_urban, &cols.value_rural, &cols.pop_urban, &cols.pop_rural}) require("gap", *c);
    }
    for (const auto& [name, nd] : cfg.gap->ratios) {
      require("ratio", nd.first);
      require("ratio", nd.second);
    }
    for (const auto& [name, cols] : cfg.gap->gaps) available.insert(name);
    for (const auto& [name, nd] : cfg.gap->ratios) available.insert(name);
  }
  if (cfg.fe) {
    require("fe", cfg.fe->spec.dependent);
    for (const auto& v : cfg.fe->spec.regressors) require("fe", v);
    for (const auto& v : cfg.fe->robust_dependents) require("fe", v);
  }
  if (cfg.gmm) {
    require("gmm", cfg.gmm->dependent);
    for (const auto& v : cfg.gmm->exogenous) require("gmm", v);
    for (const auto& v : cfg.gmm->predetermined) require("gmm", v);
  }
  if (cfg.mediation) {
    const auto& m = *cfg.mediation;
    for (const auto* v : {&m.treatment, &m.mediator, &m.outcome}) require("mediation", *v);
    for (const auto& v : m.controls) require("mediation", v);
  }

  if (cfg.output_dir.empty()) invalid("output directory is empty");
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || !fs::is_directory(cfg.output_dir) || ::access(cfg.output_dir.c_str(), W_OK) != 0)
    invalid("output directory '" + cfg.output_dir + "' is not writable");
  p.analysis = std::move(ds);
  return p;
}

std::string file_label(const std::string& path) { return fs::path(path).filename().string(); }

class StageRunner {
 public:
  explicit StageRunner(std::string out_dir) : out_dir_(std::move(out_dir)) {}

  template <class F>
  void run(const std::string& name, std::vector<std::string> inputs, F&& body) {
    StageRecord rec;
    rec.stage = name;
    rec.inputs = std::move(inputs);
    if (failed_) {
      rec.status = StageStatus::Skipped;
      records_.push_back(std::move(rec));
      return;
    }
    pending_.clear();
    try {
      body();
      // Artifacts are written only after the stage's computation has succeeded.
      for (const auto& [file, content] : pending_) rec.outputs.push_back(write(file, content));
      rec.status = StageStatus::Ok;
    } catch (const std::exception& e) {
      rec.status = StageStatus::Failed;
      rec.error = e.what();
      failed_ = true;
    }
    records_.push_back(std::move(rec));
  }

  void emit(const std::string& file, std::string content) { pending_.emplace_back(file, std::move(content)); }

  Artifact write(const std::string& file, const std::string& content) const {
    csv::write_text_file((fs::path(out_dir_) / file).string(), content);
    return Artifact{file, sha256_hex(content), content.size()};
  }

  std::vector<StageRecord>& records() { return records_; }

 private:
  std::string out_dir_;
  bool failed_ = false;
  std::vector<std::pair<std::string, std::string>> pending_;
  std::vector<StageRecord> records_;
};

std::vector<double> ratio_series(const PanelDataset& ds, const std::string& num, const std::string& den) {
  const auto a = ds.column(num);
  const auto b = ds.column(den);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] == 0.0) throw Error(ErrorCode::ZeroDenominator, "ratio " + num + "/" + den + " has a zero denominator");
    out[i] = a[i] / b[i];
  }
  return out;
}

}  // namespace

void validate_run_config(const RunConfig& cfg) { prepare(cfg); }

RunSummary run_pipeline(const RunConfig& cfg) {
  Prepared prep = prepare(cfg);
  PanelDataset ds = prep.analysis;
  StageRunner stages(cfg.output_dir);
  std::vector<std::string> panel_inputs;

  if (cfg.synth) {
    stages.run("synth", {}, [&] { stages.emit("synthetic_panel.csv", panel_to_csv(prep.raw)); });
    panel_inputs.push_back("synthetic_panel.csv");
  } else {
    panel_inputs.push_back(file_label(cfg.panel_path));
  }

  if (cfg.index) {
    auto inputs = panel_inputs;
    if (!cfg.index->weights_from.empty()) inputs.push_back(file_label(cfg.index->weights_from));
    stages.run("index", inputs, [&] {
      const auto& b = *cfg.index;
      const auto raw = indicator_matrix(ds, b.indicators);
      IndexResult r;
      if (b.weights_from.empty()) {
        r = build_index(raw, b.beta);
      } else {
        const auto [names, weights] = load_weights_csv(b.weights_from, b.weights_column);
        r = score_with_weights(raw, names, weights);
      }
      ds = join_scores(ds, r, b.output);
      stages.emit("index_scores.csv", emit_surface_csv(r.normalized.rows, r.scores, b.output));
      stages.emit("index_weights.csv", weights_to_csv(r.weights));
    });
    panel_inputs.push_back("index_scores.csv");
  }

  if (cfg.gap) {
    stages.run("gap", panel_inputs, [&] {
      PanelDataset next = ds;
      std::vector<std::string> names;
      for (const auto& [name, cols] : cfg.gap->gaps) {
        next = next.with_column(name, gap_series(ds, cols));
        names.push_back(name);
      }
      for (const auto& [name, nd] : cfg.gap->ratios) {
        next = next.with_column(name, ratio_series(ds, nd.first, nd.second));
        names.push_back(name);
      }
      ds = next;
      stages.emit("gaps.csv", panel_to_csv(ds.select(names)));
      stages.emit("analysis_panel.csv", panel_to_csv(ds));
    });
    panel_inputs = {"analysis_panel.csv"};
  }

  if (cfg.fe) {
    stages.run("fe", panel_inputs, [&] {
      const auto main = fe_estimate(ds, cfg.fe->spec);
      const auto t2 = emit_fe_report({main}, ReportStyle::Table2, cfg.report);
      stages.emit("fe_table2.txt", t2.text);
      stages.emit("fe_table2.csv", t2.csv);
      if (!cfg.fe->robust_dependents.empty()) {
        std::vector<RegressionResult> cols;
        for (const auto& dep : cfg.fe->robust_dependents) {
          ModelSpec spec = cfg.fe->spec;
          spec.dependent = dep;
          cols.push_back(fe_estimate(ds, spec));
        }
        const auto t3 = emit_fe_report(cols, ReportStyle::Table3, cfg.report);
        stages.emit("fe_table3.txt", t3.text);
        stages.emit("fe_table3.csv", t3.csv);
      }
    });
  }

  if (cfg.gmm) {
    stages.run("gmm", panel_inputs, [&] {
      const auto res = system_gmm_estimate(ds, *cfg.gmm);
      const auto t4 = emit_report(res, ReportStyle::Table4, cfg.report);
      stages.emit("gmm_table4.txt", t4.text);
      stages.emit("gmm_table4.csv", t4.csv);
    });
  }

  if (cfg.mediation) {
    stages.run("mediate", panel_inputs, [&] {
      const auto res = mediation_run(ds, *cfg.mediation);
      const auto t5 = emit_report(res, ReportStyle::Table5, cfg.report);
      stages.emit("mediation_table5.txt", t5.text);
      stages.emit("mediation_table5.csv", t5.csv);
    });
  }

  RunSummary summary;
  summary.stages = std::move(stages.records());

  nlohmann::ordered_json manifest;
  manifest["tool"] = "panelmetrics";
  manifest["manifest_version"] = 1;
  manifest["config"] = file_label(cfg.source);
  manifest["status"] = summary.ok() ? "ok" : "failed";
  manifest["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : summary.stages) {
    nlohmann::ordered_json j;
    j["stage"] = s.stage;
    j["status"] = to_string(s.status);
    j["inputs"] = s.inputs;
    j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& a : s.outputs) j["outputs"].push_back({{"file", a.name}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    if (s.status == StageStatus::Failed) j["error"] = s.error;
    manifest["stages"].push_back(j);
  }
  summary.manifest_path = (fs::path(cfg.output_dir) / "manifest.json").string();
  csv::write_text_file(summary.manifest_path, manifest.dump(2) + "\n");
  return summary;
}

}  // namespace pm
