#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "panelmetrics/fixed_effects.hpp"
#include "panelmetrics/inequality.hpp"
#include "panelmetrics/mediation.hpp"
#include "panelmetrics/panel.hpp"
#include "panelmetrics/report.hpp"
#include "panelmetrics/synthetic.hpp"
#include "panelmetrics/system_gmm.hpp"

namespace pm {

struct SchemaEntry {
  VariableSpec spec;
  bool interpolate = false;
};

struct IndexBlock {
  std::vector<VariableSpec> indicators;
  double beta = kDefaultBeta;
  std::string output = "Dig";
  /// Optional weight CSV; when set the weights are read instead of estimated.
  std::string weights_from;
  std::string weights_column = "combined";
};

struct GapBlock {
  /// Output variable name -> source columns.
  std::vector<std::pair<std::string, GapColumns>> gaps;
  /// Output variable name -> (numerator, denominator) for plain ratios.
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> ratios;
};

struct FeBlock {
  ModelSpec spec;
  /// Dependent variables for the robustness table, one column each.
  std::vector<std::string> robust_dependents;
};

struct RunConfig {
  std::string source;  // config path (or "<memory>")
  std::string base_dir;
  std::string output_dir;
  ReportOptions report;

  std::optional<DgpConfig> synth;
  std::string panel_path;
  std::vector<SchemaEntry> schema;

  std::optional<IndexBlock> index;
  std::optional<GapBlock> gap;
  std::optional<FeBlock> fe;
  std::optional<DynamicModelSpec> gmm;
  std::optional<MediationSpec> mediation;
};

/// Parses the sectioned key=value config. Throws InvalidConfig.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<memory>",
                           const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

enum class StageStatus { Ok, Failed, Skipped };
const char* to_string(StageStatus s);

struct Artifact {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct StageRecord {
  std::string stage;
  StageStatus status = StageStatus::Skipped;
  std::vector<std::string> inputs;
  std::vector<Artifact> outputs;
  std::string error;
};

struct RunSummary {
  std::vector<StageRecord> stages;
  std::string manifest_path;
  bool ok() const;
  /// First failure as "stage: message", empty when every stage succeeded.
  std::string first_error() const;
};

/// Checks files, variable references and the output directory without writing
/// any artifact. Throws InvalidConfig.
void validate_run_config(const RunConfig& cfg);

/// Validates, then runs the configured stages in order (synth, index, gap, fe,
/// gmm, mediate) and writes manifest.json. A failing stage is recorded and the
/// remaining stages are skipped.
RunSummary run_pipeline(const RunConfig& cfg);

std::string sha256_hex(const std::string& bytes);

}  // namespace pm
