#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "panelmetrics/error.hpp"
#include "panelmetrics/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pm_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) out.insert(e.path().filename().string());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kSynthHead = R"(
[synth]
kind = provincial
entities = 12
years = 8
seed = 3
)";

}  // namespace

TEST_CASE("SHA-256 of known strings") {
  CHECK(pm::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(pm::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("an index-only config writes exactly the score and weight CSVs") {
  const auto dir = scratch("index_only");
  auto cfg = pm::parse_run_config(kSynthHead + R"(
[index]
indicators = ind1:+, ind2:+, ind6:-
output = Dig
)");
  cfg.output_dir = (dir / "out").string();
  const auto summary = pm::run_pipeline(cfg);
  CHECK(summary.ok());
  CHECK(listing(dir / "out") ==
        std::set<std::string>{"synthetic_panel.csv", "index_scores.csv", "index_weights.csv", "manifest.json"});

  // Loading from a file is not a stage: the outputs are only the two CSVs.
  pm::PanelDataset raw = pm::load_panel_csv((dir / "out" / "synthetic_panel.csv").string());
  pm::write_panel_csv(raw, (dir / "panel.csv").string());
  const auto text = "[input]\npanel = panel.csv\n[index]\nindicators = ind1:+, ind2:+, ind6:-\n[run]\noutput_dir = out2\n";
  std::ofstream(dir / "run.ini") << text;
  const auto from_file = pm::run_pipeline(pm::load_run_config((dir / "run.ini").string()));
  CHECK(from_file.ok());
  CHECK(listing(dir / "out2") == std::set<std::string>{"index_scores.csv", "index_weights.csv", "manifest.json"});
  REQUIRE(from_file.stages.size() == 1);
  CHECK(from_file.stages[0].stage == "index");
  CHECK(slurp(dir / "out2" / "index_scores.csv") == slurp(dir / "out" / "index_scores.csv"));
}

TEST_CASE("the bundled example config runs all six stages") {
  const auto dir = scratch("example");
  auto cfg = pm::load_run_config(PM_SOURCE_DIR "/config/example_synthetic.ini");
  cfg.output_dir = dir.string();
  const auto summary = pm::run_pipeline(cfg);
  INFO(summary.first_error());
  REQUIRE(summary.ok());
  std::vector<std::string> names;
  for (const auto& s : summary.stages) names.push_back(s.stage);
  CHECK(names == std::vector<std::string>{"synth", "index", "gap", "fe", "gmm", "mediate"});

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["stages"].size() == 6);
  for (const auto& st : manifest["stages"]) {
    CHECK(st["status"] == "ok");
    for (const auto& out : st["outputs"]) {
      const auto content = slurp(dir / out["file"].get<std::string>());
      CHECK(out["sha256"] == pm::sha256_hex(content));
      CHECK(out["bytes"] == content.size());
    }
  }
  const auto t4 = slurp(dir / "gmm_table4.txt");
  CHECK(t4.find("Observations") != std::string::npos);
  CHECK(t4.find("270") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto cfg = pm::load_run_config(PM_SOURCE_DIR "/config/example_synthetic.ini");
  cfg.output_dir = a.string();
  pm::run_pipeline(cfg);
  cfg.output_dir = b.string();
  pm::run_pipeline(cfg);
  CHECK(listing(a) == listing(b));
  for (const auto& f : listing(a)) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("a missing variable fails validation before anything is written") {
  const auto dir = scratch("missing");
  auto cfg = pm::parse_run_config(kSynthHead + R"(
[index]
indicators = ind1:+, ind2:+
[fe]
dep = NotThere
regressors = Dig
)");
  cfg.output_dir = (dir / "out").string();
  bool thrown = false;
  try {
    pm::run_pipeline(cfg);
  } catch (const pm::Error& e) {
    thrown = e.code() == pm::ErrorCode::InvalidConfig;
    CHECK(std::string(e.what()).find("NotThere") != std::string::npos);
  }
  CHECK(thrown);
  CHECK(listing(dir / "out").empty());
}

TEST_CASE("a failing stage is recorded and later stages are skipped") {
  const auto dir = scratch("failing");
  auto cfg = pm::parse_run_config(R"(
[synth]
kind = provincial
entities = 12
years = 3
seed = 3
[gap]
C = cons_urban, cons_rural, pop_urban, pop_rural
[fe]
dep = C
regressors = Fis, Tdr
[gmm]
dep = C
exog = Fis
[mediation]
treatment = Fis
mediator = Tdr
outcome = C
)");
  cfg.output_dir = dir.string();
  const auto summary = pm::run_pipeline(cfg);
  CHECK_FALSE(summary.ok());
  REQUIRE(summary.stages.size() == 5);
  CHECK(summary.stages[2].status == pm::StageStatus::Ok);
  CHECK(summary.stages[3].stage == "gmm");
  CHECK(summary.stages[3].status == pm::StageStatus::Failed);
  CHECK(summary.stages[4].status == pm::StageStatus::Skipped);
  CHECK(summary.first_error().rfind("gmm: TooShortPanel", 0) == 0);
  const auto files = listing(dir);
  CHECK(files.count("fe_table2.txt") == 1);
  CHECK(files.count("gmm_table4.txt") == 0);
  CHECK(files.count("mediation_table5.txt") == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["stages"][3]["error"].get<std::string>().find("TooShortPanel") != std::string::npos);
}

TEST_CASE("config parsing errors") {
  auto invalid = [](const std::string& text) {
    try {
      pm::parse_run_config(text);
    } catch (const pm::Error& e) {
      return e.code() == pm::ErrorCode::InvalidConfig;
    }
    return false;
  };
  CHECK(invalid("[bogus]\nx = 1\n"));
  CHECK(invalid("[synth]\nkind = provincial\ncolour = red\n"));
  CHECK(invalid("[index]\nindicators = a:up\n"));
  CHECK(invalid("[gmm]\ndep = y\nlag_window = 4:2\n"));
  CHECK(invalid("[synth]\nkind = provincial\n[input]\npanel = p.csv\n"));
  const auto ok = pm::parse_run_config("[gmm]\ndep = y\nlag_window = 2, all\n[synth]\nkind = dynamic_ar1\n");
  REQUIRE(ok.gmm.has_value());
  CHECK(ok.gmm->min_lag == 2);
  CHECK(ok.gmm->max_lag <= 0);
}
