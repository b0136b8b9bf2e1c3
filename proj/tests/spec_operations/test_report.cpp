#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"
#include "panelmetrics/report.hpp"
#include "panelmetrics/stats.hpp"
#include "panelmetrics/synthetic.hpp"

namespace {

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

pm::PanelDataset synth(pm::DgpKind kind, std::uint64_t seed) {
  pm::DgpConfig cfg;
  cfg.kind = kind;
  cfg.seed = seed;
  return pm::generate(cfg).data;
}

}  // namespace

TEST_CASE("coefficient and parenthesis formatting") {
  CHECK(pm::format_coefficient(-0.1171, 0.0001) == "-0.1171***");
  CHECK(pm::format_paren(0.0249) == "(0.0249)");
  CHECK(pm::format_coefficient(-3.49, 0.0005, 2) == "-3.49***");
  CHECK(pm::format_coefficient(21.74, 0.3, 2) == "21.74");
  CHECK(pm::format_coefficient(-3.083, 0.002, 3) + " " + pm::format_paren(0.002, 3) == "-3.083*** (0.002)");
  CHECK(pm::format_coefficient(0.5, 0.05) == "0.5000*");
}

TEST_CASE("rounding is half away from zero on the decimal expansion") {
  CHECK(pm::stats::round_fixed(0.12345, 4) == "0.1235");
  CHECK(pm::stats::round_fixed(-0.12345, 4) == "-0.1235");
  CHECK(pm::stats::round_fixed(2.5, 0) == "3");
  CHECK(pm::stats::round_fixed(-2.5, 0) == "-3");
  CHECK(pm::stats::round_fixed(0.99995, 4) == "1.0000");
  CHECK(pm::stats::round_fixed(1.0, 4) == "1.0000");
}

TEST_CASE("parser helpers") {
  CHECK(pm::parse_paren_mode("pvalues") == pm::ParenMode::PValues);
  CHECK(pm::parse_paren_mode("se") == pm::ParenMode::StdErrors);
  CHECK(pm::parse_language("zh") == pm::Language::Chinese);
  CHECK(pm::parse_language("") == pm::Language::Ascii);
  CHECK(pm::parse_report_style("table4") == pm::ReportStyle::Table4);
  CHECK_THROWS_AS(pm::parse_paren_mode("stars"), pm::Error);
  CHECK_THROWS_AS(pm::parse_language("fr"), pm::Error);
}

TEST_CASE("fixed-effects report") {
  const auto ds = synth(pm::DgpKind::StaticFe, 5);
  const auto r = pm::fe_estimate(ds, {"y", {"x1"}});
  const auto rep = pm::emit_fe_report({r}, pm::ReportStyle::Table2);
  CHECK(contains(rep.text, "Table 2"));
  CHECK(contains(rep.text, "x1"));
  CHECK(contains(rep.text, pm::format_coefficient(r.coef("x1"), r.pvalue("x1")) + " " + pm::format_paren(r.se("x1"))));
  CHECK(contains(rep.text, "adj. R2"));
  CHECK(rep.text.find("x1") < rep.text.find("cons"));
  CHECK(rep.text.find("cons") < rep.text.find("adj. R2"));
  // The CSV twin carries unrounded values.
  CHECK(contains(rep.csv, "table,column,term,estimate,std_error,statistic,df,p_value"));
  CHECK(contains(rep.csv, pm::csv::format_double(r.coef("x1"))));

  pm::ReportOptions o;
  o.parens = pm::ParenMode::PValues;
  o.language = pm::Language::English;
  const auto p = pm::emit_fe_report({r, r}, pm::ReportStyle::Table3, o);
  CHECK(contains(p.text, "Table 3  Robustness check results"));
  CHECK(contains(p.text, "p-values in parentheses"));
  CHECK(contains(p.text, pm::format_paren(r.pvalue("x1"))));
  CHECK_FALSE(contains(p.text, "Bianliang"));
}

TEST_CASE("GMM report footer follows the table order") {
  const auto ds = synth(pm::DgpKind::DynamicAr1, 6);
  pm::DynamicModelSpec spec{"y"};
  spec.exogenous = {"x1"};
  const auto r = pm::system_gmm_estimate(ds, spec);
  const auto rep = pm::emit_report(r, pm::ReportStyle::Table4);
  const auto a1 = rep.text.find("AR(1)"), a2 = rep.text.find("AR(2)"), h = rep.text.find("Hansen"),
             n = rep.text.find("Observations");
  REQUIRE(a1 != std::string::npos);
  CHECK(a1 < a2);
  CHECK(a2 < h);
  CHECK(h < n);
  CHECK(contains(rep.text, pm::format_coefficient(r.ar1->z, r.ar1->p, 2)));
  CHECK(contains(rep.text, "L.y"));
  CHECK(contains(rep.text, std::to_string(r.n_obs)));
}

TEST_CASE("mediation report shows the Sobel row and the effect block") {
  const auto ds = synth(pm::DgpKind::Mediation, 7);
  pm::MediationSpec spec;
  spec.treatment = "X";
  spec.mediator = "M";
  spec.outcome = "Y";
  spec.controls = {"W1", "W2"};
  const auto m = pm::mediation_run(ds, spec);
  const auto rep = pm::emit_report(m, pm::ReportStyle::Table5);
  CHECK(contains(rep.text, pm::format_coefficient(m.sobel.z, m.sobel.p, 3) + " " + pm::format_paren(m.sobel.p, 3)));
  CHECK(contains(rep.text, "indirect (a*b)"));
  CHECK(contains(rep.text, "(1) Y"));
  CHECK(contains(rep.text, "(2) M"));
  CHECK(contains(rep.text, pm::to_string(m.classification)));
}

TEST_CASE("style mismatches are refused") {
  const auto ds = synth(pm::DgpKind::StaticFe, 5);
  const pm::AnyResult r = pm::fe_estimate(ds, {"y", {"x1"}});
  bool thrown = false;
  try {
    pm::emit_report(r, pm::ReportStyle::Table4);
  } catch (const pm::Error& e) {
    thrown = e.code() == pm::ErrorCode::StyleMismatch;
  }
  CHECK(thrown);
}

TEST_CASE("surface CSV is long-format, sorted, and precise") {
  const std::vector<pm::ObservationKey> keys{{"B", 2014}, {"A", 2014}, {"B", 2013}, {"A", 2013}};
  Eigen::VectorXd scores(4);
  scores << 0.123456789, 0.5, 0.25, 1.0 / 3.0;
  const auto csv = pm::emit_surface_csv(keys, scores, "Dig");
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "entity,year,Dig");
  CHECK(lines[1].rfind("A,2013,", 0) == 0);
  CHECK(lines[2].rfind("A,2014,0.5", 0) == 0);
  CHECK(lines[3].rfind("B,2013,0.25", 0) == 0);
  CHECK(lines[4] == "B,2014,0.123456789");
  CHECK(contains(lines[1], "0.333333"));

  const auto flat = pm::emit_surface_csv(keys, Eigen::VectorXd::Constant(4, 0.5));
  CHECK(contains(flat, "A,2013,0.5"));
  CHECK(contains(flat, "B,2014,0.5"));
}
