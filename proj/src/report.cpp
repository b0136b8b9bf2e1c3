#include "panelmetrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"
#include "panelmetrics/stats.hpp"

namespace pm {

namespace {

struct Labels {
  const char* table2;
  const char* table3;
  const char* table4;
  const char* table5;
  const char* variable;
  const char* observations;
  const char* adj_r2;
  const char* sobel;
  const char* note_se;
  const char* note_p;
  const char* effects;
};

const Labels& labels(Language lang) {
  static const Labels ascii{
      "Table 2  Guding xiaoying huigui jieguo (Fixed-effects regression results)",
      "Table 3  Wenjianxing jianyan jieguo (Robustness check results)",
      "Table 4  Xitong GMM moxing huigui jieguo (System GMM results)",
      "Table 5  Zhongjie xiaoying huigui jieguo (Mediation results)",
      "Bianliang (Variable)",
      "N",
      "adj. R2",
      "Sobel jianyan (Sobel test)",
      "Zhu (Note): *** p<0.01, ** p<0.05, * p<0.1; robust standard errors in parentheses.",
      "Zhu (Note): *** p<0.01, ** p<0.05, * p<0.1; p-values in parentheses.",
      "Xiaoying fenjie (Effect decomposition)"};
  static const Labels english{"Table 2  Fixed-effects regression results",
                              "Table 3  Robustness check results",
                              "Table 4  System GMM results",
                              "Table 5  Mediation results",
                              "Variable",
                              "N",
                              "adj. R2",
                              "Sobel test",
                              "Note: *** p<0.01, ** p<0.05, * p<0.1; robust standard errors in parentheses.",
                              "Note: *** p<0.01, ** p<0.05, * p<0.1; p-values in parentheses.",
                              "Effect decomposition"};
  static const Labels chinese{"\xe8\xa1\xa8 2 \xe5\x9b\xba\xe5\xae\x9a\xe6\x95\x88\xe5\xba\x94\xe5\x9b\x9e\xe5\xbd\x92\xe7\xbb\x93\xe6\x9e\x9c",
                              "\xe8\xa1\xa8 3 \xe7\xa8\xb3\xe5\x81\xa5\xe6\x80\xa7\xe6\xa3\x80\xe9\xaa\x8c\xe7\xbb\x93\xe6\x9e\x9c",
                              "\xe8\xa1\xa8 4 \xe7\xb3\xbb\xe7\xbb\x9f GMM \xe6\xa8\xa1\xe5\x9e\x8b\xe5\x9b\x9e\xe5\xbd\x92\xe7\xbb\x93\xe6\x9e\x9c",
                              "\xe8\xa1\xa8 5 \xe4\xb8\xad\xe4\xbb\x8b\xe6\x95\x88\xe5\xba\x94\xe5\x9b\x9e\xe5\xbd\x92\xe7\xbb\x93\xe6\x9e\x9c",
                              "\xe5\x8f\x98\xe9\x87\x8f",
                              "N",
                              "adj. R2",
                              "Sobel \xe6\xa3\x80\xe9\xaa\x8c",
                              "\xe6\xb3\xa8\xef\xbc\x9a*** p<0.01, ** p<0.05, * p<0.1\xef\xbc\x8c\xe6\x8b\xac\xe5\x8f\xb7\xe5\x86\x85\xe4\xb8\xba\xe7\xa8\xb3\xe5\x81\xa5\xe6\xa0\x87\xe5\x87\x86\xe8\xaf\xaf\xe3\x80\x82",
                              "\xe6\xb3\xa8\xef\xbc\x9a*** p<0.01, ** p<0.05, * p<0.1\xef\xbc\x8c\xe6\x8b\xac\xe5\x8f\xb7\xe5\x86\x85\xe4\xb8\xba p \xe5\x80\xbc\xe3\x80\x82",
                              "\xe6\x95\x88\xe5\xba\x94\xe5\x88\x86\xe8\xa7\xa3"};
  switch (lang) {
    case Language::English: return english;
    case Language::Chinese: return chinese;
    case Language::Ascii: break;
  }
  return ascii;
}

/// Display width counting each UTF-8 code point once (CJK glyphs as two).
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      ++w;
      ++i;
    } else if ((c >> 5) == 0x6) {
      ++w;
      i += 2;
    } else if ((c >> 4) == 0xE) {
      w += 2;
      i += 3;
    } else {
      w += 2;
      i += 4;
    }
  }
  return w;
}

using Grid = std::vector<std::vector<std::string>>;

/// Renders rows with a left label column; a row with a single "-" cell is a rule.
std::string render(const std::string& title, const Grid& rows, const std::string& note) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    if (r.size() == 1 && r[0] == "-") continue;
    if (widths.size() < r.size()) widths.resize(r.size(), 0);
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], display_width(r[c]));
  }
  const std::size_t total = std::accumulate(widths.begin(), widths.end(), std::size_t{0}) + 2 * (widths.size() - 1);
  std::ostringstream out;
  out << title << '\n';
  for (const auto& r : rows) {
    if (r.size() == 1 && r[0] == "-") {
      out << std::string(total, '-') << '\n';
      continue;
    }
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      line += r[c];
      if (c + 1 < r.size()) line += std::string(widths[c] - display_width(r[c]) + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  if (!note.empty()) out << note << '\n';
  return out.str();
}

std::string cell(double estimate, double se, double p, const ReportOptions& o) {
  return format_coefficient(estimate, p, o.decimals) + " " +
         format_paren(o.parens == ParenMode::StdErrors ? se : p, o.decimals);
}

std::string num(double v) { return std::isnan(v) ? std::string() : csv::format_double(v); }

struct CsvTable {
  std::ostringstream out;
  CsvTable() { csv::write_row(out, {"table", "column", "term", "estimate", "std_error", "statistic", "df", "p_value"}); }
  void add(const std::string& table, const std::string& column, const std::string& term, double estimate, double se,
           double statistic, double df, double p) {
    csv::write_row(out, {table, column, term, num(estimate), num(se), num(statistic), num(df), num(p)});
  }
};

constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

const char* style_name(ReportStyle s) {
  switch (s) {
    case ReportStyle::Table2: return "table2";
    case ReportStyle::Table3: return "table3";
    case ReportStyle::Table4: return "table4";
    case ReportStyle::Table5: return "table5";
  }
  return "?";
}

Report gmm_report(const GmmResult& r, const ReportOptions& o) {
  const Labels& L = labels(o.language);
  Grid rows{{"-"}, {L.variable, "(1)"}, {"-"}};
  CsvTable table;
  for (std::size_t k = 0; k < r.terms.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    rows.push_back({r.terms[k], cell(r.coefficients(i), r.std_errors(i), r.p_values(i), o)});
    table.add("table4", "1", r.terms[k], r.coefficients(i), r.std_errors(i), r.z_stats(i), kNa, r.p_values(i));
  }
  rows.push_back({"-"});
  auto ztest = [&](const char* name, const std::optional<ZTest>& t) {
    rows.push_back({name, t ? format_coefficient(t->z, t->p, 2) : std::string("n/a")});
    table.add("table4", "1", name, kNa, kNa, t ? t->z : kNa, kNa, t ? t->p : kNa);
  };
  ztest("AR(1)", r.ar1);
  ztest("AR(2)", r.ar2);
  rows.push_back({"Hansen", r.hansen ? format_coefficient(r.hansen->statistic, r.hansen->p, 2) : std::string("n/a")});
  table.add("table4", "1", "Hansen", kNa, kNa, r.hansen ? r.hansen->statistic : kNa, r.hansen ? r.hansen->df : kNa,
            r.hansen ? r.hansen->p : kNa);
  rows.push_back({"Observations", std::to_string(r.n_obs)});
  table.add("table4", "1", "Observations", static_cast<double>(r.n_obs), kNa, kNa, kNa, kNa);
  rows.push_back({"-"});
  if (r.hansen)
    rows.push_back({"Hansen df / p", std::to_string(r.hansen->df) + " / " + stats::round_fixed(r.hansen->p, 4)});
  if (r.sargan) {
    rows.push_back({"Sargan", format_coefficient(r.sargan->statistic, r.sargan->p, 2)});
    table.add("table4", "1", "Sargan", kNa, kNa, r.sargan->statistic, r.sargan->df, r.sargan->p);
  }
  rows.push_back({"Instruments", std::to_string(r.instrument_count)});
  rows.push_back({"Entities", std::to_string(r.n_entities)});
  table.add("table4", "1", "Instruments", static_cast<double>(r.instrument_count), kNa, kNa, kNa, kNa);
  const Labels& lab = labels(o.language);
  return {render(L.table4, rows, o.parens == ParenMode::StdErrors ? lab.note_se : lab.note_p), table.out.str()};
}

Report mediation_report(const MediationResult& m, const ReportOptions& o) {
  const Labels& L = labels(o.language);
  const std::vector<const RegressionResult*> eqs{&m.total_eq, &m.mediator_eq, &m.outcome_eq};
  const std::vector<std::string> deps{m.spec.outcome, m.spec.mediator, m.spec.outcome};
  std::vector<std::string> order{m.spec.treatment};
  order.insert(order.end(), m.spec.controls.begin(), m.spec.controls.end());
  order.push_back(m.spec.mediator);
  if (m.spec.estimator.intercept) order.push_back("cons");

  Grid rows{{"-"}, {L.variable, "(1) " + deps[0], "(2) " + deps[1], "(3) " + deps[2]}, {"-"}};
  CsvTable table;
  for (const auto& term : order) {
    std::vector<std::string> row{term};
    for (std::size_t c = 0; c < eqs.size(); ++c) {
      const auto& eq = *eqs[c];
      auto it = std::find(eq.terms.begin(), eq.terms.end(), term);
      if (it == eq.terms.end()) {
        row.emplace_back();
        continue;
      }
      const auto i = static_cast<Eigen::Index>(it - eq.terms.begin());
      row.push_back(cell(eq.coefficients(i), eq.std_errors(i), eq.p_values(i), o));
      table.add("table5", std::to_string(c + 1), term, eq.coefficients(i), eq.std_errors(i), eq.t_stats(i),
                eq.df_inference, eq.p_values(i));
    }
    rows.push_back(row);
  }
  rows.push_back({"-"});
  std::vector<std::string> n_row{L.observations}, r2_row{L.adj_r2};
  for (std::size_t c = 0; c < eqs.size(); ++c) {
    n_row.push_back(std::to_string(eqs[c]->n_obs));
    r2_row.push_back(stats::round_fixed(eqs[c]->r2_adj, o.decimals));
    table.add("table5", std::to_string(c + 1), "N", static_cast<double>(eqs[c]->n_obs), kNa, kNa, kNa, kNa);
    table.add("table5", std::to_string(c + 1), "adj_R2", eqs[c]->r2_adj, kNa, kNa, kNa, kNa);
    table.add("table5", std::to_string(c + 1), "r2_within", eqs[c]->r2_within, kNa, kNa, kNa, kNa);
  }
  rows.push_back(n_row);
  rows.push_back(r2_row);
  rows.push_back({L.sobel, "", "", format_coefficient(m.sobel.z, m.sobel.p, 3) + " " + format_paren(m.sobel.p, 3)});
  rows.push_back({"-"});
  rows.push_back({L.effects});
  rows.push_back({"total", stats::round_fixed(m.total_effect, o.decimals)});
  rows.push_back({"direct", stats::round_fixed(m.direct_effect, o.decimals)});
  rows.push_back({"indirect (a*b)", stats::round_fixed(m.indirect_effect, o.decimals)});
  rows.push_back({"proportion", m.proportion ? stats::round_fixed(100.0 * m.proportion->value, 2) + "%" +
                                                   (m.proportion->inconsistent ? " (inconsistent mediation)" : "")
                                             : std::string("n/a")});
  rows.push_back({"classification", to_string(m.classification)});

  table.add("table5", "effects", "total", m.total_effect, kNa, kNa, kNa, kNa);
  table.add("table5", "effects", "direct", m.direct_effect, kNa, kNa, kNa, kNa);
  table.add("table5", "effects", "path_a", m.path_a, kNa, kNa, kNa, kNa);
  table.add("table5", "effects", "path_b", m.path_b, kNa, kNa, kNa, kNa);
  table.add("table5", "effects", "indirect", m.indirect_effect, m.sobel.se, m.sobel.z, kNa, m.sobel.p);
  table.add("table5", "effects", "proportion", m.proportion ? m.proportion->value : kNa, kNa, kNa, kNa, kNa);
  std::string note = o.parens == ParenMode::StdErrors ? L.note_se : L.note_p;
  note += "\nSobel: z statistic, p-value in parentheses.";
  return {render(L.table5, rows, note), table.out.str()};
}

}  // namespace

ReportStyle parse_report_style(const std::string& text) {
  if (text == "table2") return ReportStyle::Table2;
  if (text == "table3") return ReportStyle::Table3;
  if (text == "table4") return ReportStyle::Table4;
  if (text == "table5") return ReportStyle::Table5;
  throw Error(ErrorCode::InvalidArgument, "unknown report style '" + text + "'");
}

ParenMode parse_paren_mode(const std::string& text) {
  if (text == "se" || text == "stderr" || text == "std_errors") return ParenMode::StdErrors;
  if (text == "p" || text == "pvalues" || text == "p-values") return ParenMode::PValues;
  throw Error(ErrorCode::InvalidArgument, "unknown parenthesis mode '" + text + "' (se|pvalues)");
}

Language parse_language(const std::string& text) {
  if (text.empty() || text == "ascii" || text == "pinyin") return Language::Ascii;
  if (text == "en") return Language::English;
  if (text == "zh") return Language::Chinese;
  throw Error(ErrorCode::InvalidArgument, "unknown report language '" + text + "' (ascii|en|zh)");
}

Language language_from_env() {
  const char* v = std::getenv("PANELMETRICS_LANG");
  return v ? parse_language(v) : Language::Ascii;
}

std::string format_coefficient(double value, double p, int decimals) {
  return stats::round_fixed(value, decimals) + significance_stars(p);
}

std::string format_paren(double value, int decimals) { return "(" + stats::round_fixed(value, decimals) + ")"; }

Report emit_fe_report(const std::vector<RegressionResult>& columns, ReportStyle style, const ReportOptions& o) {
  if (style != ReportStyle::Table2 && style != ReportStyle::Table3)
    throw Error(ErrorCode::StyleMismatch, std::string("fixed-effects results cannot be rendered as ") + style_name(style));
  if (columns.empty()) throw Error(ErrorCode::InvalidArgument, "no regression columns to report");
  const Labels& L = labels(o.language);
  const std::string table_name = style_name(style);

  std::vector<std::string> order;
  for (const auto& c : columns)
    for (const auto& t : c.terms)
      if (t != "cons" && std::find(order.begin(), order.end(), t) == order.end()) order.push_back(t);
  const bool any_cons = std::any_of(columns.begin(), columns.end(), [](const auto& c) { return c.spec.intercept; });
  if (any_cons) order.push_back("cons");

  std::vector<std::string> head{L.variable};
  for (std::size_t c = 0; c < columns.size(); ++c) head.push_back("(" + std::to_string(c + 1) + ")");
  Grid rows{{"-"}, head, {"-"}};
  if (columns.size() > 1 || style == ReportStyle::Table3) {
    std::vector<std::string> deps{""};
    for (const auto& c : columns) deps.push_back(c.spec.dependent);
    rows.insert(rows.begin() + 2, deps);
  }
  CsvTable table;
  for (const auto& term : order) {
    std::vector<std::string> row{term};
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& res = columns[c];
      auto it = std::find(res.terms.begin(), res.terms.end(), term);
      if (it == res.terms.end()) {
        row.emplace_back();
        continue;
      }
      const auto i = static_cast<Eigen::Index>(it - res.terms.begin());
      row.push_back(cell(res.coefficients(i), res.std_errors(i), res.p_values(i), o));
      table.add(table_name, std::to_string(c + 1), term, res.coefficients(i), res.std_errors(i), res.t_stats(i),
                res.df_inference, res.p_values(i));
    }
    rows.push_back(row);
  }
  rows.push_back({"-"});
  std::vector<std::string> n_row{L.observations}, r2_row{L.adj_r2};
  for (std::size_t c = 0; c < columns.size(); ++c) {
    n_row.push_back(std::to_string(columns[c].n_obs));
    r2_row.push_back(stats::round_fixed(columns[c].r2_adj, o.decimals));
    table.add(table_name, std::to_string(c + 1), "N", static_cast<double>(columns[c].n_obs), kNa, kNa, kNa, kNa);
    table.add(table_name, std::to_string(c + 1), "adj_R2", columns[c].r2_adj, kNa, kNa, kNa, kNa);
    table.add(table_name, std::to_string(c + 1), "r2_within", columns[c].r2_within, kNa, kNa, kNa, kNa);
  }
  rows.push_back(n_row);
  rows.push_back(r2_row);
  rows.push_back({"-"});
  return {render(style == ReportStyle::Table2 ? L.table2 : L.table3, rows,
                 o.parens == ParenMode::StdErrors ? L.note_se : L.note_p),
          table.out.str()};
}

Report emit_report(const AnyResult& result, ReportStyle style, const ReportOptions& opts) {
  if (const auto* fe = std::get_if<RegressionResult>(&result)) return emit_fe_report({*fe}, style, opts);
  if (const auto* gmm = std::get_if<GmmResult>(&result)) {
    if (style != ReportStyle::Table4)
      throw Error(ErrorCode::StyleMismatch, std::string("GMM results render only as table4, not ") + style_name(style));
    return gmm_report(*gmm, opts);
  }
  const auto& med = std::get<MediationResult>(result);
  if (style != ReportStyle::Table5)
    throw Error(ErrorCode::StyleMismatch, std::string("mediation results render only as table5, not ") + style_name(style));
  return mediation_report(med, opts);
}

std::string emit_surface_csv(const std::vector<ObservationKey>& keys, const Eigen::VectorXd& scores,
                             const std::string& value_name) {
  if (keys.size() != static_cast<std::size_t>(scores.size()))
    throw Error(ErrorCode::DimensionMismatch, "surface keys and scores differ in length");
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a].entity != keys[b].entity) return keys[a].entity < keys[b].entity;
    return keys[a].year < keys[b].year;
  });
  std::ostringstream out;
  csv::write_row(out, {"entity", "year", value_name});
  for (std::size_t i : order)
    csv::write_row(out, {keys[i].entity, std::to_string(keys[i].year),
                         csv::format_double(scores(static_cast<Eigen::Index>(i)))});
  return out.str();
}

}  // namespace pm
