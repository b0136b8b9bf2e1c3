#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "panelmetrics/composite_index.hpp"
#include "panelmetrics/fixed_effects.hpp"
#include "panelmetrics/mediation.hpp"
#include "panelmetrics/system_gmm.hpp"

namespace pm {

enum class ReportStyle { Table2, Table3, Table4, Table5 };
/// What goes in the parentheses after each coefficient.
enum class ParenMode { StdErrors, PValues };
/// ascii: bilingual labels with pinyin transliteration (default);
/// en: English only; zh: Chinese labels (UTF-8).
enum class Language { Ascii, English, Chinese };

ReportStyle parse_report_style(const std::string& text);
ParenMode parse_paren_mode(const std::string& text);
Language parse_language(const std::string& text);
/// Reads PANELMETRICS_LANG; unset means Language::Ascii.
Language language_from_env();

struct Report {
  std::string text;
  std::string csv;
};

struct ReportOptions {
  ParenMode parens = ParenMode::StdErrors;
  Language language = Language::Ascii;
  int decimals = 4;
};

using AnyResult = std::variant<RegressionResult, GmmResult, MediationResult>;

/// Coefficient with star suffix, e.g. "-0.1171***".
std::string format_coefficient(double value, double p, int decimals = 4);
/// Parenthesised companion value, e.g. "(0.0249)".
std::string format_paren(double value, int decimals = 4);

/// Table 2 / Table 3 layouts accept several FE columns side by side.
Report emit_fe_report(const std::vector<RegressionResult>& columns, ReportStyle style, const ReportOptions& opts = {});
Report emit_report(const AnyResult& result, ReportStyle style, const ReportOptions& opts = {});

/// Long-format (entity, year, score) CSV sorted by entity then year.
std::string emit_surface_csv(const std::vector<ObservationKey>& keys, const Eigen::VectorXd& scores,
                             const std::string& value_name = "score");

}  // namespace pm
