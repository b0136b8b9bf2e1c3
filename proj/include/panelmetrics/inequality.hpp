#pragma once

#include <span>
#include <string>
#include <vector>

#include "panelmetrics/panel.hpp"

namespace pm {

/// Value and population shares for a grouped population (e.g. urban/rural).
struct GroupShares {
  std::vector<double> value_shares;
  std::vector<double> pop_shares;
  std::vector<std::string> labels;

  /// Builds shares from group totals and group populations.
  static GroupShares from_totals(std::span<const double> value_totals, std::span<const double> populations,
                                 std::vector<std::string> labels = {});
};

/// Between-group Theil T: sum_j v_j ln(v_j / p_j). Not clamped to [0, 1]; the
/// two-group value is bounded by ln(1 / min p_j).
double theil_two_group(const GroupShares& g);

/// Population-weighted Theil T over individuals: sum_i s_i ln(n s_i), s_i = y_i / sum(y).
double theil_individual(std::span<const double> values);

struct GapColumns {
  std::string value_urban;
  std::string value_rural;
  std::string pop_urban;
  std::string pop_rural;
};

/// Two-group Theil per (entity, year). Value columns are per-capita figures and
/// are multiplied by the population columns to form group totals.
std::vector<double> gap_series(const PanelDataset& ds, const GapColumns& cols);

}  // namespace pm
