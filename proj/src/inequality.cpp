#include "panelmetrics/inequality.hpp"

#include <cmath>
#include <numeric>

#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"

namespace pm {

namespace {

void check_shares(const std::vector<double>& s, const char* what) {
  double sum = 0.0;
  for (double x : s) {
    if (x == 0.0) throw Error(ErrorCode::ZeroShare, std::string(what) + " contains a zero share");
    if (!(x > 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " entry outside (0, 1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " sums to " + csv::format_double(sum));
}

}  // namespace

GroupShares GroupShares::from_totals(std::span<const double> value_totals, std::span<const double> populations,
                                     std::vector<std::string> labels) {
  if (value_totals.size() != populations.size() || value_totals.empty())
    throw Error(ErrorCode::DimensionMismatch, "group totals and populations differ in length");
  for (std::size_t j = 0; j < value_totals.size(); ++j) {
    if (value_totals[j] == 0.0 || populations[j] == 0.0)
      throw Error(ErrorCode::ZeroShare, "group " + std::to_string(j) + " has a zero total");
    if (!(value_totals[j] > 0.0) || !(populations[j] > 0.0))
      throw Error(ErrorCode::NonPositiveValue, "group " + std::to_string(j) + " has a negative total");
  }
  const double vt = std::accumulate(value_totals.begin(), value_totals.end(), 0.0);
  const double pt = std::accumulate(populations.begin(), populations.end(), 0.0);
  GroupShares g;
  for (std::size_t j = 0; j < value_totals.size(); ++j) {
    g.value_shares.push_back(value_totals[j] / vt);
    g.pop_shares.push_back(populations[j] / pt);
  }
  g.labels = std::move(labels);
  return g;
}

double theil_two_group(const GroupShares& g) {
  if (g.value_shares.size() != g.pop_shares.size() || g.value_shares.empty())
    throw Error(ErrorCode::DimensionMismatch, "value and population shares differ in length");
  if (!g.labels.empty() && g.labels.size() != g.value_shares.size())
    throw Error(ErrorCode::DimensionMismatch, "group labels differ in length from shares");
  check_shares(g.value_shares, "value shares");
  check_shares(g.pop_shares, "population shares");
  double t = 0.0;
  for (std::size_t j = 0; j < g.value_shares.size(); ++j)
    t += g.value_shares[j] * std::log(g.value_shares[j] / g.pop_shares[j]);
  return t;
}

double theil_individual(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyMatrix, "theil_individual: no values");
  double total = 0.0;
  for (double y : values) {
    if (!(y > 0.0)) throw Error(ErrorCode::NonPositiveValue, "theil_individual: value " + csv::format_double(y));
    total += y;
  }
  const double n = static_cast<double>(values.size());
  double t = 0.0;
  for (double y : values) {
    const double s = y / total;
    t += s * std::log(n * s);
  }
  return t;
}

std::vector<double> gap_series(const PanelDataset& ds, const GapColumns& cols) {
  const auto vu = ds.column(cols.value_urban);
  const auto vr = ds.column(cols.value_rural);
  const auto pu = ds.column(cols.pop_urban);
  const auto pr = ds.column(cols.pop_rural);
  std::vector<double> out(ds.n_obs());
  for (std::size_t i = 0; i < ds.n_obs(); ++i) {
    const double totals[2] = {vu[i] * pu[i], vr[i] * pr[i]};
    const double pops[2] = {pu[i], pr[i]};
    try {
      out[i] = theil_two_group(GroupShares::from_totals(totals, pops));
    } catch (const Error& e) {
      const std::size_t ent = i / ds.n_years();
      throw Error(e.code(), std::string(e.what()) + " at (" + ds.entities()[ent] + ", " +
                                std::to_string(ds.year_at(i % ds.n_years())) + ")");
    }
  }
  return out;
}

}  // namespace pm
