#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "panelmetrics/panel.hpp"

namespace pm {

/// Dynamic panel model y_it = sum_l rho_l y_i,t-l + x_it'b + a + u_i + e_it.
struct DynamicModelSpec {
  std::string dependent;
  int lag_order = 1;
  /// Strictly exogenous regressors; each instruments itself (differenced in
  /// the difference equation, in levels in the level equation).
  std::vector<std::string> exogenous;
  /// Predetermined regressors, instrumented GMM-style one lag closer than the
  /// dependent variable.
  std::vector<std::string> predetermined;
  /// Lag window for GMM-style instruments of the dependent variable. A
  /// non-positive max_lag means every available lag.
  int min_lag = 2;
  int max_lag = 4;
  bool collapse = true;
  int steps = 2;
  /// Disabling the level equation yields difference GMM.
  bool level_equation = true;
  bool time_dummies = false;
  bool intercept = true;
};

struct ZTest {
  double z = 0.0;
  double p = 1.0;
};

struct OverIdTest {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
};

enum class RowKind { Difference, Level };

/// Per-entity stacked system: difference rows first, then level rows.
struct EntityBlock {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd z;
  std::vector<RowKind> kinds;
  std::vector<int> periods;  // period index (0-based) of each row
};

struct GmmSystem {
  std::vector<std::string> regressor_names;
  std::vector<std::string> instrument_names;
  std::vector<EntityBlock> blocks;
  std::size_t n_level_rows = 0;
  std::size_t n_diff_rows = 0;

  std::size_t instrument_count() const noexcept { return instrument_names.size(); }
  std::size_t parameter_count() const noexcept { return regressor_names.size(); }
  /// All entity blocks stacked vertically.
  Eigen::MatrixXd stacked_instruments() const;
};

struct GmmResult {
  DynamicModelSpec spec;
  std::vector<std::string> terms;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd z_stats;
  Eigen::VectorXd p_values;
  Eigen::MatrixXd vcov;
  Eigen::VectorXd one_step_coefficients;

  std::optional<ZTest> ar1;
  std::optional<ZTest> ar2;
  /// Robust over-identification test from the two-step weighting.
  std::optional<OverIdTest> hansen;
  /// Non-robust test from the one-step weighting.
  std::optional<OverIdTest> sargan;

  std::size_t instrument_count = 0;
  std::size_t n_entities = 0;
  /// Level-equation observations (N(T-lags)); difference rows for difference GMM.
  std::size_t n_obs = 0;
  std::size_t n_diff_obs = 0;
  std::vector<std::string> warnings;

  // Quantities the specification tests need.
  GmmSystem system;
  std::vector<Eigen::VectorXd> residuals;  // final-step residuals per entity
  Eigen::MatrixXd projection;              // (X'Z W Z'X)^{-1} X'Z W, final step

  std::size_t term_index(const std::string& name) const;
  double coef(const std::string& name) const { return coefficients(static_cast<Eigen::Index>(term_index(name))); }
  double se(const std::string& name) const { return std_errors(static_cast<Eigen::Index>(term_index(name))); }
};

/// Builds regressors, targets and instruments for the stacked system.
GmmSystem build_instruments(const PanelDataset& ds, const DynamicModelSpec& spec);

GmmResult system_gmm_estimate(const PanelDataset& ds, const DynamicModelSpec& spec);

/// Arellano-Bond test for order-`order` serial correlation in the
/// differenced residuals. Throws InsufficientPeriods.
ZTest ar_test(const GmmResult& res, int order);

/// Throws ExactlyIdentified when instruments == parameters.
OverIdTest hansen_test(const GmmResult& res);

/// Name of the k-th lag of the dependent variable, e.g. "L.C" / "L2.C".
std::string lag_name(const std::string& var, int lag);

}  // namespace pm
