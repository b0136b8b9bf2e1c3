#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "panelmetrics/panel.hpp"

namespace pm {

struct ObservationKey {
  std::string entity;
  int year = 0;
};

/// m observations x n indicators, all cells observed.
struct IndicatorMatrix {
  std::vector<ObservationKey> rows;
  std::vector<std::string> names;
  std::vector<Direction> directions;
  Eigen::MatrixXd data;
};

struct WeightScheme {
  std::vector<std::string> names;
  Eigen::VectorXd critic;
  Eigen::VectorXd entropy;
  Eigen::VectorXd combined;
  double beta = 0.5;
};

inline constexpr double kDefaultBeta = 0.5;

/// Pools every (entity, year) row of the named indicators.
IndicatorMatrix indicator_matrix(const PanelDataset& ds, const std::vector<VariableSpec>& indicators);

/// Pooled min-max scaling. Positive columns map to (x-min)/(max-min), negative
/// columns to (max-x)/(max-min). A constant column maps to 0.5 everywhere.
IndicatorMatrix normalize_minmax(const IndicatorMatrix& m);

/// Contrast intensity (coefficient of variation) times conflict
/// sum_k (1 - |r_kj|), normalized to sum to one. Pearson r against a
/// zero-variance column is defined as 0. When every score is zero (all
/// columns constant or perfectly correlated) the weight is split evenly over
/// the non-constant columns.
Eigen::VectorXd critic_weights(const Eigen::MatrixXd& normalized);

/// Information-entropy weights with 0 ln 0 = 0.
Eigen::VectorXd entropy_weights(const Eigen::MatrixXd& normalized);

WeightScheme combine_weights(const Eigen::VectorXd& critic, const Eigen::VectorXd& entropy, double beta);

Eigen::VectorXd composite_score(const Eigen::MatrixXd& normalized, const Eigen::VectorXd& weights);
Eigen::VectorXd composite_score(const IndicatorMatrix& normalized, const WeightScheme& w);

struct IndexResult {
  IndicatorMatrix normalized;
  WeightScheme weights;
  Eigen::VectorXd scores;  // aligned with normalized.rows
};

/// Full chain: normalize, CRITIC, entropy, combine, score.
IndexResult build_index(const IndicatorMatrix& raw, double beta = kDefaultBeta);
/// Scores with externally supplied combined weights (matched by indicator name).
IndexResult score_with_weights(const IndicatorMatrix& raw, const std::vector<std::string>& names,
                               const Eigen::VectorXd& combined);

/// Reads an indicator,weight CSV; `column` selects the weight column.
std::pair<std::vector<std::string>, Eigen::VectorXd> load_weights_csv(const std::string& path,
                                                                      const std::string& column = "combined");
std::string weights_to_csv(const WeightScheme& w);

/// Joins scores into the panel as a new column.
PanelDataset join_scores(const PanelDataset& ds, const IndexResult& result, const std::string& name);

}  // namespace pm
