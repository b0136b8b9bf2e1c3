#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "panelmetrics/panel.hpp"

namespace pm {

enum class VcovKind { Classical, ClusterEntity };

struct ModelSpec {
  std::string dependent;
  std::vector<std::string> regressors;
  bool entity_effects = true;
  bool time_effects = false;
  bool intercept = true;
  VcovKind vcov = VcovKind::ClusterEntity;
};

struct RegressionResult {
  ModelSpec spec;
  /// Regressors in specification order, then "cons" when an intercept is fitted.
  std::vector<std::string> terms;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  Eigen::MatrixXd vcov;

  std::size_t n_obs = 0;
  std::size_t n_entities = 0;
  std::size_t n_years = 0;
  /// Parameters absorbed by the fixed effects beyond the reported terms.
  std::size_t absorbed = 0;
  double df_resid = 0.0;
  /// Degrees of freedom of the t reference distribution (G-1 when clustered).
  double df_inference = 0.0;

  double ssr = 0.0;
  double r2_within = 0.0;
  /// R-squared of the equivalent dummy-variable regression.
  double r2_lsdv = 0.0;
  /// Adjusted LSDV R-squared, counting absorbed effects as parameters.
  double r2_adj = 0.0;

  /// Within residuals, entity-major.
  Eigen::VectorXd residuals;
  Eigen::VectorXd entity_effects;
  Eigen::VectorXd time_effects;

  /// Design matrix the coefficients were solved on and its cluster labels.
  Eigen::MatrixXd design;
  std::vector<int> clusters;

  std::size_t term_index(const std::string& name) const;
  double coef(const std::string& name) const { return coefficients(static_cast<Eigen::Index>(term_index(name))); }
  double se(const std::string& name) const { return std_errors(static_cast<Eigen::Index>(term_index(name))); }
  double pvalue(const std::string& name) const { return p_values(static_cast<Eigen::Index>(term_index(name))); }
};

/// Demeans each named variable by entity and/or year means (two-way adds the
/// grand mean back). Columns follow `vars`, rows are entity-major.
Eigen::MatrixXd within_transform(const PanelDataset& ds, const std::vector<std::string>& vars, bool entity_effects,
                                 bool time_effects);

RegressionResult fe_estimate(const PanelDataset& ds, const ModelSpec& spec);

/// Entity-clustered sandwich with the G/(G-1) * (N-1)/(N-K) small-sample factor.
Eigen::MatrixXd cluster_robust_vcov(const Eigen::MatrixXd& design, const Eigen::VectorXd& residuals,
                                    std::span<const int> clusters);
Eigen::MatrixXd cluster_robust_vcov(const RegressionResult& res);
Eigen::MatrixXd cluster_robust_vcov(const RegressionResult& res, const PanelDataset& ds);

/// "***" for p < 0.01, "**" for p < 0.05, "*" for p < 0.1.
std::string significance_stars(double p);

namespace detail {
/// (X'X)^{-1} through a QR factorization of X; throws SingularBread.
Eigen::MatrixXd inverse_gram(const Eigen::MatrixXd& x);
/// Examines columns in order and throws RankDeficient naming the first
/// column that is (numerically) spanned by the ones before it.
void check_full_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& names);
}  // namespace detail

}  // namespace pm
