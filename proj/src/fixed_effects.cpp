#include "panelmetrics/fixed_effects.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "panelmetrics/error.hpp"
#include "panelmetrics/stats.hpp"

namespace pm {

namespace {

constexpr double kRankTolerance = 1e-9;

/// Demeans a single entity-major column.
Eigen::VectorXd demean(const Eigen::VectorXd& x, std::size_t n_entities, std::size_t n_years, bool entity_effects,
                       bool time_effects) {
  const auto G = static_cast<Eigen::Index>(n_entities);
  const auto T = static_cast<Eigen::Index>(n_years);
  Eigen::Map<const Eigen::MatrixXd> grid(x.data(), T, G);  // column g = entity g
  const Eigen::VectorXd entity_mean = grid.colwise().mean().transpose();
  const Eigen::VectorXd year_mean = grid.rowwise().mean();
  const double grand = x.mean();
  Eigen::VectorXd out(x.size());
  Eigen::Map<Eigen::MatrixXd> o(out.data(), T, G);
  for (Eigen::Index g = 0; g < G; ++g) {
    for (Eigen::Index t = 0; t < T; ++t) {
      double v = grid(t, g);
      if (entity_effects && time_effects)
        v = v - entity_mean(g) - year_mean(t) + grand;
      else if (entity_effects)
        v -= entity_mean(g);
      else if (time_effects)
        v -= year_mean(t);
      o(t, g) = v;
    }
  }
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::size_t RegressionResult::term_index(const std::string& name) const {
  auto it = std::find(terms.begin(), terms.end(), name);
  if (it == terms.end()) throw Error(ErrorCode::MissingColumn, "term '" + name + "' not in regression result");
  return static_cast<std::size_t>(it - terms.begin());
}

namespace detail {

Eigen::MatrixXd inverse_gram(const Eigen::MatrixXd& x) {
  const Eigen::Index k = x.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, r.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < k; ++j)
    if (!(std::abs(r(j, j)) > 1e-13 * scale)) throw Error(ErrorCode::SingularBread, "X'X is singular");
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  return r_inv * r_inv.transpose();
}

void check_full_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double norm = x.col(k).norm();
    const std::string& name = names[static_cast<std::size_t>(k)];
    if (!(norm > 1e-12 * std::sqrt(static_cast<double>(x.rows()))))
      throw Error(ErrorCode::RankDeficient, "column '" + name + "' has no variation left after the fixed-effect transform");
    if (k == 0) continue;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x.leftCols(k));
    const Eigen::VectorXd fitted = x.leftCols(k) * qr.solve(x.col(k));
    if ((x.col(k) - fitted).norm() <= kRankTolerance * norm)
      throw Error(ErrorCode::RankDeficient, "column '" + name + "' is collinear with earlier columns");
  }
}

}  // namespace detail

Eigen::MatrixXd within_transform(const PanelDataset& ds, const std::vector<std::string>& vars, bool entity_effects,
                                 bool time_effects) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ds.n_obs()), static_cast<Eigen::Index>(vars.size()));
  for (std::size_t j = 0; j < vars.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) =
        demean(to_vector(ds.column(vars[j])), ds.n_entities(), ds.n_years(), entity_effects, time_effects);
  return out;
}

RegressionResult fe_estimate(const PanelDataset& ds, const ModelSpec& spec) {
  if (spec.regressors.empty()) throw Error(ErrorCode::InvalidArgument, "model needs at least one regressor");
  if (std::find(spec.regressors.begin(), spec.regressors.end(), spec.dependent) != spec.regressors.end())
    throw Error(ErrorCode::InvalidArgument, "dependent variable '" + spec.dependent + "' listed as a regressor");
  {
    auto sorted = spec.regressors;
    std::sort(sorted.begin(), sorted.end());
    if (auto it = std::adjacent_find(sorted.begin(), sorted.end()); it != sorted.end())
      throw Error(ErrorCode::RankDeficient, "regressor '" + *it + "' listed twice");
  }

  const std::size_t G = ds.n_entities();
  const std::size_t T = ds.n_years();
  const auto N = static_cast<Eigen::Index>(ds.n_obs());
  const auto k = static_cast<Eigen::Index>(spec.regressors.size());
  const bool any_effects = spec.entity_effects || spec.time_effects;

  const Eigen::VectorXd y = to_vector(ds.column(spec.dependent));
  Eigen::MatrixXd x_raw(N, k);
  for (Eigen::Index j = 0; j < k; ++j) x_raw.col(j) = to_vector(ds.column(spec.regressors[static_cast<std::size_t>(j)]));

  Eigen::VectorXd y_dm = y;
  Eigen::MatrixXd x_dm = x_raw;
  if (any_effects) {
    y_dm = demean(y, G, T, spec.entity_effects, spec.time_effects);
    for (Eigen::Index j = 0; j < k; ++j) x_dm.col(j) = demean(x_raw.col(j), G, T, spec.entity_effects, spec.time_effects);
  }

  RegressionResult res;
  res.spec = spec;
  res.terms = spec.regressors;
  if (spec.intercept) res.terms.push_back("cons");
  const Eigen::Index K = static_cast<Eigen::Index>(res.terms.size());

  // Rank is judged on the purely demeaned columns; a regressor absorbed by the
  // effects would otherwise look like a copy of the constant.
  {
    Eigen::MatrixXd probe = x_dm;
    std::vector<std::string> names = spec.regressors;
    if (spec.intercept && !any_effects) {
      probe.conservativeResize(Eigen::NoChange, k + 1);
      probe.col(k).setOnes();
      names.push_back("cons");
    }
    detail::check_full_rank(probe, names);
  }

  Eigen::MatrixXd design(N, K);
  Eigen::VectorXd target = y_dm;
  if (any_effects && spec.intercept) {
    design.leftCols(k) = x_dm.rowwise() + x_raw.colwise().mean();
    target.array() += y.mean();
  } else {
    design.leftCols(k) = x_dm;
  }
  if (spec.intercept) design.col(k).setOnes();

  std::size_t lsdv_params = static_cast<std::size_t>(k);
  if (spec.entity_effects && spec.time_effects)
    lsdv_params += G + T - 1;
  else if (spec.entity_effects)
    lsdv_params += G;
  else if (spec.time_effects)
    lsdv_params += T;
  else if (spec.intercept)
    lsdv_params += 1;
  res.absorbed = lsdv_params - static_cast<std::size_t>(K);
  if (ds.n_obs() <= lsdv_params)
    throw Error(ErrorCode::TooFewObservations, std::to_string(ds.n_obs()) + " observations for " +
                                                   std::to_string(lsdv_params) + " parameters");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  res.coefficients = qr.solve(target);
  res.residuals = target - design * res.coefficients;
  res.design = design;
  res.clusters = ds.entity_ids();
  res.n_obs = ds.n_obs();
  res.n_entities = G;
  res.n_years = T;
  res.df_resid = static_cast<double>(ds.n_obs() - lsdv_params);
  res.ssr = res.residuals.squaredNorm();

  const double tss = (y.array() - y.mean()).square().sum();
  const double within_tss = any_effects ? y_dm.squaredNorm() : tss;
  res.r2_within = within_tss > 0.0 ? 1.0 - res.ssr / within_tss : std::nan("");
  res.r2_lsdv = tss > 0.0 ? 1.0 - res.ssr / tss : std::nan("");
  res.r2_adj = tss > 0.0 ? 1.0 - (1.0 - res.r2_lsdv) * (static_cast<double>(N) - 1.0) / res.df_resid : std::nan("");

  if (spec.vcov == VcovKind::ClusterEntity) {
    if (G < 2) throw Error(ErrorCode::InvalidArgument, "clustered covariance needs at least two entities");
    res.vcov = cluster_robust_vcov(design, res.residuals, res.clusters);
    res.df_inference = static_cast<double>(G) - 1.0;
  } else {
    res.vcov = detail::inverse_gram(design) * (res.ssr / res.df_resid);
    res.df_inference = res.df_resid;
  }
  res.std_errors = res.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  res.t_stats = res.coefficients.cwiseQuotient(res.std_errors);
  res.p_values.resize(K);
  for (Eigen::Index j = 0; j < K; ++j) res.p_values(j) = stats::t_two_sided_p(res.t_stats(j), res.df_inference);

  // Effects from the raw-scale residual y - X b.
  const Eigen::VectorXd slopes = res.coefficients.head(k);
  const Eigen::VectorXd level = y - x_raw * slopes;
  Eigen::Map<const Eigen::MatrixXd> grid(level.data(), static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(G));
  const double cons = spec.intercept ? res.coefficients(k) : 0.0;
  const double grand = level.mean();
  if (spec.entity_effects) {
    res.entity_effects = grid.colwise().mean().transpose();
    res.entity_effects.array() -= spec.time_effects ? grand : cons;
  }
  if (spec.time_effects) {
    res.time_effects = grid.rowwise().mean();
    res.time_effects.array() -= spec.entity_effects ? grand : cons;
  }
  return res;
}

Eigen::MatrixXd cluster_robust_vcov(const Eigen::MatrixXd& design, const Eigen::VectorXd& residuals,
                                    std::span<const int> clusters) {
  const Eigen::Index N = design.rows();
  const Eigen::Index K = design.cols();
  if (residuals.size() != N || static_cast<Eigen::Index>(clusters.size()) != N)
    throw Error(ErrorCode::DimensionMismatch, "design, residuals and cluster labels differ in length");
  const Eigen::MatrixXd bread = detail::inverse_gram(design);

  std::map<int, Eigen::VectorXd> scores;
  for (Eigen::Index i = 0; i < N; ++i) {
    auto [it, inserted] = scores.try_emplace(clusters[static_cast<std::size_t>(i)], Eigen::VectorXd::Zero(K));
    it->second += design.row(i).transpose() * residuals(i);
  }
  const double G = static_cast<double>(scores.size());
  if (G < 2) throw Error(ErrorCode::InvalidArgument, "clustered covariance needs at least two clusters");
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(K, K);
  for (const auto& [id, s] : scores) meat.noalias() += s * s.transpose();
  const double n = static_cast<double>(N);
  const double factor = G / (G - 1.0) * (n - 1.0) / (n - static_cast<double>(K));
  Eigen::MatrixXd v = factor * bread * meat * bread;
  return 0.5 * (v + v.transpose());
}

Eigen::MatrixXd cluster_robust_vcov(const RegressionResult& res) {
  return cluster_robust_vcov(res.design, res.residuals, res.clusters);
}

Eigen::MatrixXd cluster_robust_vcov(const RegressionResult& res, const PanelDataset& ds) {
  if (ds.n_obs() != res.n_obs || ds.n_entities() != res.n_entities)
    throw Error(ErrorCode::DimensionMismatch, "dataset does not match the regression sample");
  const auto ids = ds.entity_ids();
  return cluster_robust_vcov(res.design, res.residuals, ids);
}

std::string significance_stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

}  // namespace pm
