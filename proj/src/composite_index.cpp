#include "panelmetrics/composite_index.hpp"

#include <cmath>
#include <sstream>

#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"

namespace pm {

namespace {

void require_shape(const Eigen::MatrixXd& x, const char* what) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyMatrix, std::string(what) + ": empty indicator matrix");
  if (x.rows() < 2) throw Error(ErrorCode::EmptyMatrix, std::string(what) + ": need at least two observations");
}

void require_unit_sum(const Eigen::VectorXd& w, const char* what) {
  if ((w.array() < 0.0).any()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " has negative entries");
  if (std::abs(w.sum() - 1.0) > 1e-10)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " sums to " + csv::format_double(w.sum()) + ", not 1");
}

}  // namespace

IndicatorMatrix indicator_matrix(const PanelDataset& ds, const std::vector<VariableSpec>& indicators) {
  IndicatorMatrix m;
  m.data.resize(static_cast<Eigen::Index>(ds.n_obs()), static_cast<Eigen::Index>(indicators.size()));
  for (std::size_t j = 0; j < indicators.size(); ++j) {
    const auto col = ds.column(indicators[j].name);
    for (std::size_t i = 0; i < col.size(); ++i) m.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    m.names.push_back(indicators[j].name);
    m.directions.push_back(indicators[j].direction);
  }
  m.rows.reserve(ds.n_obs());
  for (std::size_t e = 0; e < ds.n_entities(); ++e)
    for (std::size_t t = 0; t < ds.n_years(); ++t) m.rows.push_back({ds.entities()[e], ds.year_at(t)});
  return m;
}

IndicatorMatrix normalize_minmax(const IndicatorMatrix& m) {
  if (m.data.rows() == 0) throw Error(ErrorCode::EmptyMatrix, "normalize_minmax: no observations");
  if (static_cast<std::size_t>(m.data.cols()) != m.directions.size())
    throw Error(ErrorCode::DimensionMismatch, "normalize_minmax: direction flags do not match columns");
  IndicatorMatrix out = m;
  for (Eigen::Index j = 0; j < m.data.cols(); ++j) {
    const double lo = m.data.col(j).minCoeff();
    const double hi = m.data.col(j).maxCoeff();
    const double range = hi - lo;
    if (!(range > 0.0)) {
      out.data.col(j).setConstant(0.5);
      continue;
    }
    if (m.directions[static_cast<std::size_t>(j)] == Direction::Positive)
      out.data.col(j) = (m.data.col(j).array() - lo) / range;
    else
      out.data.col(j) = (hi - m.data.col(j).array()) / range;
  }
  return out;
}

Eigen::VectorXd critic_weights(const Eigen::MatrixXd& x) {
  require_shape(x, "critic_weights");
  const Eigen::Index n = x.cols();
  const double m = static_cast<double>(x.rows());
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::VectorXd sd = (centered.colwise().squaredNorm().array() / (m - 1.0)).sqrt().transpose();

  Eigen::VectorXd score(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (mean(j) == 0.0) throw Error(ErrorCode::ZeroMeanColumn, "critic_weights: column " + std::to_string(j) + " has mean 0");
    double conflict = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      double r = 0.0;
      if (sd(j) > 0.0 && sd(k) > 0.0)
        r = centered.col(k).dot(centered.col(j)) / std::sqrt(centered.col(k).squaredNorm() * centered.col(j).squaredNorm());
      conflict += 1.0 - std::min(1.0, std::abs(r));
    }
    score(j) = sd(j) / mean(j) * conflict;
  }

  const double total = score.sum();
  if (total > 0.0) return score / total;

  const auto live = (sd.array() > 0.0).cast<double>();
  if (live.sum() == 0.0) throw Error(ErrorCode::DegenerateWeights, "critic_weights: every column is constant");
  return live.matrix() / live.sum();
}

Eigen::VectorXd entropy_weights(const Eigen::MatrixXd& x) {
  require_shape(x, "entropy_weights");
  const double k = 1.0 / std::log(static_cast<double>(x.rows()));
  Eigen::VectorXd divergence(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if ((x.col(j).array() < 0.0).any())
      throw Error(ErrorCode::InvalidArgument, "entropy_weights: column " + std::to_string(j) + " has negative entries");
    const double sum = x.col(j).sum();
    if (!(sum > 0.0))
      throw Error(ErrorCode::DegenerateWeights, "entropy_weights: column " + std::to_string(j) + " sums to zero");
    double h = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double p = x(i, j) / sum;
      if (p > 0.0) h -= p * std::log(p);
    }
    divergence(j) = std::max(0.0, 1.0 - k * h);
  }
  const double total = divergence.sum();
  if (!(total > 1e-14 * static_cast<double>(x.cols())))
    throw Error(ErrorCode::AllUniformColumns, "entropy_weights: every column has maximal entropy");
  return divergence / total;
}

WeightScheme combine_weights(const Eigen::VectorXd& critic, const Eigen::VectorXd& entropy, double beta) {
  if (critic.size() != entropy.size())
    throw Error(ErrorCode::DimensionMismatch, "combine_weights: " + std::to_string(critic.size()) + " vs " +
                                                  std::to_string(entropy.size()) + " weights");
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "beta must lie in [0, 1]");
  require_unit_sum(critic, "CRITIC weight vector");
  require_unit_sum(entropy, "entropy weight vector");
  WeightScheme w;
  w.critic = critic;
  w.entropy = entropy;
  w.beta = beta;
  if (beta == 1.0)
    w.combined = critic;
  else if (beta == 0.0)
    w.combined = entropy;
  else
    w.combined = beta * critic + (1.0 - beta) * entropy;
  return w;
}

Eigen::VectorXd composite_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights) {
  if (x.cols() != weights.size())
    throw Error(ErrorCode::DimensionMismatch, "composite_score: " + std::to_string(x.cols()) + " indicators vs " +
                                                  std::to_string(weights.size()) + " weights");
  return x * weights;
}

Eigen::VectorXd composite_score(const IndicatorMatrix& normalized, const WeightScheme& w) {
  return composite_score(normalized.data, w.combined);
}

IndexResult build_index(const IndicatorMatrix& raw, double beta) {
  IndexResult r;
  r.normalized = normalize_minmax(raw);
  r.weights = combine_weights(critic_weights(r.normalized.data), entropy_weights(r.normalized.data), beta);
  r.weights.names = raw.names;
  r.scores = composite_score(r.normalized, r.weights);
  return r;
}

IndexResult score_with_weights(const IndicatorMatrix& raw, const std::vector<std::string>& names,
                               const Eigen::VectorXd& combined) {
  if (names.size() != static_cast<std::size_t>(combined.size()))
    throw Error(ErrorCode::DimensionMismatch, "score_with_weights: names and weights differ in length");
  if ((combined.array() < 0.0).any()) throw Error(ErrorCode::InvalidArgument, "external weights must be non-negative");
  IndexResult r;
  r.normalized = normalize_minmax(raw);
  Eigen::VectorXd aligned(raw.names.size());
  for (std::size_t j = 0; j < raw.names.size(); ++j) {
    auto it = std::find(names.begin(), names.end(), raw.names[j]);
    if (it == names.end()) throw Error(ErrorCode::MissingColumn, "no external weight for indicator '" + raw.names[j] + "'");
    aligned(static_cast<Eigen::Index>(j)) = combined(it - names.begin());
  }
  r.weights.names = raw.names;
  r.weights.combined = aligned;
  r.weights.critic = Eigen::VectorXd::Constant(aligned.size(), std::nan(""));
  r.weights.entropy = Eigen::VectorXd::Constant(aligned.size(), std::nan(""));
  r.weights.beta = std::nan("");
  r.scores = composite_score(r.normalized.data, aligned);
  return r;
}

std::pair<std::vector<std::string>, Eigen::VectorXd> load_weights_csv(const std::string& path, const std::string& column) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw Error(ErrorCode::MissingColumn, path + ": empty weights file");
  const auto& header = rows.front();
  std::size_t name_col = header.size();
  std::size_t weight_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto h = csv::trim(header[c]);
    if (h == "indicator") name_col = c;
    if (h == column) weight_col = c;
  }
  if (name_col == header.size()) throw Error(ErrorCode::MissingColumn, path + ": no 'indicator' column");
  if (weight_col == header.size()) throw Error(ErrorCode::MissingColumn, path + ": no '" + column + "' column");
  std::vector<std::string> names;
  std::vector<double> weights;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(r + 1) + ": wrong field count");
    const auto w = csv::parse_double(rows[r][weight_col]);
    if (!w) throw Error(ErrorCode::NonNumericCell, path + ":" + std::to_string(r + 1) + ": weight '" + rows[r][weight_col] + "'");
    names.push_back(csv::trim(rows[r][name_col]));
    weights.push_back(*w);
  }
  return {names, Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()))};
}

std::string weights_to_csv(const WeightScheme& w) {
  std::ostringstream out;
  csv::write_row(out, {"indicator", "critic", "entropy", "combined"});
  auto cell = [](double v) { return std::isnan(v) ? std::string() : csv::format_double(v); };
  for (std::size_t j = 0; j < w.names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    csv::write_row(out, {w.names[j], cell(w.critic(i)), cell(w.entropy(i)), cell(w.combined(i))});
  }
  return out.str();
}

PanelDataset join_scores(const PanelDataset& ds, const IndexResult& result, const std::string& name) {
  if (result.scores.size() != static_cast<Eigen::Index>(ds.n_obs()) || result.normalized.rows.size() != ds.n_obs())
    throw Error(ErrorCode::DimensionMismatch, "join_scores: score series does not cover the panel");
  std::vector<double> values(ds.n_obs());
  for (std::size_t i = 0; i < ds.n_obs(); ++i) {
    const auto& key = result.normalized.rows[i];
    const std::size_t e = i / ds.n_years();
    const std::size_t t = i % ds.n_years();
    if (key.entity != ds.entities()[e] || key.year != ds.year_at(t))
      throw Error(ErrorCode::DimensionMismatch, "join_scores: row keys are not aligned with the panel");
    values[i] = result.scores(static_cast<Eigen::Index>(i));
  }
  return ds.with_column(name, values);
}

}  // namespace pm
