#include "panelmetrics/system_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "panelmetrics/error.hpp"
#include "panelmetrics/fixed_effects.hpp"
#include "panelmetrics/stats.hpp"

namespace pm {

namespace {

using Series = std::vector<double>;  // entity-major, n_entities * T

struct Column {
  std::string name;
  std::function<double(std::size_t entity, RowKind kind, int t)> value;
};

struct WeightFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd w;
};

WeightFactor invert_weight(const Eigen::MatrixXd& m_in, const char* what, std::vector<std::string>& warnings) {
  const Eigen::MatrixXd m = 0.5 * (m_in + m_in.transpose());
  const auto dim = m.rows();
  WeightFactor f;
  f.llt.compute(m);
  if (f.llt.info() != Eigen::Success || !(f.llt.rcond() > 1e-14)) {
    const double ridge = 1e-10 * m.trace() / static_cast<double>(dim);
    if (!(ridge > 0.0)) throw Error(ErrorCode::SingularWeighting, std::string(what) + " is zero");
    warnings.push_back(std::string(what) + " is singular; added a ridge of " + std::to_string(ridge));
    f.llt.compute(m + ridge * Eigen::MatrixXd::Identity(dim, dim));
    if (f.llt.info() != Eigen::Success || !(f.llt.rcond() > 1e-16))
      throw Error(ErrorCode::SingularWeighting, std::string(what) + " stays singular after the ridge");
  }
  f.w = f.llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  f.w = 0.5 * (f.w + f.w.transpose());
  return f;
}

struct Fit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd bread;       // (X'Z W Z'X)^{-1}
  Eigen::MatrixXd projection;  // bread X'Z W
};

Fit solve_gmm(const Eigen::MatrixXd& szx, const Eigen::VectorXd& szy, const WeightFactor& wf,
              const std::vector<std::string>& names) {
  // With M = L L' and W = M^{-1}: minimise |L^{-1}(Z'y - Z'X b)|^2.
  const auto lower = wf.llt.matrixL();
  const Eigen::MatrixXd b = lower.solve(szx);
  const Eigen::VectorXd c = lower.solve(szy);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
  qr.setThreshold(1e-12);
  if (qr.rank() < b.cols()) {
    detail::check_full_rank(b, names);
    throw Error(ErrorCode::RankDeficient, "GMM normal matrix is rank deficient");
  }
  Fit fit;
  fit.beta = qr.solve(c);
  fit.bread = detail::inverse_gram(b);
  fit.projection = fit.bread * szx.transpose() * wf.w;
  return fit;
}

std::vector<Eigen::VectorXd> residuals_of(const GmmSystem& sys, const Eigen::VectorXd& beta) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(sys.blocks.size());
  for (const auto& b : sys.blocks) out.push_back(b.y - b.x * beta);
  return out;
}

Eigen::MatrixXd moment_covariance(const GmmSystem& sys, const std::vector<Eigen::VectorXd>& resid) {
  const auto L = static_cast<Eigen::Index>(sys.instrument_count());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(L, L);
  for (std::size_t i = 0; i < sys.blocks.size(); ++i) {
    const Eigen::VectorXd g = sys.blocks[i].z.transpose() * resid[i];
    omega.noalias() += g * g.transpose();
  }
  return omega;
}

Eigen::VectorXd moment_sum(const GmmSystem& sys, const std::vector<Eigen::VectorXd>& resid) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.instrument_count()));
  for (std::size_t i = 0; i < sys.blocks.size(); ++i) g += sys.blocks[i].z.transpose() * resid[i];
  return g;
}

/// Initial weighting: the MA(1) covariance of differenced errors (2 on the
/// diagonal, -1 between consecutive periods) and an identity for levels.
Eigen::MatrixXd initial_h(const EntityBlock& b) {
  const auto r = static_cast<Eigen::Index>(b.kinds.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index a = 0; a < r; ++a) {
    const auto ka = b.kinds[static_cast<std::size_t>(a)];
    h(a, a) = ka == RowKind::Difference ? 2.0 : 1.0;
    if (ka != RowKind::Difference) continue;
    for (Eigen::Index c = 0; c < r; ++c) {
      if (c == a || b.kinds[static_cast<std::size_t>(c)] != RowKind::Difference) continue;
      if (std::abs(b.periods[static_cast<std::size_t>(a)] - b.periods[static_cast<std::size_t>(c)]) == 1) h(a, c) = -1.0;
    }
  }
  return h;
}

ZTest ar_statistic(const GmmSystem& sys, const std::vector<Eigen::VectorXd>& resid, const Eigen::MatrixXd& projection,
                   const Eigen::MatrixXd& vcov, int order) {
  const auto K = static_cast<Eigen::Index>(sys.parameter_count());
  const auto L = static_cast<Eigen::Index>(sys.instrument_count());
  double numerator = 0.0;
  double own = 0.0;
  Eigen::VectorXd wx = Eigen::VectorXd::Zero(K);       // sum_i X*_i' w_i
  Eigen::VectorXd zu_uw = Eigen::VectorXd::Zero(L);    // sum_i Z_i' u_i (u*_i' w_i)
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sys.blocks.size(); ++i) {
    const auto& b = sys.blocks[i];
    double wu = 0.0;
    for (std::size_t r = 0; r < b.kinds.size(); ++r) {
      if (b.kinds[r] != RowKind::Difference) continue;
      for (std::size_t s = 0; s < b.kinds.size(); ++s) {
        if (b.kinds[s] != RowKind::Difference || b.periods[s] != b.periods[r] - order) continue;
        const double w = resid[i](static_cast<Eigen::Index>(s));
        wu += w * resid[i](static_cast<Eigen::Index>(r));
        wx += b.x.row(static_cast<Eigen::Index>(r)).transpose() * w;
        ++pairs;
      }
    }
    numerator += wu;
    own += wu * wu;
    zu_uw += b.z.transpose() * resid[i] * wu;
  }
  if (pairs == 0)
    throw Error(ErrorCode::InsufficientPeriods,
                "no differenced residual pairs at lag " + std::to_string(order));
  const double variance = own - 2.0 * wx.dot(projection * zu_uw) + wx.dot(vcov * wx);
  ZTest out;
  out.z = variance > 0.0 ? numerator / std::sqrt(variance) : std::nan("");
  out.p = stats::normal_two_sided_p(out.z);
  return out;
}

}  // namespace

std::string lag_name(const std::string& var, int lag) {
  return (lag == 1 ? std::string("L.") : "L" + std::to_string(lag) + ".") + var;
}

Eigen::MatrixXd GmmSystem::stacked_instruments() const {
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.z.rows();
  Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(instrument_count()));
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleRows(at, b.z.rows()) = b.z;
    at += b.z.rows();
  }
  return out;
}

std::size_t GmmResult::term_index(const std::string& name) const {
  auto it = std::find(terms.begin(), terms.end(), name);
  if (it == terms.end()) throw Error(ErrorCode::MissingColumn, "term '" + name + "' not in GMM result");
  return static_cast<std::size_t>(it - terms.begin());
}

GmmSystem build_instruments(const PanelDataset& ds, const DynamicModelSpec& spec) {
  if (spec.lag_order < 1) throw Error(ErrorCode::InvalidArgument, "lag order must be positive");
  if (spec.min_lag < 2) throw Error(ErrorCode::InvalidArgument, "GMM-style instruments need min_lag >= 2");
  if (spec.max_lag > 0 && spec.max_lag < spec.min_lag) throw Error(ErrorCode::InvalidArgument, "max_lag < min_lag");
  if (spec.steps != 1 && spec.steps != 2) throw Error(ErrorCode::InvalidArgument, "steps must be 1 or 2");

  const int T = static_cast<int>(ds.n_years());
  const int p = spec.lag_order;
  if (T < p + 3)
    throw Error(ErrorCode::TooShortPanel, std::to_string(T) + " periods; a lag-" + std::to_string(p) +
                                              " model needs at least " + std::to_string(p + 3));
  const std::size_t G = ds.n_entities();
  const bool levels = spec.level_equation;

  auto fetch = [&](const std::string& name) {
    if (name == spec.dependent) throw Error(ErrorCode::InvalidArgument, "dependent variable listed as a regressor");
    return ds.column(name);
  };
  const Series y = ds.column(spec.dependent);
  std::vector<Series> exog;
  for (const auto& n : spec.exogenous) exog.push_back(fetch(n));
  std::vector<Series> pred;
  for (const auto& n : spec.predetermined) pred.push_back(fetch(n));

  auto at = [T](const Series& s, std::size_t e, int t) { return s[e * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)]; };

  // Time dummies: drop the first period that could be collinear with the constant.
  std::vector<int> dummy_periods;
  if (spec.time_dummies) {
    const int first = (levels && spec.intercept) ? p + 1 : (levels ? p : p + 2);
    for (int s = first; s < T; ++s) dummy_periods.push_back(s);
  }

  // Regressors as level functions of (entity, t); differenced rows use level(t) - level(t-1).
  std::vector<Column> regs;
  for (int l = 1; l <= p; ++l)
    regs.push_back({lag_name(spec.dependent, l), [&, l](std::size_t e, RowKind, int t) { return at(y, e, t - l); }});
  for (std::size_t k = 0; k < exog.size(); ++k)
    regs.push_back({spec.exogenous[k], [&, k](std::size_t e, RowKind, int t) { return at(exog[k], e, t); }});
  for (std::size_t k = 0; k < pred.size(); ++k)
    regs.push_back({spec.predetermined[k], [&, k](std::size_t e, RowKind, int t) { return at(pred[k], e, t); }});
  for (int s : dummy_periods)
    regs.push_back({"yr" + std::to_string(ds.year_at(static_cast<std::size_t>(s))),
                    [s](std::size_t, RowKind, int t) { return t == s ? 1.0 : 0.0; }});
  const bool constant = levels && spec.intercept;

  std::vector<Column> inst;
  auto gmm_style = [&](const std::string& name, const Series* s, int lo, int hi) {
    const int hi_eff = hi > 0 ? hi : T;
    if (spec.collapse) {
      for (int l = lo; l <= hi_eff && l <= T - 1; ++l)
        inst.push_back({name + "_lag" + std::to_string(l) + "_diff", [&, s, l](std::size_t e, RowKind kind, int t) {
                          return kind == RowKind::Difference && t - l >= 0 ? at(*s, e, t - l) : 0.0;
                        }});
    } else {
      for (int t0 = p + 1; t0 < T; ++t0)
        for (int l = lo; l <= hi_eff && t0 - l >= 0; ++l)
          inst.push_back({name + "_lag" + std::to_string(l) + "_t" + std::to_string(ds.year_at(static_cast<std::size_t>(t0))),
                          [&, s, l, t0](std::size_t e, RowKind kind, int t) {
                            return kind == RowKind::Difference && t == t0 ? at(*s, e, t - l) : 0.0;
                          }});
    }
    if (!levels) return;
    const int m = lo - 1;  // level equation uses the first difference at lag lo-1
    auto available = [m](int t) { return t - m - 1 >= 0; };
    if (spec.collapse) {
      bool any = false;
      for (int t = p; t < T; ++t) any = any || available(t);
      if (any)
        inst.push_back({"D." + name + "_lag" + std::to_string(m) + "_lev", [&, s, m, available](std::size_t e, RowKind kind, int t) {
                          return kind == RowKind::Level && available(t) ? at(*s, e, t - m) - at(*s, e, t - m - 1) : 0.0;
                        }});
    } else {
      for (int t0 = p; t0 < T; ++t0) {
        if (!available(t0)) continue;
        inst.push_back({"D." + name + "_lag" + std::to_string(m) + "_t" + std::to_string(ds.year_at(static_cast<std::size_t>(t0))),
                        [&, s, m, t0](std::size_t e, RowKind kind, int t) {
                          return kind == RowKind::Level && t == t0 ? at(*s, e, t - m) - at(*s, e, t - m - 1) : 0.0;
                        }});
      }
    }
  };
  gmm_style(spec.dependent, &y, spec.min_lag, spec.max_lag);
  for (std::size_t k = 0; k < pred.size(); ++k)
    gmm_style(spec.predetermined[k], &pred[k], spec.min_lag - 1, spec.max_lag > 0 ? spec.max_lag - 1 : 0);
  // IV-style: each strictly exogenous regressor (and dummy) instruments itself.
  for (std::size_t k = static_cast<std::size_t>(p); k < regs.size(); ++k) {
    if (k >= static_cast<std::size_t>(p) + exog.size() && k < static_cast<std::size_t>(p) + exog.size() + pred.size()) continue;
    const Column reg = regs[k];
    inst.push_back({reg.name, [reg](std::size_t e, RowKind kind, int t) {
                      return kind == RowKind::Level ? reg.value(e, kind, t) : reg.value(e, kind, t) - reg.value(e, kind, t - 1);
                    }});
  }
  if (constant) inst.push_back({"cons", [](std::size_t, RowKind kind, int) { return kind == RowKind::Level ? 1.0 : 0.0; }});

  GmmSystem sys;
  for (const auto& r : regs) sys.regressor_names.push_back(r.name);
  if (constant) sys.regressor_names.push_back("cons");
  for (const auto& c : inst) sys.instrument_names.push_back(c.name);

  const auto K = static_cast<Eigen::Index>(sys.regressor_names.size());
  const auto L = static_cast<Eigen::Index>(inst.size());
  for (std::size_t e = 0; e < G; ++e) {
    EntityBlock b;
    for (int t = p + 1; t < T; ++t) {
      b.kinds.push_back(RowKind::Difference);
      b.periods.push_back(t);
    }
    if (levels)
      for (int t = p; t < T; ++t) {
        b.kinds.push_back(RowKind::Level);
        b.periods.push_back(t);
      }
    const auto rows = static_cast<Eigen::Index>(b.kinds.size());
    b.x.resize(rows, K);
    b.y.resize(rows);
    b.z.resize(rows, L);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const RowKind kind = b.kinds[static_cast<std::size_t>(r)];
      const int t = b.periods[static_cast<std::size_t>(r)];
      const bool diff = kind == RowKind::Difference;
      b.y(r) = diff ? at(y, e, t) - at(y, e, t - 1) : at(y, e, t);
      for (std::size_t k = 0; k < regs.size(); ++k) {
        const double lvl = regs[k].value(e, kind, t);
        b.x(r, static_cast<Eigen::Index>(k)) = diff ? lvl - regs[k].value(e, kind, t - 1) : lvl;
      }
      if (constant) b.x(r, K - 1) = diff ? 0.0 : 1.0;
      for (Eigen::Index c = 0; c < L; ++c) b.z(r, c) = inst[static_cast<std::size_t>(c)].value(e, kind, t);
    }
    sys.blocks.push_back(std::move(b));
  }
  sys.n_diff_rows = G * static_cast<std::size_t>(T - p - 1);
  sys.n_level_rows = levels ? G * static_cast<std::size_t>(T - p) : 0;
  return sys;
}

GmmResult system_gmm_estimate(const PanelDataset& ds, const DynamicModelSpec& spec) {
  GmmResult res;
  res.spec = spec;
  res.system = build_instruments(ds, spec);
  const GmmSystem& sys = res.system;
  res.terms = sys.regressor_names;
  const auto K = static_cast<Eigen::Index>(sys.parameter_count());
  const auto L = static_cast<Eigen::Index>(sys.instrument_count());
  res.instrument_count = sys.instrument_count();
  res.n_entities = sys.blocks.size();
  res.n_diff_obs = sys.n_diff_rows;
  res.n_obs = spec.level_equation ? sys.n_level_rows : sys.n_diff_rows;
  if (L < K)
    throw Error(ErrorCode::RankDeficient, "under-identified: " + std::to_string(L) + " instruments for " +
                                              std::to_string(K) + " parameters");
  if (sys.instrument_count() >= res.n_entities)
    res.warnings.push_back("instrument count " + std::to_string(L) + " is not below the entity count " +
                           std::to_string(res.n_entities));

  Eigen::MatrixXd szx = Eigen::MatrixXd::Zero(L, K);
  Eigen::VectorXd szy = Eigen::VectorXd::Zero(L);
  Eigen::MatrixXd zhz = Eigen::MatrixXd::Zero(L, L);
  double moment_scale = 0.0;
  std::vector<Eigen::MatrixXd> zx(sys.blocks.size());
  for (std::size_t i = 0; i < sys.blocks.size(); ++i) {
    const auto& b = sys.blocks[i];
    zx[i] = b.z.transpose() * b.x;
    szx += zx[i];
    const Eigen::VectorXd zy = b.z.transpose() * b.y;
    szy += zy;
    moment_scale += zy.squaredNorm();
    zhz.noalias() += b.z.transpose() * initial_h(b) * b.z;
  }

  const WeightFactor w1 = invert_weight(zhz, "initial weighting matrix", res.warnings);
  const Fit one = solve_gmm(szx, szy, w1, sys.regressor_names);
  const auto u1 = residuals_of(sys, one.beta);
  const Eigen::MatrixXd omega1 = moment_covariance(sys, u1);
  const Eigen::MatrixXd v1 = one.projection * omega1 * one.projection.transpose();
  res.one_step_coefficients = one.beta;

  // A perfect one-step fit leaves no moment covariance to re-weight with.
  const bool degenerate = !(omega1.trace() > 1e-20 * moment_scale);
  WeightFactor w2 = w1;
  if (degenerate)
    res.warnings.push_back("one-step residuals are zero; two-step reuses the initial weighting");
  else
    w2 = invert_weight(omega1, "two-step weighting matrix", res.warnings);
  const Fit two = solve_gmm(szx, szy, w2, sys.regressor_names);
  const auto u2 = residuals_of(sys, two.beta);
  const Eigen::VectorXd g2 = moment_sum(sys, u2);

  if (spec.steps == 1) {
    res.coefficients = one.beta;
    res.vcov = v1;
    res.residuals = u1;
    res.projection = one.projection;
  } else {
    // Windmeijer finite-sample correction of the two-step variance.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(K, K);
    if (!degenerate) {
      const Eigen::VectorXd wg = w2.w * g2;
      for (Eigen::Index k = 0; k < K; ++k) {
        Eigen::VectorXd dv = Eigen::VectorXd::Zero(L);
        for (std::size_t i = 0; i < sys.blocks.size(); ++i) {
          const Eigen::VectorXd a = sys.blocks[i].z.transpose() * u1[i];
          const auto bk = zx[i].col(k);
          dv += bk * a.dot(wg) + a * bk.dot(wg);
        }
        d.col(k) = two.projection * dv;
      }
    }
    const Eigen::MatrixXd& a2 = two.bread;
    Eigen::MatrixXd vc = a2 + d * a2 + a2 * d.transpose() + d * v1 * d.transpose();
    res.coefficients = two.beta;
    res.vcov = 0.5 * (vc + vc.transpose());
    res.residuals = u2;
    res.projection = two.projection;
  }
  res.std_errors = res.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  res.z_stats = res.coefficients.cwiseQuotient(res.std_errors);
  res.p_values.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) res.p_values(k) = stats::normal_two_sided_p(res.z_stats(k));

  const int df = static_cast<int>(L - K);
  if (df >= 1) {
    OverIdTest h;
    h.statistic = degenerate ? 0.0 : g2.dot(w2.w * g2);
    h.df = df;
    h.p = stats::chi2_upper_p(h.statistic, df);
    res.hansen = h;

    double diff_ss = 0.0;
    std::size_t diff_n = 0;
    for (std::size_t i = 0; i < sys.blocks.size(); ++i)
      for (std::size_t r = 0; r < sys.blocks[i].kinds.size(); ++r)
        if (sys.blocks[i].kinds[r] == RowKind::Difference) {
          diff_ss += u1[i](static_cast<Eigen::Index>(r)) * u1[i](static_cast<Eigen::Index>(r));
          ++diff_n;
        }
    const double sigma2 = diff_ss / (2.0 * static_cast<double>(diff_n));
    if (sigma2 > 0.0) {
      const Eigen::VectorXd g1 = moment_sum(sys, u1);
      OverIdTest s;
      s.statistic = g1.dot(w1.w * g1) / sigma2;
      s.df = df;
      s.p = stats::chi2_upper_p(s.statistic, df);
      res.sargan = s;
    }
  }

  for (int order : {1, 2}) {
    try {
      auto t = ar_statistic(sys, res.residuals, res.projection, res.vcov, order);
      (order == 1 ? res.ar1 : res.ar2) = t;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientPeriods) throw;
    }
  }
  return res;
}

ZTest ar_test(const GmmResult& res, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "AR test order must be positive");
  return ar_statistic(res.system, res.residuals, res.projection, res.vcov, order);
}

OverIdTest hansen_test(const GmmResult& res) {
  if (res.instrument_count <= res.terms.size())
    throw Error(ErrorCode::ExactlyIdentified, std::to_string(res.instrument_count) + " instruments for " +
                                                  std::to_string(res.terms.size()) + " parameters");
  if (!res.hansen) throw Error(ErrorCode::ExactlyIdentified, "Hansen statistic unavailable");
  return *res.hansen;
}

}  // namespace pm
