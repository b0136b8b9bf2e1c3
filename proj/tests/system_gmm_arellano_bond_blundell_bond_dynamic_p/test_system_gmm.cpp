#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "panelmetrics/error.hpp"
#include "panelmetrics/synthetic.hpp"
#include "panelmetrics/system_gmm.hpp"

namespace {

pm::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const pm::Error& e) {
    return e.code();
  }
  FAIL("expected a pm::Error");
  return pm::ErrorCode::Io;
}

pm::PanelDataset ar1_panel(std::uint64_t seed, std::size_t N, std::size_t T, double rho = 0.5, int k = 1) {
  pm::DgpConfig cfg;
  cfg.kind = pm::DgpKind::DynamicAr1;
  cfg.n_entities = N;
  cfg.n_years = T;
  cfg.seed = seed;
  cfg.params = {{"rho", rho}, {"k", static_cast<double>(k)}};
  return pm::generate(cfg).data;
}

/// Instrument columns counted from (period, lag) pairs, 1-based periods.
/// Difference rows exist for t = 3..T; y_{t-l} is usable when t - l >= 1.
/// Level rows exist for t = 2..T and use dy_{t-m} with m = lo - 1, usable
/// when t - m - 1 >= 1.
std::size_t enumerate_instruments(int T, int lo, int hi, bool collapse) {
  const int top = hi > 0 ? hi : T;
  std::size_t diff = 0, level = 0;
  if (collapse) {
    for (int l = lo; l <= top; ++l) {
      bool used = false;
      for (int t = 3; t <= T; ++t) used = used || t - l >= 1;
      diff += used;
    }
    bool used = false;
    for (int t = 2; t <= T; ++t) used = used || t - (lo - 1) - 1 >= 1;
    level = used;
  } else {
    for (int t = 3; t <= T; ++t)
      for (int l = lo; l <= top; ++l) diff += t - l >= 1;
    for (int t = 2; t <= T; ++t) level += t - (lo - 1) - 1 >= 1;
  }
  return diff + level + 1;  // + constant
}

}  // namespace

TEST_CASE("instrument counts for hand-enumerated layouts") {
  const auto ds4 = ar1_panel(1, 10, 4);
  pm::DynamicModelSpec spec{"y"};
  spec.min_lag = 2;
  spec.max_lag = 2;
  spec.collapse = true;
  auto sys = pm::build_instruments(ds4, spec);
  CHECK(sys.instrument_count() == 3);  // y_{t-2}, dy_{t-1}, cons
  spec.exogenous = {"x1"};
  sys = pm::build_instruments(ds4, spec);
  CHECK(sys.instrument_count() == 4);

  const auto ds5 = ar1_panel(1, 10, 5);
  pm::DynamicModelSpec un{"y"};
  un.collapse = false;
  un.max_lag = 0;
  un.level_equation = false;
  CHECK(pm::build_instruments(ds5, un).instrument_count() == 6);
}

TEST_CASE("instrument counts match enumeration for every T <= 8 and lag window") {
  for (int T = 4; T <= 8; ++T) {
    const auto ds = ar1_panel(2, 5, static_cast<std::size_t>(T));
    for (int lo = 2; lo <= T; ++lo) {
      for (int hi = lo; hi <= T + 1; ++hi) {
        for (int h : {hi, 0}) {
          pm::DynamicModelSpec spec{"y"};
          spec.min_lag = lo;
          spec.max_lag = h;
          spec.collapse = true;
          const auto c = pm::build_instruments(ds, spec).instrument_count();
          spec.collapse = false;
          const auto u = pm::build_instruments(ds, spec).instrument_count();
          CHECK(c == enumerate_instruments(T, lo, h, true));
          CHECK(u == enumerate_instruments(T, lo, h, false));
          CHECK(c <= u);
        }
      }
    }
  }
}

TEST_CASE("noise-free dynamic DGP is recovered") {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::size_t N = 20, T = 6;
  std::vector<double> y(N * T), x(N * T);
  for (std::size_t e = 0; e < N; ++e) {
    double prev = 3.0 * z(rng);
    for (std::size_t t = 0; t < T; ++t) {
      x[e * T + t] = z(rng);
      y[e * T + t] = (t == 0 ? prev : 0.5 * prev + x[e * T + t]);
      prev = y[e * T + t];
    }
  }
  const auto ds = testutil::make_panel(N, T, {{"y", y}, {"x", x}});
  for (int steps : {1, 2}) {
    pm::DynamicModelSpec spec{"y"};
    spec.exogenous = {"x"};
    spec.steps = steps;
    const auto r = pm::system_gmm_estimate(ds, spec);
    CHECK(std::abs(r.coef("L.y") - 0.5) <= 1e-6);
    CHECK(std::abs(r.coef("x") - 1.0) <= 1e-6);
  }
}

TEST_CASE("observation accounting on a 30x10 panel") {
  const auto ds = ar1_panel(3, 30, 10);
  pm::DynamicModelSpec spec{"y"};
  spec.exogenous = {"x1"};
  const auto r = pm::system_gmm_estimate(ds, spec);
  CHECK(r.n_obs == 270);
  CHECK(r.n_diff_obs == 240);
  spec.level_equation = false;
  CHECK(pm::system_gmm_estimate(ds, spec).n_obs == 240);
}

TEST_CASE("Hansen needs over-identification") {
  const auto ds = ar1_panel(4, 30, 6);
  pm::DynamicModelSpec spec{"y"};
  spec.level_equation = false;
  spec.min_lag = 2;
  spec.max_lag = 2;
  spec.steps = 1;
  const auto r = pm::system_gmm_estimate(ds, spec);
  CHECK_FALSE(r.hansen.has_value());
  CHECK(code_of([&] { pm::hansen_test(r); }) == pm::ErrorCode::ExactlyIdentified);
  spec.max_lag = 4;
  const auto over = pm::system_gmm_estimate(ds, spec);
  REQUIRE(over.hansen.has_value());
  CHECK(over.hansen->df == 2);
  CHECK(pm::hansen_test(over).p >= 0.0);
}

TEST_CASE("panels too short for a lag are refused") {
  const auto ds = ar1_panel(5, 10, 3);
  CHECK(code_of([&] { pm::system_gmm_estimate(ds, {"y"}); }) == pm::ErrorCode::TooShortPanel);
  pm::DynamicModelSpec bad{"y"};
  bad.min_lag = 1;
  CHECK(code_of([&] { pm::system_gmm_estimate(ar1_panel(5, 10, 6), bad); }) == pm::ErrorCode::InvalidArgument);
}

TEST_CASE("AR(2) needs enough differenced periods") {
  const auto ds = ar1_panel(6, 40, 4);
  pm::DynamicModelSpec spec{"y"};
  spec.max_lag = 2;
  const auto r = pm::system_gmm_estimate(ds, spec);
  CHECK(r.ar1.has_value());
  CHECK_FALSE(r.ar2.has_value());
  CHECK(code_of([&] { pm::ar_test(r, 2); }) == pm::ErrorCode::InsufficientPeriods);
}

TEST_CASE("AR(1) statistic is negative under i.i.d. level errors") {
  int negative = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto ds = ar1_panel(1000 + static_cast<std::uint64_t>(s), 100, 6);
    pm::DynamicModelSpec spec{"y"};
    spec.exogenous = {"x1"};
    const auto r = pm::system_gmm_estimate(ds, spec);
    negative += r.ar1 && r.ar1->z < 0.0;
  }
  CHECK(negative >= 95);
}

TEST_CASE("scale equivariance in the dependent variable") {
  const auto ds = ar1_panel(7, 50, 7);
  auto y = ds.column("y");
  for (auto& v : y) v *= 3.5;
  const auto scaled = ds.with_column("y", y);
  pm::DynamicModelSpec spec{"y"};
  spec.exogenous = {"x1"};
  const auto a = pm::system_gmm_estimate(ds, spec);
  const auto b = pm::system_gmm_estimate(scaled, spec);
  CHECK(std::abs(a.coef("L.y") - b.coef("L.y")) <= 1e-8);
  CHECK(std::abs(3.5 * a.coef("x1") - b.coef("x1")) <= 1e-8);
  CHECK(std::abs(3.5 * a.se("x1") - b.se("x1")) <= 1e-8);
  REQUIRE(a.hansen.has_value());
  CHECK(std::abs(a.hansen->statistic - b.hansen->statistic) <= 1e-8);
}

TEST_CASE("time dummies and lag names") {
  const auto ds = ar1_panel(8, 30, 6);
  pm::DynamicModelSpec spec{"y"};
  spec.time_dummies = true;
  const auto r = pm::system_gmm_estimate(ds, spec);
  CHECK(r.terms.front() == "L.y");
  CHECK(r.terms.back() == "cons");
  CHECK(std::find(r.terms.begin(), r.terms.end(), "yr2015") != r.terms.end());
  CHECK(std::find(r.terms.begin(), r.terms.end(), "yr2014") == r.terms.end());
  CHECK(pm::lag_name("C", 2) == "L2.C");
}

TEST_CASE("Windmeijer-corrected two-step SEs exceed the uncorrected ones on average") {
  double corrected = 0.0, one_step = 0.0;
  for (int s = 0; s < 20; ++s) {
    const auto ds = ar1_panel(500 + static_cast<std::uint64_t>(s), 60, 8);
    pm::DynamicModelSpec spec{"y"};
    spec.exogenous = {"x1"};
    spec.collapse = false;
    spec.max_lag = 0;
    const auto r2 = pm::system_gmm_estimate(ds, spec);
    spec.steps = 1;
    const auto r1 = pm::system_gmm_estimate(ds, spec);
    corrected += r2.se("L.y");
    one_step += r1.se("L.y");
    CHECK(r2.se("L.y") > 0.0);
  }
  CHECK(corrected > 0.5 * one_step);
}
