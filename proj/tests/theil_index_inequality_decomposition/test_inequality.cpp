#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "panelmetrics/error.hpp"
#include "panelmetrics/inequality.hpp"

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

pm::GroupShares shares(std::vector<double> v, std::vector<double> p) {
  pm::GroupShares g;
  g.value_shares = std::move(v);
  g.pop_shares = std::move(p);
  return g;
}

}  // namespace

TEST_CASE("two-group Theil examples") {
  CHECK(pm::theil_two_group(shares({0.5, 0.5}, {0.5, 0.5})) == 0.0);
  CHECK(pm::theil_two_group(shares({0.3, 0.7}, {0.3, 0.7})) == 0.0);
  const double t = pm::theil_two_group(shares({0.75, 0.25}, {0.5, 0.5}));
  CHECK(std::abs(t - 0.1308) < 1e-4);
  CHECK(t == doctest::Approx(0.75 * std::log(1.5) + 0.25 * std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("two-group Theil is not clamped and stays below ln(1/min p)") {
  const double t = pm::theil_two_group(shares({0.999, 0.001}, {0.1, 0.9}));
  CHECK(t > 1.0);
  CHECK(t < std::log(1.0 / 0.1));
}

TEST_CASE("share validation") {
  CHECK(code_of([] { pm::theil_two_group(shares({1.0, 0.0}, {0.5, 0.5})); }) == pm::ErrorCode::ZeroShare);
  CHECK(code_of([] { pm::theil_two_group(shares({0.6, 0.6}, {0.5, 0.5})); }) == pm::ErrorCode::InvalidArgument);
  CHECK(code_of([] { pm::theil_two_group(shares({0.5, 0.5}, {1.0})); }) == pm::ErrorCode::DimensionMismatch);
  const std::vector<double> vt{10.0, 0.0}, pop{1.0, 1.0};
  CHECK(code_of([&] { pm::GroupShares::from_totals(vt, pop); }) == pm::ErrorCode::ZeroShare);
}

TEST_CASE("individual Theil examples") {
  const std::vector<double> eq{2.0, 2.0, 2.0, 2.0};
  CHECK(pm::theil_individual(eq) == 0.0);
  const std::vector<double> y{1.0, 3.0};
  CHECK(std::abs(pm::theil_individual(y) - 0.1308) < 1e-4);
  const std::vector<double> bad{1.0, -1.0};
  CHECK(code_of([&] { pm::theil_individual(bad); }) == pm::ErrorCode::NonPositiveValue);
}

TEST_CASE("Theil is non-negative on random shares") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const std::vector<double> vt{u(rng), u(rng)}, pop{u(rng), u(rng)};
    CHECK(pm::theil_two_group(pm::GroupShares::from_totals(vt, pop)) >= 0.0);
  }
}

TEST_CASE("scale invariance") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.1, 100.0);
  std::vector<double> y(25);
  for (auto& x : y) x = u(rng);
  const double base = pm::theil_individual(y);
  // Power-of-two factors leave every share bit-identical.
  for (double a : {2.0, 0.25, 1024.0}) {
    std::vector<double> s(y);
    for (auto& x : s) x *= a;
    CHECK(pm::theil_individual(s) == base);
  }
  for (double a : {3.0, 0.7, 1e6}) {
    std::vector<double> s(y);
    for (auto& x : s) x *= a;
    CHECK(std::abs(pm::theil_individual(s) - base) <= 1e-14);
  }
  const std::vector<double> vt{120.0, 40.0}, pop{3.0, 5.0};
  const std::vector<double> vt2{480.0, 160.0}, pop2{12.0, 20.0};
  CHECK(pm::theil_two_group(pm::GroupShares::from_totals(vt, pop)) ==
        pm::theil_two_group(pm::GroupShares::from_totals(vt2, pop2)));
}

TEST_CASE("grouping consistency: two blocks of equal values match the two-group form") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.5, 20.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n1 = 1 + rng() % 30, n2 = 1 + rng() % 30;
    const double y1 = u(rng), y2 = u(rng);
    std::vector<double> y(n1, y1);
    y.insert(y.end(), n2, y2);
    const std::vector<double> totals{y1 * static_cast<double>(n1), y2 * static_cast<double>(n2)};
    const std::vector<double> pops{static_cast<double>(n1), static_cast<double>(n2)};
    CHECK(std::abs(pm::theil_individual(y) - pm::theil_two_group(pm::GroupShares::from_totals(totals, pops))) <= 1e-12);
  }
}

TEST_CASE("gap series multiplies per-capita values by population") {
  const auto ds = testutil::make_panel(1, 2, {{"vu", {3.0, 2.0}}, {"vr", {1.0, 2.0}}, {"pu", {1.0, 1.0}}, {"pr", {1.0, 1.0}}});
  const auto g = pm::gap_series(ds, {"vu", "vr", "pu", "pr"});
  REQUIRE(g.size() == 2);
  CHECK(std::abs(g[0] - 0.1308) < 1e-4);
  CHECK(g[1] == 0.0);
  const auto zero = testutil::make_panel(1, 1, {{"vu", {3.0}}, {"vr", {0.0}}, {"pu", {1.0}}, {"pr", {1.0}}});
  CHECK(code_of([&] { pm::gap_series(zero, {"vu", "vr", "pu", "pr"}); }) == pm::ErrorCode::ZeroShare);
}
