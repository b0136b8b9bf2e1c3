// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here and nowhere else.
//
// usage: acceptance [--known-failure N]...
// A criterion listed as a known failure still prints FAIL; the exit code is 0
// only if the failing set equals the known set exactly, so an unexpected
// pass is reported as well.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "panelmetrics/composite_index.hpp"
#include "panelmetrics/error.hpp"
#include "panelmetrics/fixed_effects.hpp"
#include "panelmetrics/inequality.hpp"
#include "panelmetrics/mediation.hpp"
#include "panelmetrics/pipeline.hpp"
#include "panelmetrics/synthetic.hpp"
#include "panelmetrics/system_gmm.hpp"

namespace fs = std::filesystem;

namespace tol {
constexpr double kIndirect = 0.00005;
constexpr double kProportionPp = 0.1;
constexpr double kLsdv = 1e-8;
constexpr double kIndex = 1e-10;
constexpr double kTheilExample = 1e-4;
constexpr double kTheilGrouping = 1e-12;
constexpr double kRhoLow = 0.45, kRhoHigh = 0.55;
constexpr double kAr1Reject = 0.90;
constexpr double kAr2Accept = 0.85;
constexpr double kHansenLow = 0.02, kHansenHigh = 0.10;
constexpr double kTwoSls = 1e-8;
constexpr double kSobel = 1e-4;
constexpr double kDecomposition = 1e-8;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

pm::PanelDataset generate(pm::DgpKind kind, std::size_t N, std::size_t T, std::uint64_t seed,
                          std::map<std::string, double> params = {}) {
  pm::DgpConfig cfg;
  cfg.kind = kind;
  cfg.n_entities = N;
  cfg.n_years = T;
  cfg.seed = seed;
  cfg.params = std::move(params);
  return pm::generate(cfg).data;
}

Outcome mediation_arithmetic() {
  const double a = -0.0553, b = 1.0106, total = -0.1171;
  const double indirect = a * b;
  const double pct = 100.0 * pm::proportion_mediated(a, b, total).value;
  const bool ok = std::abs(indirect - -0.0559) <= tol::kIndirect && std::abs(pct - 47.7) <= tol::kProportionPp;
  return {ok, fmt("indirect=%.6f (want -0.0559 +/- %g), proportion=%.4f%% (want 47.7 +/- %gpp)", indirect,
                  tol::kIndirect, pct, tol::kProportionPp)};
}

Outcome observation_counts() {
  const auto ds = generate(pm::DgpKind::DynamicAr1, 30, 10, 1);
  const auto fe = pm::fe_estimate(ds, {"y", {"x1"}});
  pm::DynamicModelSpec spec{"y"};
  spec.exogenous = {"x1"};
  const auto gmm = pm::system_gmm_estimate(ds, spec);
  return {fe.n_obs == 300 && gmm.n_obs == 270, fmt("FE N=%zu (want 300), GMM observations=%zu (want 270)", fe.n_obs, gmm.n_obs)};
}

Outcome lsdv_equivalence() {
  std::mt19937_64 rng(2001);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  int fitted = 0;
  while (fitted < 100) {
    const std::size_t N = 2 + rng() % 29, T = 2 + rng() % 9, k = 1 + rng() % 6;
    const bool time = fitted % 2 == 1;
    if (N * T <= k + N + (time ? T - 1 : 0) + 1) continue;
    ++fitted;
    std::vector<double> alpha(N);
    for (auto& v : alpha) v = 2.0 * z(rng);
    std::vector<std::vector<double>> x(k, std::vector<double>(N * T));
    std::vector<double> y(N * T);
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < N * T; ++i) {
      double yi = alpha[i / T] + z(rng);
      for (std::size_t j = 0; j < k; ++j) {
        x[j][i] = z(rng) + 0.5 * alpha[i / T];
        yi += (static_cast<double>(j) - 2.0) * x[j][i];
      }
      y[i] = yi;
    }
    cols.emplace_back("y", y);
    for (std::size_t j = 0; j < k; ++j) {
      names.push_back("x" + std::to_string(j + 1));
      cols.emplace_back(names.back(), x[j]);
    }
    pm::ModelSpec spec{"y", names};
    spec.time_effects = time;
    const auto r = pm::fe_estimate(testutil::make_panel(N, T, cols), spec);
    const auto b = oracle::lsdv_slopes(x, y, N, T, time);
    for (std::size_t j = 0; j < k; ++j)
      worst = std::max(worst, std::abs(r.coefficients(static_cast<Eigen::Index>(j)) - static_cast<double>(b[j])));
  }
  return {worst <= tol::kLsdv, fmt("max |FE - LSDV| over 100 panels = %.3e (tol %g)", worst, tol::kLsdv)};
}

Outcome index_oracle() {
  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> u(0.5, 50.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = 3 + rng() % 18, n = 2 + rng() % 9;
    std::vector<std::vector<double>> rows(m, std::vector<double>(n));
    std::vector<bool> positive(n);
    pm::IndicatorMatrix raw;
    raw.data.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      positive[j] = rng() % 3 != 0;
      raw.names.push_back("v" + std::to_string(j));
      raw.directions.push_back(positive[j] ? pm::Direction::Positive : pm::Direction::Negative);
    }
    for (std::size_t i = 0; i < m; ++i) {
      raw.rows.push_back({"E", static_cast<int>(i)});
      for (std::size_t j = 0; j < n; ++j)
        raw.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j] = u(rng);
    }
    const auto got = pm::build_index(raw, 0.5);
    const auto want = oracle::composite_index(rows, positive, 0.5L);
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(got.weights.combined(static_cast<Eigen::Index>(j)) - static_cast<double>(want.combined[j])));
    for (std::size_t i = 0; i < m; ++i)
      worst = std::max(worst, std::abs(got.scores(static_cast<Eigen::Index>(i)) - static_cast<double>(want.scores[i])));
  }
  return {worst <= tol::kIndex, fmt("max |index - oracle| over 100 matrices = %.3e (tol %g)", worst, tol::kIndex)};
}

Outcome theil_suite() {
  auto shares = [](std::vector<double> v, std::vector<double> p) {
    pm::GroupShares g;
    g.value_shares = std::move(v);
    g.pop_shares = std::move(p);
    return g;
  };
  const double equal = pm::theil_two_group(shares({0.4, 0.6}, {0.4, 0.6}));
  const std::vector<double> y{3.0, 1.5, 7.25, 0.5, 12.0};
  std::vector<double> scaled(y);
  for (auto& v : scaled) v *= 8.0;
  const bool scale_ok = pm::theil_individual(y) == pm::theil_individual(scaled);
  const double example = pm::theil_two_group(shares({0.75, 0.25}, {0.5, 0.5}));
  double grouping = 0.0;
  std::mt19937_64 rng(2005);
  std::uniform_real_distribution<double> u(0.5, 20.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n1 = 1 + rng() % 30, n2 = 1 + rng() % 30;
    const double y1 = u(rng), y2 = u(rng);
    std::vector<double> v(n1, y1);
    v.insert(v.end(), n2, y2);
    const std::vector<double> totals{y1 * static_cast<double>(n1), y2 * static_cast<double>(n2)};
    const std::vector<double> pops{static_cast<double>(n1), static_cast<double>(n2)};
    grouping = std::max(grouping, std::abs(pm::theil_individual(v) -
                                           pm::theil_two_group(pm::GroupShares::from_totals(totals, pops))));
  }
  const bool ok = equal == 0.0 && scale_ok && std::abs(example - 0.1308) <= tol::kTheilExample &&
                  grouping <= tol::kTheilGrouping;
  return {ok, fmt("equality=%g, scale invariance %s, (0.75,0.25)|(0.5,0.5)=%.6f, grouping max diff=%.2e", equal,
                  scale_ok ? "exact" : "broken", example, grouping)};
}

Outcome gmm_monte_carlo() {
  const int seeds = 500;
  double rho_sum = 0.0;
  int ar1_reject = 0, ar2_accept = 0, hansen_reject = 0, fitted = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto ds = generate(pm::DgpKind::DynamicAr1, 200, 8, 100000 + static_cast<std::uint64_t>(s),
                             {{"rho", 0.5}, {"k", 0.0}});
    const auto r = pm::system_gmm_estimate(ds, {"y"});
    ++fitted;
    rho_sum += r.coef("L.y");
    ar1_reject += r.ar1 && r.ar1->p < 0.10;
    ar2_accept += r.ar2 && r.ar2->p > 0.10;
    hansen_reject += r.hansen && r.hansen->p < 0.05;
  }
  const double mean = rho_sum / fitted;
  const double ar1 = static_cast<double>(ar1_reject) / fitted;
  const double ar2 = static_cast<double>(ar2_accept) / fitted;
  const double hansen = static_cast<double>(hansen_reject) / fitted;
  const bool ok = mean >= tol::kRhoLow && mean <= tol::kRhoHigh && ar1 >= tol::kAr1Reject && ar2 >= tol::kAr2Accept &&
                  hansen >= tol::kHansenLow && hansen <= tol::kHansenHigh;
  return {ok, fmt("mean rho=%.4f [%.2f, %.2f], AR(1) reject@10%%=%.3f (>=%.2f), AR(2) accept@10%%=%.3f (>=%.2f), "
                  "Hansen reject@5%%=%.3f [%.2f, %.2f]",
                  mean, tol::kRhoLow, tol::kRhoHigh, ar1, tol::kAr1Reject, ar2, tol::kAr2Accept, hansen, tol::kHansenLow,
                  tol::kHansenHigh)};
}

Outcome two_sls_equivalence() {
  std::mt19937_64 pick(2007);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t N = 20 + pick() % 60, T = 4 + pick() % 6;
    const double rho = 0.2 + 0.6 * static_cast<double>(pick() % 100) / 100.0;
    const auto ds = generate(pm::DgpKind::DynamicAr1, N, T, 20000 + static_cast<std::uint64_t>(rep), {{"rho", rho}});
    const bool with_x = rep % 2 == 0;
    pm::DynamicModelSpec spec{"y"};
    spec.level_equation = false;
    spec.steps = 1;
    spec.min_lag = 2;
    spec.max_lag = 2;
    if (with_x) spec.exogenous = {"x1"};
    const auto r = pm::system_gmm_estimate(ds, spec);
    const auto b = oracle::difference_2sls(ds, "y", with_x ? "x1" : "");
    for (std::size_t j = 0; j < b.size(); ++j)
      worst = std::max(worst, std::abs(r.coefficients(static_cast<Eigen::Index>(j)) - static_cast<double>(b[j])));
  }
  return {worst <= tol::kTwoSls, fmt("max |GMM - 2SLS| over 50 datasets = %.3e (tol %g)", worst, tol::kTwoSls)};
}

Outcome sobel_closed_form() {
  const auto s = pm::sobel_test(0.5, 0.1, 0.8, 0.2);
  const auto zero = pm::sobel_test(0.0, 0.1, 0.8, 0.2);
  const bool ok = std::abs(s.z - 3.1236) <= tol::kSobel && zero.z == 0.0;
  return {ok, fmt("z=%.6f (want 3.1236 +/- %g; 0.4/sqrt(0.0164) is %.6f), a=0 gives z=%g", s.z, tol::kSobel,
                  0.4 / std::sqrt(0.0164), zero.z)};
}

Outcome decomposition_identity() {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto ds = generate(pm::DgpKind::Mediation, 10 + rep % 25, 4 + rep % 7, 30000 + static_cast<std::uint64_t>(rep));
    pm::MediationSpec spec;
    spec.treatment = "X";
    spec.mediator = "M";
    spec.outcome = "Y";
    spec.controls = {"W1", "W2"};
    spec.estimator.time_effects = rep % 2 == 1;
    const auto m = pm::mediation_run(ds, spec);
    worst = std::max(worst, std::abs(m.total_effect - (m.direct_effect + m.path_a * m.path_b)));
  }
  return {worst <= tol::kDecomposition,
          fmt("max |alpha1 - (rho1 + gamma1*rho2)| over 100 datasets = %.3e (tol %g)", worst, tol::kDecomposition)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome pipeline_determinism() {
  const auto root = fs::temp_directory_path() / "pm_acceptance_runs";
  fs::remove_all(root);
  auto cfg = pm::load_run_config(PM_SOURCE_DIR "/config/example_synthetic.ini");
  std::vector<std::vector<pm::Artifact>> hashes;
  std::vector<std::string> manifests;
  for (const char* name : {"a", "b"}) {
    cfg.output_dir = (root / name).string();
    const auto summary = pm::run_pipeline(cfg);
    if (!summary.ok()) return {false, "pipeline failed: " + summary.first_error()};
    std::vector<pm::Artifact> all;
    for (const auto& st : summary.stages) all.insert(all.end(), st.outputs.begin(), st.outputs.end());
    hashes.push_back(all);
    manifests.push_back(read_file(summary.manifest_path));
  }
  bool same = hashes[0].size() == hashes[1].size() && manifests[0] == manifests[1];
  for (std::size_t i = 0; same && i < hashes[0].size(); ++i)
    same = hashes[0][i].name == hashes[1][i].name && hashes[0][i].sha256 == hashes[1][i].sha256 &&
           read_file(root / "a" / hashes[0][i].name) == read_file(root / "b" / hashes[1][i].name);
  fs::remove_all(root);
  return {same, fmt("%zu artifacts, hashes and manifest %s", hashes[0].size(), same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--known-failure N]...\n");
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 mediation arithmetic", mediation_arithmetic},
      {"2 observation counts on 30x10", observation_counts},
      {"3 FE equals LSDV", lsdv_equivalence},
      {"4 composite index oracle", index_oracle},
      {"5 Theil suite", theil_suite},
      {"6 system GMM Monte Carlo", gmm_monte_carlo},
      {"7 difference GMM equals 2SLS", two_sls_equivalence},
      {"8 Sobel closed form", sobel_closed_form},
      {"9 mediation decomposition identity", decomposition_identity},
      {"10 pipeline determinism", pipeline_determinism},
  };
  int failures = 0;
  std::set<int> failed;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-36s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
    if (!o.pass) failed.insert(index);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  if (known.empty()) return failures == 0 ? 0 : 1;
  for (int k : known)
    if (!failed.count(k)) std::printf("criterion %d was listed as a known failure but passed\n", k);
  for (int f : failed)
    if (!known.count(f)) std::printf("criterion %d failed unexpectedly\n", f);
  return failed == known ? 0 : 1;
}
