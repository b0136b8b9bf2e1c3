#include "panelmetrics/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "panelmetrics/csv.hpp"
#include "panelmetrics/error.hpp"

namespace pm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double param(const DgpConfig& cfg, const std::string& key, double fallback) {
  auto it = cfg.params.find(key);
  return it == cfg.params.end() ? fallback : it->second;
}

std::vector<std::string> entity_names(std::size_t n) {
  const std::size_t width = std::to_string(n).size() < 2 ? 2 : std::to_string(n).size();
  std::vector<std::string> out;
  for (std::size_t e = 1; e <= n; ++e) {
    std::string id = std::to_string(e);
    out.push_back("E" + std::string(width - id.size(), '0') + id);
  }
  return out;
}

/// Column-oriented builder; each generator fills one entity at a time.
struct Columns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::size_t n_obs;

  Columns(std::vector<std::string> n, std::size_t obs) : names(std::move(n)), values(names.size(), std::vector<double>(obs)), n_obs(obs) {}
  double& at(std::size_t var, std::size_t entity, std::size_t t, std::size_t T) { return values[var][entity * T + t]; }

  PanelDataset build(const DgpConfig& cfg) const {
    PanelDataset ds(entity_names(cfg.n_entities), cfg.first_year, cfg.n_years);
    for (std::size_t v = 0; v < names.size(); ++v) ds = ds.with_column(names[v], values[v]);
    return ds;
  }
};

std::vector<double> betas(const DgpConfig& cfg, std::size_t k, std::map<std::string, double>& truth) {
  std::vector<double> b(k);
  for (std::size_t j = 0; j < k; ++j) {
    b[j] = param(cfg, "beta" + std::to_string(j + 1), 1.0);
    truth["beta" + std::to_string(j + 1)] = b[j];
  }
  return b;
}

std::size_t count_param(const DgpConfig& cfg, const std::string& key, double fallback) {
  const double k = param(cfg, key, fallback);
  if (!(k >= 0.0) || k != std::floor(k) || k > 50.0) throw Error(ErrorCode::InvalidConfig, key + " must be a small non-negative integer");
  return static_cast<std::size_t>(k);
}

SyntheticPanel static_fe(const DgpConfig& cfg) {
  SyntheticPanel out;
  const std::size_t k = count_param(cfg, "k", 1);
  const auto b = betas(cfg, k, out.truth);
  const double corr = param(cfg, "x_fe_corr", 0.5);
  const double ar = param(cfg, "error_ar", 0.0);
  if (!(std::abs(ar) < 1.0)) throw Error(ErrorCode::InvalidConfig, "error_ar must lie in (-1, 1)");
  out.truth["error_ar"] = ar;
  std::vector<std::string> names{"y"};
  for (std::size_t j = 1; j <= k; ++j) names.push_back("x" + std::to_string(j));
  const std::size_t T = cfg.n_years;
  Columns cols(names, cfg.n_entities * T);
  const double sd_u = std::sqrt(cfg.fe_variance);
  const double sd_e = std::sqrt(cfg.idio_variance);
  for (std::size_t e = 0; e < cfg.n_entities; ++e) {
    Rng rng(Rng::substream_seed(cfg.seed, e));
    const double u = rng.normal(0.0, sd_u);
    double eps = rng.normal(0.0, sd_e / std::sqrt(1.0 - ar * ar));
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0) eps = ar * eps + rng.normal(0.0, sd_e);
      double y = u + eps;
      for (std::size_t j = 0; j < k; ++j) {
        const double x = corr * u + rng.normal();
        cols.at(j + 1, e, t, T) = x;
        y += b[j] * x;
      }
      cols.at(0, e, t, T) = y;
    }
  }
  out.data = cols.build(cfg);
  return out;
}

SyntheticPanel dynamic_ar1(const DgpConfig& cfg) {
  SyntheticPanel out;
  const double rho = param(cfg, "rho", 0.5);
  if (!(std::abs(rho) < 1.0)) throw Error(ErrorCode::InvalidConfig, "dynamic_ar1 needs |rho| < 1");
  out.truth["rho"] = rho;
  const std::size_t k = count_param(cfg, "k", 1);
  const auto b = betas(cfg, k, out.truth);
  std::vector<std::string> names{"y"};
  for (std::size_t j = 1; j <= k; ++j) names.push_back("x" + std::to_string(j));
  const std::size_t T = cfg.n_years;
  Columns cols(names, cfg.n_entities * T);
  const double sd_u = std::sqrt(cfg.fe_variance);
  const double sd_e = std::sqrt(cfg.idio_variance);
  double shock_var = cfg.idio_variance;
  for (double bj : b) shock_var += bj * bj;  // x ~ N(0, 1)
  const double stationary_sd = std::sqrt(shock_var / (1.0 - rho * rho));

  std::vector<double> x(k);
  for (std::size_t e = 0; e < cfg.n_entities; ++e) {
    Rng rng(Rng::substream_seed(cfg.seed, e));
    const double u = rng.normal(0.0, sd_u);
    double y = rng.normal(u / (1.0 - rho), stationary_sd);
    auto step = [&] {
      double next = rho * y + u + rng.normal(0.0, sd_e);
      for (std::size_t j = 0; j < k; ++j) {
        x[j] = rng.normal();
        next += b[j] * x[j];
      }
      y = next;
    };
    for (int s = 0; s < cfg.burn_in; ++s) step();
    for (std::size_t t = 0; t < T; ++t) {
      step();
      cols.at(0, e, t, T) = y;
      for (std::size_t j = 0; j < k; ++j) cols.at(j + 1, e, t, T) = x[j];
    }
  }
  out.data = cols.build(cfg);
  return out;
}

SyntheticPanel mediation(const DgpConfig& cfg) {
  SyntheticPanel out;
  const double a = param(cfg, "a", -0.5);
  const double b = param(cfg, "b", 1.0);
  const double direct = param(cfg, "direct", -0.05);
  const std::size_t n_controls = count_param(cfg, "controls", 2);
  const double sd_m = param(cfg, "mediator_sd", std::sqrt(cfg.idio_variance));
  if (!(sd_m >= 0.0)) throw Error(ErrorCode::InvalidConfig, "mediator_sd must be non-negative");
  out.truth = {{"a", a}, {"b", b}, {"direct", direct}, {"indirect", a * b}, {"total", direct + a * b}};
  std::vector<std::string> names{"X", "M", "Y"};
  for (std::size_t j = 1; j <= n_controls; ++j) names.push_back("W" + std::to_string(j));
  const std::size_t T = cfg.n_years;
  Columns cols(names, cfg.n_entities * T);
  const double sd_u = std::sqrt(cfg.fe_variance);
  const double sd_e = std::sqrt(cfg.idio_variance);
  std::vector<double> w(n_controls);
  for (std::size_t e = 0; e < cfg.n_entities; ++e) {
    Rng rng(Rng::substream_seed(cfg.seed, e));
    const double ux = rng.normal(0.0, sd_u);
    const double um = rng.normal(0.0, sd_u);
    const double uy = rng.normal(0.0, sd_u);
    for (std::size_t t = 0; t < T; ++t) {
      double ctrl = 0.0;
      for (std::size_t j = 0; j < n_controls; ++j) {
        w[j] = rng.normal();
        ctrl += 0.3 * w[j];
        cols.at(3 + j, e, t, T) = w[j];
      }
      const double x = ux + 0.5 * ctrl + rng.normal();
      const double m = a * x + ctrl + um + rng.normal(0.0, sd_m);
      const double y = direct * x + b * m - ctrl + uy + rng.normal(0.0, sd_e);
      cols.at(0, e, t, T) = x;
      cols.at(1, e, t, T) = m;
      cols.at(2, e, t, T) = y;
    }
  }
  out.data = cols.build(cfg);
  return out;
}

/// Raw provincial-style panel: six development indicators driven by a latent
/// digital level, urban/rural per-capita income and consumption with
/// populations, and five controls.
SyntheticPanel provincial(const DgpConfig& cfg) {
  SyntheticPanel out;
  const std::vector<std::string> names{"ind1",      "ind2",     "ind3",      "ind4",      "ind5",     "ind6",
                                       "inc_urban", "inc_rural", "cons_urban", "cons_rural", "pop_urban", "pop_rural",
                                       "Fis",       "Tdr",      "Open",      "Pgdp",      "Edu"};
  const std::size_t T = cfg.n_years;
  Columns cols(names, cfg.n_entities * T);
  const double loads[6] = {1.0, 0.8, 1.2, 0.6, 0.9, 0.7};
  const double sd_e = std::sqrt(cfg.idio_variance);
  const double sd_u = std::sqrt(cfg.fe_variance);
  for (std::size_t e = 0; e < cfg.n_entities; ++e) {
    Rng rng(Rng::substream_seed(cfg.seed, e));
    const double base = rng.uniform();
    const double growth = 0.04 + 0.04 * rng.uniform();
    const double gap_fe = 0.15 * rng.normal(0.0, sd_u);
    const double cons_fe = 0.1 * rng.normal(0.0, sd_u);
    const double pop = 20.0 + 60.0 * rng.uniform();
    const double urban0 = 0.4 + 0.2 * rng.uniform();
    const double fis0 = 0.15 + 0.1 * rng.uniform();
    const double open0 = 0.1 + 0.5 * rng.uniform();
    const double edu0 = 8.0 + 2.0 * rng.uniform();
    double log_cons_ratio = 0.7 + cons_fe;
    for (std::size_t t = 0; t < T; ++t) {
      const double tt = static_cast<double>(t);
      const double dig = base + growth * tt + 0.05 * rng.normal();
      for (std::size_t j = 0; j < 6; ++j) {
        const double noise = 0.1 * rng.normal();
        cols.at(j, e, t, T) = j == 5 ? std::exp(2.0 - loads[j] * dig + noise) : std::exp(1.0 + j * 0.5 + loads[j] * dig + noise);
      }
      const double tdr = 35.0 + 5.0 * rng.normal();
      const double openness = open0 + 0.02 * rng.normal();
      const double fis = fis0 + 0.01 * tt + 0.01 * rng.normal();
      const double edu = edu0 + 0.1 * tt + 0.1 * rng.normal();
      const double log_inc_ratio = 0.9 + gap_fe - 0.25 * dig - 0.01 * edu - 0.1 * openness + 0.05 * sd_e * rng.normal();
      log_cons_ratio = 0.5 * log_cons_ratio + 0.5 * (0.9 * log_inc_ratio + cons_fe) - 0.05 * dig + 0.02 * sd_e * rng.normal();
      const double inc_rural = 12000.0 * std::exp(0.06 * tt + 0.3 * base + 0.02 * rng.normal());
      const double cons_rural = 0.8 * inc_rural * std::exp(0.02 * rng.normal());
      const double urban_share = std::min(0.9, urban0 + 0.01 * tt);
      cols.at(6, e, t, T) = inc_rural * std::exp(log_inc_ratio);
      cols.at(7, e, t, T) = inc_rural;
      cols.at(8, e, t, T) = cons_rural * std::exp(log_cons_ratio);
      cols.at(9, e, t, T) = cons_rural;
      cols.at(10, e, t, T) = pop * urban_share;
      cols.at(11, e, t, T) = pop * (1.0 - urban_share);
      cols.at(12, e, t, T) = fis;
      cols.at(13, e, t, T) = tdr;
      cols.at(14, e, t, T) = openness;
      cols.at(15, e, t, T) = 30000.0 * std::exp(0.5 * base + 0.06 * tt + 0.03 * rng.normal());
      cols.at(16, e, t, T) = edu;
    }
  }
  out.data = cols.build(cfg);
  return out;
}

}  // namespace

double Rng::uniform() {
  // (0, 1): never exactly 0 so log() in Box-Muller stays finite.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::substream_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

DgpKind parse_dgp_kind(const std::string& text) {
  if (text == "static_fe") return DgpKind::StaticFe;
  if (text == "dynamic_ar1") return DgpKind::DynamicAr1;
  if (text == "mediation") return DgpKind::Mediation;
  if (text == "provincial") return DgpKind::Provincial;
  throw Error(ErrorCode::InvalidConfig, "unknown DGP kind '" + text + "'");
}

const char* to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::StaticFe: return "static_fe";
    case DgpKind::DynamicAr1: return "dynamic_ar1";
    case DgpKind::Mediation: return "mediation";
    case DgpKind::Provincial: return "provincial";
  }
  return "unknown";
}

SyntheticPanel generate(const DgpConfig& cfg) {
  if (cfg.n_entities == 0 || cfg.n_years == 0) throw Error(ErrorCode::InvalidConfig, "panel dimensions must be positive");
  if (!(cfg.fe_variance >= 0.0) || !(cfg.idio_variance >= 0.0))
    throw Error(ErrorCode::InvalidConfig, "variances must be non-negative");
  if (cfg.burn_in < 0) throw Error(ErrorCode::InvalidConfig, "burn_in must be non-negative");
  SyntheticPanel out;
  switch (cfg.kind) {
    case DgpKind::StaticFe: out = static_fe(cfg); break;
    case DgpKind::DynamicAr1: out = dynamic_ar1(cfg); break;
    case DgpKind::Mediation: out = mediation(cfg); break;
    case DgpKind::Provincial: out = provincial(cfg); break;
  }
  out.truth["fe_variance"] = cfg.fe_variance;
  out.truth["idio_variance"] = cfg.idio_variance;
  return out;
}

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  for (const auto& item : csv::split_list(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "parameter '" + item + "' is not key=value");
    const auto key = csv::trim(item.substr(0, eq));
    const auto value = csv::parse_double(item.substr(eq + 1));
    if (key.empty() || !value) throw Error(ErrorCode::InvalidConfig, "bad parameter '" + item + "'");
    out[key] = *value;
  }
  return out;
}

}  // namespace pm
