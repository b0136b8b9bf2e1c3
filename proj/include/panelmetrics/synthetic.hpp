#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "panelmetrics/panel.hpp"

namespace pm {

/// Portable generator: mt19937_64 for the bit stream, 53-bit uniforms, and
/// Box-Muller normals, so draws do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Seed for an independent substream (e.g. one per entity).
  static std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

enum class DgpKind { StaticFe, DynamicAr1, Mediation, Provincial };

DgpKind parse_dgp_kind(const std::string& text);
const char* to_string(DgpKind kind);

/// Known-truth data-generating process.
///
/// Parameter keys by kind (defaults in parentheses):
///   static_fe   k (1), beta1..betak (1), x_fe_corr (0.5), error_ar (0)
///   dynamic_ar1 rho (0.5), k (1), beta1..betak (1)
///   mediation   a (-0.5), b (1), direct (-0.05), controls (2),
///               mediator_sd (sqrt(idio_variance)) for the mediator's own noise
///   provincial  no parameters; a provincial-style raw panel for the pipeline
struct DgpConfig {
  std::size_t n_entities = 30;
  std::size_t n_years = 10;
  std::uint64_t seed = 1;
  DgpKind kind = DgpKind::StaticFe;
  std::map<std::string, double> params;
  double fe_variance = 1.0;
  double idio_variance = 1.0;
  int burn_in = 50;
  int first_year = 2013;
};

struct SyntheticPanel {
  PanelDataset data;
  std::map<std::string, double> truth;
};

/// Throws InvalidConfig.
SyntheticPanel generate(const DgpConfig& cfg);

/// Parses "k=v,k=v" into a parameter map.
std::map<std::string, double> parse_params(const std::string& text);

}  // namespace pm
