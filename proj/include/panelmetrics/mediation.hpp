#pragma once

#include <optional>
#include <string>
#include <vector>

#include "panelmetrics/fixed_effects.hpp"
#include "panelmetrics/panel.hpp"

namespace pm {

struct MediationSpec {
  std::string treatment;
  std::string mediator;
  std::string outcome;
  std::vector<std::string> controls;
  /// Effects / intercept / covariance settings shared by all three equations;
  /// its dependent and regressor fields are ignored.
  ModelSpec estimator;
  double alpha = 0.05;
};

enum class MediationClass {
  FullMediation,     // a, b significant; direct effect insignificant
  PartialMediation,  // a, b and direct effect significant
  SobelMediation,    // a or b insignificant, Sobel significant
  NoMediation,       // total effect insignificant, or a/b insignificant and Sobel insignificant
};

const char* to_string(MediationClass c);

struct SobelResult {
  double z = 0.0;
  double p = 1.0;
  double se = 0.0;
};

struct Proportion {
  double value = 0.0;
  bool inconsistent = false;  // sign(a*b) differs from sign(total)
};

struct MediationResult {
  MediationSpec spec;
  RegressionResult total_eq;     // outcome ~ treatment + controls
  RegressionResult mediator_eq;  // mediator ~ treatment + controls
  RegressionResult outcome_eq;   // outcome ~ treatment + mediator + controls
  double total_effect = 0.0;
  double path_a = 0.0;
  double path_b = 0.0;
  double direct_effect = 0.0;
  double indirect_effect = 0.0;
  std::optional<Proportion> proportion;
  SobelResult sobel;
  MediationClass classification = MediationClass::NoMediation;
  /// False when the stepwise procedure stopped at the total-effect gate.
  bool total_significant = false;
};

SobelResult sobel_test(double a, double se_a, double b, double se_b);

/// (a*b)/total. Throws ZeroTotalEffect.
Proportion proportion_mediated(double a, double b, double total);

MediationResult mediation_run(const PanelDataset& ds, const MediationSpec& spec);

}  // namespace pm
