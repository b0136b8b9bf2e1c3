#include "panelmetrics/mediation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "panelmetrics/error.hpp"
#include "panelmetrics/stats.hpp"

namespace pm {

const char* to_string(MediationClass c) {
  switch (c) {
    case MediationClass::FullMediation: return "full mediation";
    case MediationClass::PartialMediation: return "partial mediation";
    case MediationClass::SobelMediation: return "mediation (Sobel)";
    case MediationClass::NoMediation: return "no mediation";
  }
  return "unknown";
}

SobelResult sobel_test(double a, double se_a, double b, double se_b) {
  if (se_a < 0.0 || se_b < 0.0) throw Error(ErrorCode::InvalidArgument, "standard errors must be non-negative");
  SobelResult r;
  r.se = std::sqrt(a * a * se_b * se_b + b * b * se_a * se_a);
  if (!(r.se > 0.0)) throw Error(ErrorCode::ZeroDenominator, "Sobel standard error is zero");
  r.z = a * b / r.se;
  r.p = stats::normal_two_sided_p(r.z);
  return r;
}

Proportion proportion_mediated(double a, double b, double total) {
  if (total == 0.0) throw Error(ErrorCode::ZeroTotalEffect, "total effect is zero");
  const double indirect = a * b;
  Proportion p;
  p.value = indirect / total;
  p.inconsistent = indirect != 0.0 && (indirect > 0.0) != (total > 0.0);
  return p;
}

MediationResult mediation_run(const PanelDataset& ds, const MediationSpec& spec) {
  const std::set<std::string> roles{spec.treatment, spec.mediator, spec.outcome};
  if (roles.size() != 3) throw Error(ErrorCode::InvalidArgument, "treatment, mediator and outcome must be distinct");
  for (const auto& c : spec.controls)
    if (roles.count(c)) throw Error(ErrorCode::InvalidArgument, "control '" + c + "' duplicates a mediation role");

  // One complete-case sample for all three equations.
  std::vector<std::string> vars{spec.treatment, spec.mediator, spec.outcome};
  vars.insert(vars.end(), spec.controls.begin(), spec.controls.end());
  for (const auto& v : vars)
    if (!ds.is_complete(v))
      throw Error(ErrorCode::MissingCells, "variable '" + v + "' has missing cells; interpolate before mediation");

  auto model = [&](const std::string& dep, std::vector<std::string> regs) {
    ModelSpec m = spec.estimator;
    m.dependent = dep;
    regs.insert(regs.end(), spec.controls.begin(), spec.controls.end());
    m.regressors = std::move(regs);
    return fe_estimate(ds, m);
  };

  MediationResult r;
  r.spec = spec;
  r.total_eq = model(spec.outcome, {spec.treatment});
  r.mediator_eq = model(spec.mediator, {spec.treatment});
  r.outcome_eq = model(spec.outcome, {spec.treatment, spec.mediator});

  r.total_effect = r.total_eq.coef(spec.treatment);
  r.path_a = r.mediator_eq.coef(spec.treatment);
  r.path_b = r.outcome_eq.coef(spec.mediator);
  r.direct_effect = r.outcome_eq.coef(spec.treatment);
  r.indirect_effect = r.path_a * r.path_b;
  if (r.total_effect != 0.0) r.proportion = proportion_mediated(r.path_a, r.path_b, r.total_effect);
  r.sobel = sobel_test(r.path_a, r.mediator_eq.se(spec.treatment), r.path_b, r.outcome_eq.se(spec.mediator));

  const auto sig = [&](double p) { return p < spec.alpha; };
  r.total_significant = sig(r.total_eq.pvalue(spec.treatment));
  if (!r.total_significant) {
    r.classification = MediationClass::NoMediation;
  } else if (sig(r.mediator_eq.pvalue(spec.treatment)) && sig(r.outcome_eq.pvalue(spec.mediator))) {
    r.classification = sig(r.outcome_eq.pvalue(spec.treatment)) ? MediationClass::PartialMediation
                                                                 : MediationClass::FullMediation;
  } else {
    r.classification = sig(r.sobel.p) ? MediationClass::SobelMediation : MediationClass::NoMediation;
  }
  return r;
}

}  // namespace pm
