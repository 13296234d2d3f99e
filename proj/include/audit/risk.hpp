#pragma once

#include <cstddef>
#include <vector>

namespace audit {

// Loss Given Default and per-instance Exposure at Default. An empty `ead`
// vector means every instance carries `ead_default`; the unit default
// (EAD = 1) keeps VaR/ES on the p * LGD scale.
struct ExposureProfile {
  double lgd = 0.45;
  double ead_default = 1.0;
  std::vector<double> ead;

  void validate() const;
  double ead_for(std::size_t i) const {
    return ead.empty() ? ead_default : ead[i];
  }
};

struct LossDistribution {
  std::vector<double> losses;  // L_i = p_i * LGD * EAD_i
};

LossDistribution loss_distribution(const std::vector<double>& scores,
                                   const ExposureProfile& profile);

// Mean of p_i * LGD * EAD_i.
double expected_loss(const std::vector<double>& scores, const ExposureProfile& profile);

// Empirical inf{z : F(z) >= alpha}: order statistic at ceil(alpha * N).
double value_at_risk(const LossDistribution& dist, double alpha);

// Mean of losses strictly greater than VaR; falls back to VaR when the
// tail is empty (constant distributions).
double expected_shortfall(const LossDistribution& dist, double alpha);

struct RiskReport {
  double el_clean = 0.0;
  double el_adv = 0.0;
  double delta_el = 0.0;
  double delta_el_pct = 0.0;  // 0 when el_clean == 0
  double var_clean = 0.0;
  double var_adv = 0.0;
  double es_clean = 0.0;
  double es_adv = 0.0;
};

RiskReport risk_report(const std::vector<double>& clean_scores,
                       const std::vector<double>& adv_scores,
                       const ExposureProfile& profile, double alpha);

}  // namespace audit
