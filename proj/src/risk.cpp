#include "audit/risk.hpp"

#include <algorithm>
#include <cmath>

#include "audit/error.hpp"

namespace audit {

void ExposureProfile::validate() const {
  if (!(lgd >= 0.0 && lgd <= 1.0)) throw ConfigError("LGD must lie in [0, 1]");
  if (ead_default < 0.0) throw ConfigError("EAD must be non-negative");
  for (double e : ead) {
    if (e < 0.0) throw ConfigError("EAD must be non-negative");
  }
}

LossDistribution loss_distribution(const std::vector<double>& scores,
                                   const ExposureProfile& profile) {
  profile.validate();
  if (!profile.ead.empty() && profile.ead.size() != scores.size()) {
    throw ConfigError("per-instance EAD length must match score count");
  }
  LossDistribution dist;
  dist.losses.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    dist.losses.push_back(scores[i] * profile.lgd * profile.ead_for(i));
  }
  return dist;
}

double expected_loss(const std::vector<double>& scores, const ExposureProfile& profile) {
  if (scores.empty()) throw MetricError("expected loss undefined on empty input");
  const LossDistribution dist = loss_distribution(scores, profile);
  double sum = 0.0;
  for (double l : dist.losses) sum += l;
  return sum / static_cast<double>(dist.losses.size());
}

double value_at_risk(const LossDistribution& dist, double alpha) {
  if (dist.losses.empty()) throw MetricError("VaR undefined on empty distribution");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("VaR level must lie in (0, 1)");
  std::vector<double> sorted(dist.losses);
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(alpha * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double expected_shortfall(const LossDistribution& dist, double alpha) {
  const double var = value_at_risk(dist, alpha);
  double sum = 0.0;
  std::size_t count = 0;
  for (double l : dist.losses) {
    if (l > var) {
      sum += l;
      ++count;
    }
  }
  if (count == 0) return var;
  return sum / static_cast<double>(count);
}

RiskReport risk_report(const std::vector<double>& clean_scores,
                       const std::vector<double>& adv_scores,
                       const ExposureProfile& profile, double alpha) {
  RiskReport r;
  r.el_clean = expected_loss(clean_scores, profile);
  r.el_adv = expected_loss(adv_scores, profile);
  r.delta_el = r.el_adv - r.el_clean;
  r.delta_el_pct = r.el_clean != 0.0 ? 100.0 * r.delta_el / r.el_clean : 0.0;
  const LossDistribution clean_dist = loss_distribution(clean_scores, profile);
  const LossDistribution adv_dist = loss_distribution(adv_scores, profile);
  r.var_clean = value_at_risk(clean_dist, alpha);
  r.var_adv = value_at_risk(adv_dist, alpha);
  r.es_clean = expected_shortfall(clean_dist, alpha);
  r.es_adv = expected_shortfall(adv_dist, alpha);
  return r;
}

}  // namespace audit
