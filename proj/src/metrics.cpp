#include "audit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "audit/error.hpp"

namespace audit {

ScoredSet::ScoredSet(std::vector<double> s, std::vector<int> l)
    : scores(std::move(s)), labels(std::move(l)) {
  if (scores.size() != labels.size()) {
    throw ConfigError("scored set requires equal score and label counts");
  }
  for (int label : labels) {
    if (label != 0 && label != 1) throw ConfigError("scored set labels must be 0 or 1");
  }
}

std::size_t ScoredSet::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

double auroc(const ScoredSet& s) {
  const std::size_t n = s.size();
  const std::size_t n_pos = s.count_label(1);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw MetricError("AUROC undefined: both classes must be present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });

  // Rank sum of positives with average ranks inside tie groups; this is
  // exactly the pairwise count with ties at half credit.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && s.scores[order[j]] == s.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (s.labels[order[k]] == 1) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double accuracy(const ScoredSet& s, double tau) {
  if (s.size() == 0) throw MetricError("accuracy undefined on empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int pred = s.scores[i] >= tau ? 1 : 0;
    if (pred == s.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(s.size());
}

double brier(const ScoredSet& s) {
  if (s.size() == 0) throw MetricError("brier undefined on empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double e = s.scores[i] - static_cast<double>(s.labels[i]);
    sum += e * e;
  }
  return sum / static_cast<double>(s.size());
}

PerformanceReport evaluate_performance(const ScoredSet& s, double tau) {
  return PerformanceReport{auroc(s), accuracy(s, tau), brier(s)};
}

ConfusionRates confusion_rates(const ScoredSet& s, double tau) {
  std::size_t pos = 0, neg = 0, fn = 0, fp = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool flagged = s.scores[i] >= tau;
    if (s.labels[i] == 1) {
      ++pos;
      if (!flagged) ++fn;
    } else {
      ++neg;
      if (flagged) ++fp;
    }
  }
  ConfusionRates rates;
  if (pos > 0) rates.fnr = static_cast<double>(fn) / static_cast<double>(pos);
  if (neg > 0) rates.fpr = static_cast<double>(fp) / static_cast<double>(neg);
  return rates;
}

double percentile_threshold(std::vector<double> scores, double pct) {
  if (scores.empty()) throw MetricError("percentile of an empty score list");
  if (!(pct >= 0.0 && pct <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
  std::sort(scores.begin(), scores.end());
  const double n = static_cast<double>(scores.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, scores.size());
  return scores[rank - 1];
}

AmplificationResult amplification(double delta_stress, double delta_calm) {
  AmplificationResult result;
  result.delta_stress = delta_stress;
  result.delta_calm = delta_calm;
  if (delta_calm > 0.0) result.factor = delta_stress / delta_calm;
  return result;
}

ThresholdReport evaluate_threshold(const ScoredSet& s, double percentile, double tau) {
  ThresholdReport report;
  report.name = threshold_name(percentile);
  report.percentile = percentile;
  report.tau = tau;
  const ConfusionRates rates = confusion_rates(s, tau);
  report.fnr = rates.fnr;
  report.fpr = rates.fpr;
  return report;
}

std::string threshold_name(double percentile) {
  if (percentile == 90.0) return "Conservative";
  if (percentile == 50.0) return "Balanced";
  if (percentile == 95.0) return "HighRisk";
  std::string p = std::to_string(percentile);
  p.erase(p.find_last_not_of('0') + 1);
  if (!p.empty() && p.back() == '.') p.pop_back();
  return "P" + p;
}

}  // namespace audit
