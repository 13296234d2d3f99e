#pragma once

#include <optional>
#include <string>
#include <vector>

namespace audit {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;

  ScoredSet() = default;
  ScoredSet(std::vector<double> s, std::vector<int> l);

  std::size_t size() const { return scores.size(); }
  std::size_t count_label(int label) const;
};

// Mann-Whitney AUROC: fraction of (positive, negative) pairs with
// score_pos > score_neg, ties counted 0.5. Throws MetricError when a
// class is missing.
double auroc(const ScoredSet& s);

// Decision rule: predict 1 iff score >= tau.
double accuracy(const ScoredSet& s, double tau);
double brier(const ScoredSet& s);

struct PerformanceReport {
  double auroc = 0.0;
  double accuracy = 0.0;
  double brier = 0.0;
};

PerformanceReport evaluate_performance(const ScoredSet& s, double tau = 0.5);

struct ConfusionRates {
  std::optional<double> fnr;  // undefined without positives
  std::optional<double> fpr;  // undefined without negatives
};

ConfusionRates confusion_rates(const ScoredSet& s, double tau);

// Nearest-rank percentile: order statistic at ceil(pct/100 * N), 1-based,
// clamped to the first order statistic for pct = 0.
double percentile_threshold(std::vector<double> scores, double pct);

struct AmplificationResult {
  double delta_stress = 0.0;
  double delta_calm = 0.0;
  std::optional<double> factor;  // defined iff delta_calm > 0

  bool defined() const { return factor.has_value(); }
};

AmplificationResult amplification(double delta_stress, double delta_calm);

// 90 -> Conservative, 50 -> Balanced, 95 -> HighRisk, otherwise "P<pct>".
std::string threshold_name(double percentile);

struct ThresholdReport {
  std::string name;
  double percentile = 0.0;
  double tau = 0.0;
  std::optional<double> fnr;
  std::optional<double> fpr;
};

// Rates of `s` at a fixed tau, labelled by the percentile that produced it.
ThresholdReport evaluate_threshold(const ScoredSet& s, double percentile, double tau);

}  // namespace audit
