#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "audit/dataset.hpp"
#include "audit/model.hpp"

namespace audit {

struct AttackConfig {
  double epsilon = 0.1;   // l-inf budget in scaled units
  double alpha = 0.025;   // step size, default epsilon / 4
  int iterations = 10;
  double fd_step = 1e-4;
  std::vector<double> lower;  // empty: 0 per feature
  std::vector<double> upper;  // empty: 1 per feature
  std::vector<std::size_t> frozen_features;
  std::uint64_t seed = 0;

  // Untargeted by default: ascend the loss of the true label. Targeted
  // mode descends the loss toward target_label instead.
  bool targeted = false;
  int target_label = 0;

  int restarts = 0;           // extra seeded-noise starts beyond the clean point
  bool plateau_probe = false; // per-feature +-alpha probe on all-zero gradients

  static AttackConfig for_epsilon(double epsilon, int iterations = 10);

  void validate(std::size_t dim) const;
  double lo(std::size_t j) const { return lower.empty() ? 0.0 : lower[j]; }
  double hi(std::size_t j) const { return upper.empty() ? 1.0 : upper[j]; }
  std::vector<bool> frozen_mask(std::size_t dim) const;
};

struct AdversarialBatch {
  Dataset originals;
  std::vector<FeatureVector> perturbed;
  std::vector<double> max_abs_delta;
  int iterations_used = 0;

  // Columns: orig_<f>..., adv_<f>..., linf_delta.
  void export_csv(const std::filesystem::path& path) const;
};

// Forward differences of the BCE loss per Eq.-style one-sided probes;
// frozen features get exactly 0.
std::vector<double> finite_diff_grad(const TrainedModel& model, std::span<const double> x,
                                     int y, double fd_step,
                                     const std::vector<bool>& frozen = {});

// Clamp to the epsilon ball around origin, then to bounds; frozen features
// reset to the origin. The returned point satisfies |out - origin| <= eps
// componentwise with no floating-point slack.
FeatureVector project(std::span<const double> candidate, std::span<const double> origin,
                      const AttackConfig& cfg);

AdversarialBatch pgd_attack(const TrainedModel& model, const Dataset& batch,
                            const AttackConfig& cfg);

}  // namespace audit
