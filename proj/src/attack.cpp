#include "audit/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "audit/csv.hpp"
#include "audit/error.hpp"
#include "audit/rng.hpp"

namespace audit {

AttackConfig AttackConfig::for_epsilon(double epsilon, int iterations) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  cfg.alpha = epsilon > 0.0 ? epsilon / 4.0 : 0.025;
  cfg.iterations = iterations;
  return cfg;
}

void AttackConfig::validate(std::size_t dim) const {
  if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
  if (epsilon > 0.0 && alpha > epsilon) throw ConfigError("alpha must not exceed epsilon");
  if (fd_step >= alpha) throw ConfigError("fd_step must be smaller than alpha");
  if (restarts < 0) throw ConfigError("restarts must be >= 0");
  if (!lower.empty() && lower.size() != dim) throw ConfigError("bounds dimension mismatch");
  if (!upper.empty() && upper.size() != dim) throw ConfigError("bounds dimension mismatch");
  for (std::size_t j = 0; j < dim; ++j) {
    if (lo(j) > hi(j)) throw ConfigError("lower bound exceeds upper bound");
  }
  for (std::size_t f : frozen_features) {
    if (f >= dim) throw ConfigError("frozen feature index out of range");
  }
}

std::vector<bool> AttackConfig::frozen_mask(std::size_t dim) const {
  std::vector<bool> mask(dim, false);
  for (std::size_t f : frozen_features) mask[f] = true;
  return mask;
}

std::vector<double> finite_diff_grad(const TrainedModel& model, std::span<const double> x,
                                     int y, double fd_step,
                                     const std::vector<bool>& frozen) {
  const std::size_t d = x.size();
  std::vector<double> grad(d, 0.0);
  const double base = bce_loss(model.predict_proba(x), y);
  FeatureVector probe(x.begin(), x.end());
  for (std::size_t j = 0; j < d; ++j) {
    if (!frozen.empty() && frozen[j]) continue;
    const double saved = probe[j];
    probe[j] = saved + fd_step;
    const double bumped = bce_loss(model.predict_proba(probe), y);
    probe[j] = saved;
    grad[j] = (bumped - base) / fd_step;
  }
  return grad;
}

namespace {

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

// One-ulp fixups after the two clamps so the stored point never exceeds
// the budget once the deltas are recomputed in floating point.
void enforce_budget(double& value, double origin, double epsilon) {
  while (value - origin > epsilon) value = std::nextafter(value, origin);
  while (origin - value > epsilon) value = std::nextafter(value, origin);
}

struct LossEvaluator {
  const TrainedModel& model;
  int loss_label;
  double loss(std::span<const double> x) const {
    return bce_loss(model.predict_proba(x), loss_label);
  }
};

std::vector<double> gradient_for(const TrainedModel& model, std::span<const double> x,
                                 int label, const AttackConfig& cfg,
                                 const std::vector<bool>& frozen) {
  if (model.family() == ModelFamily::Logistic) {
    std::vector<double> g = model.grad_analytic(x, label);
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (frozen[j]) g[j] = 0.0;
    }
    return g;
  }
  return finite_diff_grad(model, x, label, cfg.fd_step, frozen);
}

FeatureVector attack_instance(const TrainedModel& model, const Instance& inst,
                              const AttackConfig& cfg, const std::vector<bool>& frozen,
                              std::size_t index) {
  const std::size_t d = inst.features.size();
  const int loss_label = cfg.targeted ? cfg.target_label : inst.label;
  // Untargeted PGD ascends the true-label loss; targeted mode descends
  // the loss of the requested label.
  const double direction = cfg.targeted ? -1.0 : 1.0;
  const LossEvaluator eval{model, loss_label};

  FeatureVector best;
  double best_loss = -std::numeric_limits<double>::infinity();

  for (int run = 0; run <= cfg.restarts; ++run) {
    FeatureVector x = inst.features;
    if (run > 0) {
      Rng noise(mix64(mix64(cfg.seed, index), static_cast<std::uint64_t>(run)));
      for (std::size_t j = 0; j < d; ++j) {
        x[j] += noise.uniform(-cfg.epsilon, cfg.epsilon);
      }
      x = project(x, inst.features, cfg);
    }

    for (int k = 0; k < cfg.iterations; ++k) {
      std::vector<double> g = gradient_for(model, x, loss_label, cfg, frozen);
      bool all_zero = true;
      FeatureVector candidate = x;
      for (std::size_t j = 0; j < d; ++j) {
        const int s = sign_of(direction * g[j]);
        if (s != 0) all_zero = false;
        candidate[j] += cfg.alpha * static_cast<double>(s);
      }
      if (all_zero && cfg.plateau_probe) {
        // Piecewise-constant models stall between splits; probe each
        // feature at +-alpha and keep whichever raises the target loss.
        const double here = direction * eval.loss(x);
        FeatureVector probe = x;
        for (std::size_t j = 0; j < d; ++j) {
          if (frozen[j]) continue;
          const double saved = probe[j];
          probe[j] = saved + cfg.alpha;
          const double up = direction * eval.loss(project(probe, inst.features, cfg));
          probe[j] = saved - cfg.alpha;
          const double down = direction * eval.loss(project(probe, inst.features, cfg));
          probe[j] = saved;
          if (up > here && up >= down) {
            candidate[j] = saved + cfg.alpha;
          } else if (down > here) {
            candidate[j] = saved - cfg.alpha;
          }
        }
      }
      x = project(candidate, inst.features, cfg);
    }

    if (cfg.restarts == 0) return x;
    const double run_loss = direction * eval.loss(x);
    if (run_loss > best_loss) {
      best_loss = run_loss;
      best = std::move(x);
    }
  }
  return best;
}

}  // namespace

FeatureVector project(std::span<const double> candidate, std::span<const double> origin,
                      const AttackConfig& cfg) {
  if (candidate.size() != origin.size()) {
    throw SchemaError("projection requires equal-length vectors");
  }
  const std::vector<bool> frozen = cfg.frozen_mask(origin.size());
  FeatureVector out(candidate.begin(), candidate.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (frozen[j]) {
      out[j] = origin[j];
      continue;
    }
    out[j] = std::clamp(out[j], origin[j] - cfg.epsilon, origin[j] + cfg.epsilon);
    out[j] = std::clamp(out[j], cfg.lo(j), cfg.hi(j));
    enforce_budget(out[j], origin[j], cfg.epsilon);
  }
  return out;
}

AdversarialBatch pgd_attack(const TrainedModel& model, const Dataset& batch,
                            const AttackConfig& cfg) {
  if (batch.dim() != model.dim()) {
    throw SchemaError("attack batch dimension does not match model");
  }
  cfg.validate(batch.dim());
  const std::vector<bool> frozen = cfg.frozen_mask(batch.dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.dim(); ++j) {
      const double v = batch[i].features[j];
      if (v < cfg.lo(j) || v > cfg.hi(j)) {
        throw ConfigError("instance " + std::to_string(i) + " lies outside attack bounds");
      }
    }
  }

  AdversarialBatch out;
  out.originals = batch;
  out.iterations_used = cfg.iterations;
  out.perturbed.resize(batch.size());
  out.max_abs_delta.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.perturbed[i] = attack_instance(model, batch[i], cfg, frozen, i);
    double linf = 0.0;
    for (std::size_t j = 0; j < batch.dim(); ++j) {
      linf = std::max(linf, std::abs(out.perturbed[i][j] - batch[i].features[j]));
    }
    out.max_abs_delta[i] = linf;
  }
  return out;
}

void AdversarialBatch::export_csv(const std::filesystem::path& path) const {
  std::ofstream file(path);
  if (!file) throw IoError("cannot write '" + path.string() + "'");
  const auto& names = originals.feature_names();
  for (const auto& n : names) file << "orig_" << n << ',';
  for (const auto& n : names) file << "adv_" << n << ',';
  file << "linf_delta\n";
  for (std::size_t i = 0; i < perturbed.size(); ++i) {
    for (double v : originals[i].features) file << csv::format_double(v) << ',';
    for (double v : perturbed[i]) file << csv::format_double(v) << ',';
    file << csv::format_double(max_abs_delta[i]) << '\n';
  }
}

}  // namespace audit
