#include <cmath>

#include "audit/error.hpp"
#include "audit/pipeline.hpp"
#include "audit/rng.hpp"

namespace audit {

void SynthSpec::validate() const {
  if (d < 1) throw ConfigError("synth d must be >= 1");
  if (d > kShapleyMaxFeatures) {
    throw ConfigError("synth d must be <= " + std::to_string(kShapleyMaxFeatures) +
                      " to stay Shapley-compatible");
  }
  for (double p : {prior_calm, prior_stress}) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("class priors must lie in (0, 1)");
  }
  if (!(margin_compression > 0.0)) throw ConfigError("margin_compression must be > 0");
  if (noise_level < 0.0 || noise_level >= 0.5) {
    throw ConfigError("noise_level must lie in [0, 0.5)");
  }
}

namespace {

// Score-margin acceptance band, in units of the unit-norm ground-truth
// direction. Calibrated so a 0.05 l-inf budget flips a minority of calm
// pairs while leaving room for compression to amplify the stress block.
constexpr double kMarginLo = 0.05;
constexpr double kMarginHi = 1.1;

struct GroundTruth {
  std::vector<double> direction;  // unit l2 norm
  double center = 0.0;            // score of the all-0.5 point
};

GroundTruth make_ground_truth(const SynthSpec& spec) {
  Rng rng(mix64(spec.seed, 0x474e54ULL));
  GroundTruth gt;
  gt.direction.resize(spec.d);
  double norm_sq = 0.0;
  for (auto& w : gt.direction) {
    w = rng.uniform(0.5, 1.0);
    norm_sq += w * w;
  }
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (auto& w : gt.direction) w *= inv_norm;
  for (double w : gt.direction) gt.center += 0.5 * w;
  return gt;
}

double score_of(const GroundTruth& gt, const FeatureVector& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += gt.direction[j] * x[j];
  return s;
}

}  // namespace

double synth_margin(const SynthSpec& spec, const FeatureVector& x) {
  const GroundTruth gt = make_ground_truth(spec);
  return std::abs(score_of(gt, x) - gt.center);
}

std::pair<Dataset, StressSeries> synth_generate(const SynthSpec& spec) {
  spec.validate();
  const GroundTruth gt = make_ground_truth(spec);

  std::vector<std::string> names(spec.d);
  for (std::size_t j = 0; j < spec.d; ++j) names[j] = "f" + std::to_string(j);

  std::vector<Instance> rows;
  rows.reserve(2 * spec.n_per_regime);
  StressSeries stress;

  Rng rng(mix64(spec.seed, 0x44415441ULL));
  std::int64_t timestamp = 0;
  for (int block = 0; block < 2; ++block) {
    const bool is_stress = block == 1;
    const double prior = is_stress ? spec.prior_stress : spec.prior_calm;

    for (std::size_t i = 0; i < spec.n_per_regime; ++i) {
      const int clean_label = rng.bernoulli(prior) ? 1 : 0;
      Instance inst;
      inst.features.resize(spec.d);
      double margin = 0.0;
      for (int attempt = 0;; ++attempt) {
        if (attempt > 100000) {
          throw ConfigError("synth rejection sampling failed; margin band too narrow");
        }
        for (auto& v : inst.features) v = rng.uniform();
        margin = score_of(gt, inst.features) - gt.center;
        const bool right_side = clean_label == 1 ? margin > 0.0 : margin < 0.0;
        const double mag = std::abs(margin);
        if (right_side && mag >= kMarginLo && mag <= kMarginHi) break;
      }
      if (is_stress && spec.margin_compression != 1.0) {
        // Shrink toward the boundary plane along the ground-truth
        // direction: the stress margin becomes exactly margin / c, so the
        // class separation scales by the compression factor.
        const double shift = margin * (1.0 - 1.0 / spec.margin_compression);
        for (std::size_t j = 0; j < spec.d; ++j) {
          inst.features[j] -= shift * gt.direction[j];
        }
      }
      inst.label = rng.bernoulli(spec.noise_level) ? 1 - clean_label : clean_label;
      inst.timestamp = timestamp;

      const double s = is_stress ? spec.regime.tau_stress * rng.uniform(1.1, 1.6)
                                 : spec.regime.tau_calm * rng.uniform(0.35, 0.85);
      stress.add(timestamp, s);
      ++timestamp;
      rows.push_back(std::move(inst));
    }
  }
  return {Dataset(std::move(names), std::move(rows)), std::move(stress)};
}

}  // namespace audit
