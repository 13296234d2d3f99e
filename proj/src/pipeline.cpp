#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>

#include "audit/error.hpp"
#include "audit/pipeline.hpp"
#include "audit/rng.hpp"

namespace audit {

namespace {

template <typename F>
auto stage(const std::string& name, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error("[" + name + "] " + e.what());
  }
}

std::unique_ptr<NarrativeScorer> make_scorer(const RunConfig& cfg) {
  if (cfg.scorer == ScorerKind::Surrogate) return std::make_unique<SurrogateScorer>();
  RemoteScorerConfig remote = cfg.remote;
  if (remote.url.empty()) {
    const char* env_url = std::getenv("SCORER_URL");
    if (env_url != nullptr) remote.url = env_url;
  }
  if (remote.token.empty()) {
    const char* env_token = std::getenv("SCORER_TOKEN");
    if (env_token != nullptr) remote.token = env_token;
  }
  if (remote.url.empty()) {
    throw ConfigError("remote scorer selected but no URL given (config or SCORER_URL)");
  }
  return std::make_unique<RemoteScorer>(remote);
}

std::vector<double> score_rows(const TrainedModel& model, const Dataset& data) {
  std::vector<double> scores;
  scores.reserve(data.size());
  for (const auto& row : data) scores.push_back(model.predict_proba(row.features));
  return scores;
}

std::vector<double> score_rows(const TrainedModel& model,
                               const std::vector<FeatureVector>& rows) {
  std::vector<double> scores;
  scores.reserve(rows.size());
  for (const auto& row : rows) scores.push_back(model.predict_proba(row));
  return scores;
}

std::vector<int> labels_of(const Dataset& data) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& row : data) labels.push_back(row.label);
  return labels;
}

// Seeded stratified subsample of the test fold (documented choice: the
// subsample happens after the split, preserving class proportions).
Dataset subsample_stratified(const Dataset& data, std::size_t target, std::uint64_t seed) {
  if (target == 0 || data.size() <= target) return data;
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (data[i].label == 1 ? pos : neg).push_back(i);
  }
  const double frac = static_cast<double>(target) / static_cast<double>(data.size());
  Rng rng(mix64(seed, 0x5542ULL));
  std::vector<std::size_t> chosen;
  for (auto* cls : {&neg, &pos}) {
    Rng stream = rng.fork(cls == &pos ? 1 : 0);
    stream.shuffle(*cls);
    auto k = static_cast<std::size_t>(
        std::llround(static_cast<double>(cls->size()) * frac));
    k = std::min(k, cls->size());
    chosen.insert(chosen.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Instance> rows;
  rows.reserve(chosen.size());
  for (std::size_t i : chosen) rows.push_back(data[i]);
  return Dataset(data.feature_names(), std::move(rows));
}

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct DriftOutcome {
  DriftReport report;
  GovernanceVerdict verdict;
};

DriftOutcome audit_drift(const TrainedModel& model, const Dataset& test,
                         const AdversarialBatch& batch, const Dataset& train,
                         const RunConfig& cfg, NarrativeScorer& scorer,
                         std::uint64_t seed) {
  const BackgroundSet background =
      BackgroundSet::sample(train, cfg.background_size, mix64(seed, 0xB6ULL));

  std::vector<std::size_t> sample(test.size());
  for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i;
  Rng rng(mix64(seed, 0xD41F7ULL));
  rng.shuffle(sample);
  sample.resize(std::min(cfg.drift_sample, sample.size()));
  std::sort(sample.begin(), sample.end());

  const auto& names = test.feature_names();
  std::vector<DriftPair> pairs;
  pairs.reserve(sample.size());
  for (std::size_t i : sample) {
    DriftPair pair;
    pair.clean = exact_shapley(model, test[i].features, background);
    pair.adv = exact_shapley(model, batch.perturbed[i], background);
    pair.clean.instance_index = i;
    pair.adv.instance_index = i;
    pairs.push_back(std::move(pair));
  }

  DriftReport report;
  report.n_instances = pairs.size();

  if (cfg.drift_aggregation == DriftAggregation::PerInstance) {
    std::vector<double> cosines, ranks, llms;
    for (const auto& pair : pairs) {
      cosines.push_back(cosine_drift(pair));
      if (auto rc = rank_drift(pair)) ranks.push_back(*rc);
      const NarrativePrompt prompt =
          make_prompt(pair.clean, pair.adv, cfg.shap_top_k, names);
      try {
        llms.push_back(consistency_score(prompt, scorer));
      } catch (const TransportError&) {
        ++report.n_unscored;
      }
    }
    report.cosine = mean_of(cosines);
    report.rank_corr = mean_of(ranks);
    report.llm_score = mean_of(llms);
  } else {
    // Aggregate-vector mode: metrics on the mean |phi| profile of the batch.
    const std::size_t d = test.dim();
    DriftPair agg;
    agg.clean.phi.assign(d, 0.0);
    agg.adv.phi.assign(d, 0.0);
    for (const auto& pair : pairs) {
      for (std::size_t j = 0; j < d; ++j) {
        agg.clean.phi[j] += std::abs(pair.clean.phi[j]);
        agg.adv.phi[j] += std::abs(pair.adv.phi[j]);
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      agg.clean.phi[j] /= static_cast<double>(pairs.size());
      agg.adv.phi[j] /= static_cast<double>(pairs.size());
    }
    report.cosine = cosine_drift(agg);
    report.rank_corr = rank_drift(agg);
    const NarrativePrompt prompt = make_prompt(agg.clean, agg.adv, cfg.shap_top_k, names);
    try {
      report.llm_score = consistency_score(prompt, scorer);
    } catch (const TransportError&) {
      report.n_unscored = 1;
    }
  }

  const SriResult composite = compose_sri(report.cosine, report.rank_corr, report.llm_score);
  report.sri = composite.value;
  report.partial = composite.partial;

  DriftOutcome outcome;
  outcome.report = report;
  outcome.verdict.level = governance(clamp01(composite.value));
  outcome.verdict.sri = composite.value;
  outcome.verdict.early_warning = false;  // settled cross-regime
  return outcome;
}

RegimeReport audit_regime(const std::string& name, std::uint64_t regime_tag,
                          const Dataset& slice, const RunConfig& cfg,
                          NarrativeScorer& scorer, std::uint64_t seed) {
  RegimeReport report;
  report.regime = name;
  report.n_total = slice.size();
  report.default_rate = slice.positive_rate();

  const std::uint64_t regime_seed = mix64(seed, regime_tag);

  const SplitPair split = stage(name + "/split", [&] {
    return stratified_split(slice, cfg.test_fraction, regime_seed);
  });
  const Dataset test_fold = stage(name + "/subsample", [&] {
    return subsample_stratified(split.test, cfg.test_subsample, regime_seed);
  });
  report.n_train = split.train.size();
  report.n_test = test_fold.size();
  report.sample_warning = test_fold.size() < cfg.min_test_warn;

  const ScalingSpec scaling = stage(name + "/scale", [&] { return fit_scaling(split.train); });
  const Dataset train_scaled = apply_scaling(split.train, scaling);
  const Dataset test_scaled = apply_scaling(test_fold, scaling);

  const TrainedModel model = stage(name + "/train", [&] { return train(cfg.model, train_scaled); });

  const std::vector<double> clean_scores = score_rows(model, test_scaled);
  const ScoredSet clean_set(clean_scores, labels_of(test_scaled));
  report.clean = stage(name + "/clean-eval",
                       [&] { return evaluate_performance(clean_set, cfg.accuracy_tau); });

  // Thresholds frozen on the clean score distribution before the attack.
  for (double pct : cfg.thresholds) {
    ThresholdRow row;
    const double tau = percentile_threshold(clean_scores, pct);
    row.clean = evaluate_threshold(clean_set, pct, tau);
    report.thresholds.push_back(std::move(row));
  }

  AttackConfig attack_cfg = cfg.attack;
  attack_cfg.seed = mix64(cfg.attack.seed, regime_seed);
  for (std::size_t j : scaling.constant_features()) {
    attack_cfg.frozen_features.push_back(j);
  }
  const AdversarialBatch batch =
      stage(name + "/attack", [&] { return pgd_attack(model, test_scaled, attack_cfg); });

  const std::vector<double> adv_scores = score_rows(model, batch.perturbed);
  const ScoredSet adv_set(adv_scores, clean_set.labels);
  report.adversarial = stage(name + "/adv-eval",
                             [&] { return evaluate_performance(adv_set, cfg.accuracy_tau); });
  report.delta_auroc = report.clean.auroc - report.adversarial.auroc;
  report.delta_accuracy = report.clean.accuracy - report.adversarial.accuracy;

  for (auto& row : report.thresholds) {
    row.adv = evaluate_threshold(adv_set, row.percentile(), row.tau());
    if (row.clean.fnr && row.adv.fnr) row.delta_fnr = *row.adv.fnr - *row.clean.fnr;
    if (row.clean.fpr && row.adv.fpr) row.delta_fpr = *row.adv.fpr - *row.clean.fpr;
  }

  report.risk = stage(name + "/risk", [&] {
    return risk_report(clean_scores, adv_scores, cfg.exposure, cfg.risk_alpha);
  });

  if (cfg.drift_sample > 0) {
    const DriftOutcome drift = stage(name + "/explain", [&] {
      return audit_drift(model, test_scaled, batch, train_scaled, cfg, scorer, regime_seed);
    });
    report.drift = drift.report;
    report.verdict = drift.verdict;
  }
  return report;
}

struct SeedOutcome {
  RegimeReport calm;
  RegimeReport stress;
  CrossRegime cross;
};

SeedOutcome run_single_seed(const RunConfig& cfg, const RegimeSlices& slices,
                            NarrativeScorer& scorer, std::uint64_t seed) {
  SeedOutcome outcome;
  outcome.calm = audit_regime("calm", 0, slices.calm, cfg, scorer, seed);
  outcome.stress = audit_regime("stress", 1, slices.stress, cfg, scorer, seed);

  outcome.cross.raf = amplification(outcome.stress.delta_auroc, outcome.calm.delta_auroc);

  for (std::size_t t = 0; t < outcome.calm.thresholds.size(); ++t) {
    const ThresholdRow& c = outcome.calm.thresholds[t];
    const ThresholdRow& s = outcome.stress.thresholds[t];
    FnrAmplificationRow row;
    row.name = c.name();
    row.percentile = c.percentile();
    row.delta_fnr_calm = c.delta_fnr;
    row.delta_fnr_stress = s.delta_fnr;
    if (c.delta_fnr && s.delta_fnr) {
      row.factor = amplification(*s.delta_fnr, *c.delta_fnr).factor;
    }
    outcome.cross.fnr_amplification.push_back(std::move(row));
  }

  if (outcome.calm.drift && outcome.stress.drift) {
    const double sri_calm = outcome.calm.drift->sri;
    const double sri_stress = outcome.stress.drift->sri;
    outcome.cross.delta_sri = sri_calm - sri_stress;
    outcome.cross.early_warning =
        early_warning(sri_calm, sri_stress, outcome.stress.delta_auroc);
    outcome.calm.verdict->early_warning = outcome.cross.early_warning;
    outcome.stress.verdict->early_warning = outcome.cross.early_warning;
  }
  return outcome;
}

std::vector<SeedOutcome> run_all_seeds(const RunConfig& cfg, const Dataset& data,
                                       const StressSeries& stress) {
  cfg.validate();
  const RegimeSlices slices = stage("segment", [&] {
    return segment_regimes(data, stress, cfg.regime, cfg.join_mode);
  });
  const std::unique_ptr<NarrativeScorer> scorer = make_scorer(cfg);
  std::vector<SeedOutcome> outcomes;
  outcomes.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    outcomes.push_back(run_single_seed(cfg, slices, *scorer, seed));
  }
  return outcomes;
}

ReplicateSummary summarize(const RunConfig& cfg, const std::vector<SeedOutcome>& outcomes) {
  ReplicateSummary summary;
  summary.seeds = cfg.seeds;
  std::vector<double> defined;
  for (const auto& outcome : outcomes) {
    summary.raf_per_seed.push_back(outcome.cross.raf.factor);
    summary.delta_calm_per_seed.push_back(outcome.cross.raf.delta_calm);
    summary.delta_stress_per_seed.push_back(outcome.cross.raf.delta_stress);
    if (outcome.cross.raf.factor) defined.push_back(*outcome.cross.raf.factor);
  }
  if (!defined.empty()) {
    summary.mean_raf = mean_of(defined);
    summary.min_raf = *std::min_element(defined.begin(), defined.end());
    summary.max_raf = *std::max_element(defined.begin(), defined.end());
  }
  const auto mean_calm = mean_of(summary.delta_calm_per_seed);
  const auto mean_stress = mean_of(summary.delta_stress_per_seed);
  if (mean_calm && mean_stress) {
    summary.pooled_raf = amplification(*mean_stress, *mean_calm).factor;
  }
  return summary;
}

}  // namespace

EvaluationReport run_protocol(const RunConfig& cfg, const Dataset& data,
                              const StressSeries& stress) {
  const std::vector<SeedOutcome> outcomes = run_all_seeds(cfg, data, stress);
  EvaluationReport report;
  report.resolved_config = cfg.to_json();
  report.headline_seed = cfg.seeds.front();
  report.calm = outcomes.front().calm;
  report.stress = outcomes.front().stress;
  report.cross = outcomes.front().cross;
  if (outcomes.size() > 1) report.replicates = summarize(cfg, outcomes);
  return report;
}

EvaluationReport run_protocol(const RunConfig& cfg) {
  cfg.validate();
  const Dataset data = stage("load", [&] { return load_dataset(cfg.dataset_path, cfg.schema); });
  const StressSeries stress =
      stage("load", [&] { return StressSeries::load_csv(cfg.stress_path); });
  return run_protocol(cfg, data, stress);
}

ReplicateSummary replicate(const RunConfig& cfg, const Dataset& data,
                           const StressSeries& stress) {
  if (cfg.seeds.size() < 2) {
    throw ConfigError("replicate requires at least 2 seeds");
  }
  return summarize(cfg, run_all_seeds(cfg, data, stress));
}

ReplicateSummary replicate(const RunConfig& cfg) {
  if (cfg.seeds.size() < 2) {
    throw ConfigError("replicate requires at least 2 seeds");
  }
  cfg.validate();
  const Dataset data = stage("load", [&] { return load_dataset(cfg.dataset_path, cfg.schema); });
  const StressSeries stress =
      stage("load", [&] { return StressSeries::load_csv(cfg.stress_path); });
  return summarize(cfg, run_all_seeds(cfg, data, stress));
}

}  // namespace audit
