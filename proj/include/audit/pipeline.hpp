#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "audit/attack.hpp"
#include "audit/dataset.hpp"
#include "audit/metrics.hpp"
#include "audit/model.hpp"
#include "audit/risk.hpp"
#include "audit/scorer_remote.hpp"
#include "audit/semantic.hpp"

namespace audit {

enum class ScorerKind { Surrogate, Remote };
enum class DriftAggregation { PerInstance, MeanAbsVector };

struct RunConfig {
  std::string dataset_path;
  std::string stress_path;
  CsvSchema schema;
  JoinMode join_mode = JoinMode::LastObservation;

  RegimeConfig regime{15.0, 20.0};
  ModelSpec model;
  AttackConfig attack = AttackConfig::for_epsilon(0.1, 10);
  ExposureProfile exposure;
  double risk_alpha = 0.95;

  std::vector<double> thresholds{90.0, 50.0, 95.0};
  double accuracy_tau = 0.5;
  double test_fraction = 0.2;
  std::size_t test_subsample = 0;   // 0 = use the whole test fold
  std::size_t min_test_warn = 2000; // sample-size guard, warning only

  std::size_t shap_top_k = 3;
  std::size_t background_size = 64;
  std::size_t drift_sample = 200;   // 0 = skip the explanation audit
  DriftAggregation drift_aggregation = DriftAggregation::PerInstance;

  ScorerKind scorer = ScorerKind::Surrogate;
  RemoteScorerConfig remote;  // url/token fall back to SCORER_URL / SCORER_TOKEN

  std::vector<std::uint64_t> seeds{42};
  std::string output_dir = "audit_out";

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::filesystem::path& path);
};

struct ThresholdRow {
  ThresholdReport clean;
  ThresholdReport adv;  // same tau, frozen from the clean distribution
  std::optional<double> delta_fnr, delta_fpr;

  const std::string& name() const { return clean.name; }
  double percentile() const { return clean.percentile; }
  double tau() const { return clean.tau; }
};

struct RegimeReport {
  std::string regime;
  std::size_t n_total = 0, n_train = 0, n_test = 0;
  double default_rate = 0.0;
  bool sample_warning = false;

  PerformanceReport clean;
  PerformanceReport adversarial;
  double delta_auroc = 0.0;
  double delta_accuracy = 0.0;

  std::vector<ThresholdRow> thresholds;
  RiskReport risk;

  std::optional<DriftReport> drift;
  std::optional<GovernanceVerdict> verdict;
};

struct FnrAmplificationRow {
  std::string name;
  double percentile = 0.0;
  std::optional<double> delta_fnr_calm, delta_fnr_stress;
  std::optional<double> factor;
};

struct CrossRegime {
  AmplificationResult raf;
  std::vector<FnrAmplificationRow> fnr_amplification;
  std::optional<double> delta_sri;
  bool early_warning = false;
};

struct ReplicateSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<double>> raf_per_seed;
  std::vector<double> delta_calm_per_seed;
  std::vector<double> delta_stress_per_seed;
  std::optional<double> mean_raf, min_raf, max_raf;
  // Ratio of mean degradations; the stable aggregate across seeds.
  std::optional<double> pooled_raf;
};

struct EvaluationReport {
  nlohmann::json resolved_config;
  std::uint64_t headline_seed = 0;
  RegimeReport calm;
  RegimeReport stress;
  CrossRegime cross;
  std::optional<ReplicateSummary> replicates;

  nlohmann::json to_json() const;
};

// Full protocol: per regime, stratified split, scale, train, clean
// metrics, PGD on the test fold, adversarial metrics, risk translation,
// attribution drift, SRI and governance; cross-regime RAF and FNR
// amplification. Headline numbers come from the first seed; additional
// seeds populate the replicate summary.
EvaluationReport run_protocol(const RunConfig& cfg);
EvaluationReport run_protocol(const RunConfig& cfg, const Dataset& data,
                              const StressSeries& stress);

// Requires >= 2 seeds; runs the protocol per seed and summarizes RAF.
ReplicateSummary replicate(const RunConfig& cfg);
ReplicateSummary replicate(const RunConfig& cfg, const Dataset& data,
                           const StressSeries& stress);

struct SynthSpec {
  std::size_t n_per_regime = 5000;
  std::size_t d = 8;
  double prior_calm = 0.35;
  double prior_stress = 0.35;
  // 1.0 = identical regimes; > 1 divides the stress-regime score margins.
  double margin_compression = 1.0;
  double noise_level = 0.02;  // label flip probability
  std::uint64_t seed = 7;
  RegimeConfig regime{15.0, 20.0};

  void validate() const;
  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& doc);
  static SynthSpec load(const std::filesystem::path& path);
};

// Two time blocks with stress values below tau_calm / above tau_stress;
// labels from a linear ground-truth score whose class margins shrink in
// the stress block by the compression factor.
std::pair<Dataset, StressSeries> synth_generate(const SynthSpec& spec);

// Ground-truth margin |w . x - c0| of a generated row; used by generator
// self-tests.
double synth_margin(const SynthSpec& spec, const FeatureVector& x);

// Writes report.json, baseline.csv, adversarial.csv, risk.csv,
// thresholds.csv, sri.csv and report.md. Recomputes RAF and SRI from the
// report's own cells before writing.
void emit_report(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace audit
