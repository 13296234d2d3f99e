#include <fstream>

#include "audit/error.hpp"
#include "audit/pipeline.hpp"

namespace audit {

namespace {

const char* to_string(JoinMode mode) {
  return mode == JoinMode::Exact ? "exact" : "last_observation";
}

JoinMode join_mode_from_string(const std::string& s) {
  if (s == "exact") return JoinMode::Exact;
  if (s == "last_observation") return JoinMode::LastObservation;
  throw ConfigError("unknown join mode '" + s + "'");
}

const char* to_string(ScorerKind kind) {
  return kind == ScorerKind::Remote ? "remote" : "surrogate";
}

ScorerKind scorer_from_string(const std::string& s) {
  if (s == "remote") return ScorerKind::Remote;
  if (s == "surrogate") return ScorerKind::Surrogate;
  throw ConfigError("unknown scorer kind '" + s + "'");
}

const char* to_string(DriftAggregation agg) {
  return agg == DriftAggregation::MeanAbsVector ? "mean_abs" : "per_instance";
}

DriftAggregation aggregation_from_string(const std::string& s) {
  if (s == "mean_abs") return DriftAggregation::MeanAbsVector;
  if (s == "per_instance") return DriftAggregation::PerInstance;
  throw ConfigError("unknown drift aggregation '" + s + "'");
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    nlohmann::json doc;
    in >> doc;
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  exposure.validate();
  if (!(risk_alpha > 0.0 && risk_alpha < 1.0)) throw ConfigError("risk_alpha must lie in (0, 1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (thresholds.empty()) throw ConfigError("at least one threshold percentile required");
  for (double pct : thresholds) {
    if (!(pct >= 0.0 && pct <= 100.0)) throw ConfigError("threshold percentiles must lie in [0, 100]");
  }
  if (seeds.empty()) throw ConfigError("at least one seed required");
  if (shap_top_k < 1) throw ConfigError("shap_top_k must be >= 1");
  if (background_size < 1) throw ConfigError("background_size must be >= 1");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json doc;
  doc["dataset"] = dataset_path;
  doc["stress"] = stress_path;
  doc["schema"] = {{"feature_columns", schema.feature_columns},
                   {"label_column", schema.label_column},
                   {"time_column", schema.time_column},
                   {"delimiter", std::string(1, schema.delimiter)}};
  doc["join_mode"] = to_string(join_mode);
  doc["regime"] = {{"tau_calm", regime.tau_calm}, {"tau_stress", regime.tau_stress}};
  nlohmann::json model_doc;
  model_doc["family"] = audit::to_string(model.family);
  model_doc["seed"] = model.seed;
  model_doc["tree"] = {{"learning_rate", model.tree.learning_rate},
                       {"n_rounds", model.tree.n_rounds},
                       {"max_depth", model.tree.max_depth},
                       {"min_leaf", model.tree.min_leaf},
                       {"l2", model.tree.l2}};
  model_doc["logistic"] = {{"learning_rate", model.logistic.learning_rate},
                           {"n_epochs", model.logistic.n_epochs},
                           {"l2", model.logistic.l2}};
  doc["model"] = std::move(model_doc);
  nlohmann::json attack_doc;
  attack_doc["epsilon"] = attack.epsilon;
  attack_doc["alpha"] = attack.alpha;
  attack_doc["iterations"] = attack.iterations;
  attack_doc["fd_step"] = attack.fd_step;
  attack_doc["seed"] = attack.seed;
  attack_doc["targeted"] = attack.targeted;
  attack_doc["target_label"] = attack.target_label;
  attack_doc["restarts"] = attack.restarts;
  attack_doc["plateau_probe"] = attack.plateau_probe;
  if (!attack.lower.empty()) attack_doc["lower"] = attack.lower;
  if (!attack.upper.empty()) attack_doc["upper"] = attack.upper;
  if (!attack.frozen_features.empty()) attack_doc["frozen_features"] = attack.frozen_features;
  doc["attack"] = std::move(attack_doc);
  doc["exposure"] = {{"lgd", exposure.lgd}, {"ead_default", exposure.ead_default}};
  doc["risk_alpha"] = risk_alpha;
  doc["thresholds"] = thresholds;
  doc["accuracy_tau"] = accuracy_tau;
  doc["test_fraction"] = test_fraction;
  doc["test_subsample"] = test_subsample;
  doc["min_test_warn"] = min_test_warn;
  doc["shap_top_k"] = shap_top_k;
  doc["background_size"] = background_size;
  doc["drift_sample"] = drift_sample;
  doc["drift_aggregation"] = to_string(drift_aggregation);
  doc["scorer"] = to_string(scorer);
  // Auth token intentionally not embedded.
  doc["remote"] = {{"url", remote.url},
                   {"timeout_seconds", remote.timeout_seconds},
                   {"max_retries", remote.max_retries}};
  doc["seeds"] = seeds;
  doc["output_dir"] = output_dir;
  return doc;
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  RunConfig cfg;
  cfg.dataset_path = doc.value("dataset", cfg.dataset_path);
  cfg.stress_path = doc.value("stress", cfg.stress_path);
  if (doc.contains("schema")) {
    const auto& s = doc["schema"];
    cfg.schema.feature_columns =
        s.value("feature_columns", std::vector<std::string>{});
    cfg.schema.label_column = s.value("label_column", cfg.schema.label_column);
    cfg.schema.time_column = s.value("time_column", cfg.schema.time_column);
    const std::string delim = s.value("delimiter", std::string(1, cfg.schema.delimiter));
    if (delim.size() != 1) throw ConfigError("delimiter must be a single character");
    cfg.schema.delimiter = delim[0];
  }
  if (doc.contains("join_mode")) {
    cfg.join_mode = join_mode_from_string(doc["join_mode"].get<std::string>());
  }
  if (doc.contains("regime")) {
    cfg.regime = RegimeConfig(doc["regime"].at("tau_calm").get<double>(),
                              doc["regime"].at("tau_stress").get<double>());
  }
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    if (m.contains("family")) {
      cfg.model.family = model_family_from_string(m["family"].get<std::string>());
    }
    cfg.model.seed = m.value("seed", cfg.model.seed);
    if (m.contains("tree")) {
      const auto& t = m["tree"];
      cfg.model.tree.learning_rate = t.value("learning_rate", cfg.model.tree.learning_rate);
      cfg.model.tree.n_rounds = t.value("n_rounds", cfg.model.tree.n_rounds);
      cfg.model.tree.max_depth = t.value("max_depth", cfg.model.tree.max_depth);
      cfg.model.tree.min_leaf = t.value("min_leaf", cfg.model.tree.min_leaf);
      cfg.model.tree.l2 = t.value("l2", cfg.model.tree.l2);
    }
    if (m.contains("logistic")) {
      const auto& l = m["logistic"];
      cfg.model.logistic.learning_rate =
          l.value("learning_rate", cfg.model.logistic.learning_rate);
      cfg.model.logistic.n_epochs = l.value("n_epochs", cfg.model.logistic.n_epochs);
      cfg.model.logistic.l2 = l.value("l2", cfg.model.logistic.l2);
    }
  }
  if (doc.contains("attack")) {
    const auto& a = doc["attack"];
    if (a.contains("epsilon")) {
      cfg.attack = AttackConfig::for_epsilon(a["epsilon"].get<double>(),
                                             a.value("iterations", cfg.attack.iterations));
    }
    cfg.attack.alpha = a.value("alpha", cfg.attack.alpha);
    cfg.attack.iterations = a.value("iterations", cfg.attack.iterations);
    cfg.attack.fd_step = a.value("fd_step", cfg.attack.fd_step);
    cfg.attack.seed = a.value("seed", cfg.attack.seed);
    cfg.attack.targeted = a.value("targeted", cfg.attack.targeted);
    cfg.attack.target_label = a.value("target_label", cfg.attack.target_label);
    cfg.attack.restarts = a.value("restarts", cfg.attack.restarts);
    cfg.attack.plateau_probe = a.value("plateau_probe", cfg.attack.plateau_probe);
    cfg.attack.lower = a.value("lower", std::vector<double>{});
    cfg.attack.upper = a.value("upper", std::vector<double>{});
    cfg.attack.frozen_features = a.value("frozen_features", std::vector<std::size_t>{});
  }
  if (doc.contains("exposure")) {
    cfg.exposure.lgd = doc["exposure"].value("lgd", cfg.exposure.lgd);
    cfg.exposure.ead_default = doc["exposure"].value("ead_default", cfg.exposure.ead_default);
  }
  cfg.risk_alpha = doc.value("risk_alpha", cfg.risk_alpha);
  cfg.thresholds = doc.value("thresholds", cfg.thresholds);
  cfg.accuracy_tau = doc.value("accuracy_tau", cfg.accuracy_tau);
  cfg.test_fraction = doc.value("test_fraction", cfg.test_fraction);
  cfg.test_subsample = doc.value("test_subsample", cfg.test_subsample);
  cfg.min_test_warn = doc.value("min_test_warn", cfg.min_test_warn);
  cfg.shap_top_k = doc.value("shap_top_k", cfg.shap_top_k);
  cfg.background_size = doc.value("background_size", cfg.background_size);
  cfg.drift_sample = doc.value("drift_sample", cfg.drift_sample);
  if (doc.contains("drift_aggregation")) {
    cfg.drift_aggregation = aggregation_from_string(doc["drift_aggregation"].get<std::string>());
  }
  if (doc.contains("scorer")) {
    cfg.scorer = scorer_from_string(doc["scorer"].get<std::string>());
  }
  if (doc.contains("remote")) {
    const auto& r = doc["remote"];
    cfg.remote.url = r.value("url", cfg.remote.url);
    cfg.remote.token = r.value("token", cfg.remote.token);
    cfg.remote.timeout_seconds = r.value("timeout_seconds", cfg.remote.timeout_seconds);
    cfg.remote.max_retries = r.value("max_retries", cfg.remote.max_retries);
  }
  cfg.seeds = doc.value("seeds", cfg.seeds);
  cfg.output_dir = doc.value("output_dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_json(load_json_file(path));
}

nlohmann::json SynthSpec::to_json() const {
  return {{"n_per_regime", n_per_regime},
          {"d", d},
          {"prior_calm", prior_calm},
          {"prior_stress", prior_stress},
          {"margin_compression", margin_compression},
          {"noise_level", noise_level},
          {"seed", seed},
          {"regime", {{"tau_calm", regime.tau_calm}, {"tau_stress", regime.tau_stress}}}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& doc) {
  SynthSpec spec;
  spec.n_per_regime = doc.value("n_per_regime", spec.n_per_regime);
  spec.d = doc.value("d", spec.d);
  spec.prior_calm = doc.value("prior_calm", spec.prior_calm);
  spec.prior_stress = doc.value("prior_stress", spec.prior_stress);
  spec.margin_compression = doc.value("margin_compression", spec.margin_compression);
  spec.noise_level = doc.value("noise_level", spec.noise_level);
  spec.seed = doc.value("seed", spec.seed);
  if (doc.contains("regime")) {
    spec.regime = RegimeConfig(doc["regime"].at("tau_calm").get<double>(),
                               doc["regime"].at("tau_stress").get<double>());
  }
  spec.validate();
  return spec;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  return from_json(load_json_file(path));
}

}  // namespace audit
