#include <cmath>
#include <cstdio>
#include <fstream>

#include "audit/error.hpp"
#include "audit/pipeline.hpp"

namespace audit {

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

nlohmann::json perf_json(const PerformanceReport& p) {
  return {{"auroc", p.auroc}, {"accuracy", p.accuracy}, {"brier", p.brier}};
}

nlohmann::json regime_json(const RegimeReport& r) {
  nlohmann::json doc;
  doc["regime"] = r.regime;
  doc["n_total"] = r.n_total;
  doc["n_train"] = r.n_train;
  doc["n_test"] = r.n_test;
  doc["default_rate"] = r.default_rate;
  doc["sample_warning"] = r.sample_warning;
  doc["clean"] = perf_json(r.clean);
  doc["adversarial"] = perf_json(r.adversarial);
  doc["delta_auroc"] = r.delta_auroc;
  doc["delta_accuracy"] = r.delta_accuracy;
  nlohmann::json thresholds = nlohmann::json::array();
  for (const auto& row : r.thresholds) {
    thresholds.push_back({{"name", row.name()},
                          {"percentile", row.percentile()},
                          {"tau", row.tau()},
                          {"fnr_clean", opt_json(row.clean.fnr)},
                          {"fpr_clean", opt_json(row.clean.fpr)},
                          {"fnr_adv", opt_json(row.adv.fnr)},
                          {"fpr_adv", opt_json(row.adv.fpr)},
                          {"delta_fnr", opt_json(row.delta_fnr)},
                          {"delta_fpr", opt_json(row.delta_fpr)}});
  }
  doc["thresholds"] = std::move(thresholds);
  doc["risk"] = {{"el_clean", r.risk.el_clean},       {"el_adv", r.risk.el_adv},
                 {"delta_el", r.risk.delta_el},       {"delta_el_pct", r.risk.delta_el_pct},
                 {"var_clean", r.risk.var_clean},     {"var_adv", r.risk.var_adv},
                 {"es_clean", r.risk.es_clean},       {"es_adv", r.risk.es_adv}};
  if (r.drift) {
    doc["drift"] = {{"cosine", opt_json(r.drift->cosine)},
                    {"rank_corr", opt_json(r.drift->rank_corr)},
                    {"llm_score", opt_json(r.drift->llm_score)},
                    {"sri", r.drift->sri},
                    {"partial", r.drift->partial},
                    {"n_instances", r.drift->n_instances},
                    {"n_unscored", r.drift->n_unscored}};
  } else {
    doc["drift"] = nullptr;
  }
  if (r.verdict) {
    doc["governance"] = {{"level", to_string(r.verdict->level)},
                         {"sri", r.verdict->sri},
                         {"early_warning", r.verdict->early_warning}};
  } else {
    doc["governance"] = nullptr;
  }
  return doc;
}

void check_consistency(const EvaluationReport& report) {
  // RAF must recompute from the report's own delta cells.
  const AmplificationResult recomputed =
      amplification(report.stress.delta_auroc, report.calm.delta_auroc);
  const bool same_defined = recomputed.defined() == report.cross.raf.defined();
  const bool same_value =
      !recomputed.defined() || *recomputed.factor == *report.cross.raf.factor;
  if (!same_defined || !same_value) {
    throw Error("report inconsistency: RAF does not match its delta cells");
  }
  // SRI must recompute from its own components.
  for (const RegimeReport* r : {&report.calm, &report.stress}) {
    if (!r->drift || r->drift->partial) continue;
    const double expect =
        sri(*r->drift->cosine, *r->drift->rank_corr, *r->drift->llm_score);
    if (std::abs(expect - r->drift->sri) > 1e-9) {
      throw Error("report inconsistency: SRI does not match its components in " + r->regime);
    }
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
}

std::string baseline_csv(const EvaluationReport& report) {
  std::string out = "Regime,Samples,TestSize,DefaultRate,AUROC,Accuracy,Brier\n";
  for (const RegimeReport* r : {&report.calm, &report.stress}) {
    out += r->regime + ',' + std::to_string(r->n_total) + ',' + std::to_string(r->n_test) +
           ',' + fmt(r->default_rate) + ',' + fmt(r->clean.auroc) + ',' +
           fmt(r->clean.accuracy) + ',' + fmt(r->clean.brier) + '\n';
  }
  return out;
}

std::string adversarial_csv(const EvaluationReport& report) {
  std::string out = "Regime,AUROC_Clean,AUROC_Adv,DeltaAUROC,Acc_Clean,Acc_Adv,DeltaAcc\n";
  for (const RegimeReport* r : {&report.calm, &report.stress}) {
    out += r->regime + ',' + fmt(r->clean.auroc) + ',' + fmt(r->adversarial.auroc) + ',' +
           fmt(r->delta_auroc) + ',' + fmt(r->clean.accuracy) + ',' +
           fmt(r->adversarial.accuracy) + ',' + fmt(r->delta_accuracy) + '\n';
  }
  return out;
}

std::string risk_csv(const EvaluationReport& report) {
  std::string out =
      "Regime,EL_Clean,EL_Adv,DeltaEL,DeltaEL_Pct,VaR_Clean,VaR_Adv,ES_Clean,ES_Adv\n";
  for (const RegimeReport* r : {&report.calm, &report.stress}) {
    const RiskReport& k = r->risk;
    out += r->regime + ',' + fmt(k.el_clean) + ',' + fmt(k.el_adv) + ',' + fmt(k.delta_el) +
           ',' + fmt(k.delta_el_pct) + ',' + fmt(k.var_clean) + ',' + fmt(k.var_adv) + ',' +
           fmt(k.es_clean) + ',' + fmt(k.es_adv) + '\n';
  }
  return out;
}

std::string thresholds_csv(const EvaluationReport& report) {
  std::string out = "Threshold,Regime,Tau,FNR_Clean,FNR_Adv,DeltaFNR,FPR_Adv\n";
  for (std::size_t t = 0; t < report.calm.thresholds.size(); ++t) {
    for (const RegimeReport* r : {&report.calm, &report.stress}) {
      const ThresholdRow& row = r->thresholds[t];
      out += row.name() + ',' + r->regime + ',' + fmt(row.tau()) + ',' +
             fmt_opt(row.clean.fnr) + ',' + fmt_opt(row.adv.fnr) + ',' +
             fmt_opt(row.delta_fnr) + ',' + fmt_opt(row.adv.fpr) + '\n';
    }
  }
  return out;
}

std::string sri_csv(const EvaluationReport& report) {
  std::string out = "Regime,SHAP_Cosine,Rank_Correlation,LLM_Consistency,SRI_Composite\n";
  const auto& calm = report.calm.drift;
  const auto& stress = report.stress.drift;
  for (const RegimeReport* r : {&report.calm, &report.stress}) {
    if (!r->drift) continue;
    out += r->regime + ',' + fmt_opt(r->drift->cosine) + ',' + fmt_opt(r->drift->rank_corr) +
           ',' + fmt_opt(r->drift->llm_score) + ',' + fmt(r->drift->sri) + '\n';
  }
  if (calm && stress) {
    auto delta = [](const std::optional<double>& a,
                    const std::optional<double>& b) -> std::optional<double> {
      if (a && b) return *a - *b;
      return std::nullopt;
    };
    out += "Delta," + fmt_opt(delta(calm->cosine, stress->cosine)) + ',' +
           fmt_opt(delta(calm->rank_corr, stress->rank_corr)) + ',' +
           fmt_opt(delta(calm->llm_score, stress->llm_score)) + ',' +
           fmt(calm->sri - stress->sri) + '\n';
  }
  return out;
}

std::string report_md(const EvaluationReport& report) {
  std::string md = "# Regime-Aware Adversarial Audit\n\n";
  md += "Headline seed: " + std::to_string(report.headline_seed) + "\n\n";
  md += "## Performance\n\n";
  md += "| Regime | AUROC clean | AUROC adv | dAUROC | Acc clean | Acc adv |\n";
  md += "|---|---|---|---|---|---|\n";
  for (const RegimeReport* r : {&report.calm, &report.stress}) {
    md += "| " + r->regime + " | " + fmt(r->clean.auroc) + " | " + fmt(r->adversarial.auroc) +
          " | " + fmt(r->delta_auroc) + " | " + fmt(r->clean.accuracy) + " | " +
          fmt(r->adversarial.accuracy) + " |\n";
  }
  md += "\nRisk Amplification Factor: ";
  md += report.cross.raf.defined() ? fmt(*report.cross.raf.factor)
                                   : std::string("undefined (no calm degradation)");
  md += "\n\n## Decision thresholds\n\n";
  md += "| Threshold | Regime | FNR clean | FNR adv | dFNR |\n|---|---|---|---|---|\n";
  for (std::size_t t = 0; t < report.calm.thresholds.size(); ++t) {
    for (const RegimeReport* r : {&report.calm, &report.stress}) {
      const ThresholdRow& row = r->thresholds[t];
      md += "| " + row.name() + " | " + r->regime + " | " + fmt_opt(row.clean.fnr) + " | " +
            fmt_opt(row.adv.fnr) + " | " + fmt_opt(row.delta_fnr) + " |\n";
    }
  }
  md += "\nFNR amplification (stress/calm): ";
  for (const auto& row : report.cross.fnr_amplification) {
    md += row.name + "=" + fmt_opt(row.factor) + " ";
  }
  md += "\n\n## Explanation stability\n\n";
  for (const RegimeReport* r : {&report.calm, &report.stress}) {
    if (!r->drift) {
      md += r->regime + ": drift audit skipped\n";
      continue;
    }
    md += r->regime + ": SRI=" + fmt(r->drift->sri) +
          " governance=" + to_string(r->verdict->level) + "\n";
  }
  if (report.cross.delta_sri) {
    md += "\ndSRI (calm - stress): " + fmt(*report.cross.delta_sri) + "\n";
    md += "Early warning: " + std::string(report.cross.early_warning ? "yes" : "no") + "\n";
  }
  if (report.calm.sample_warning || report.stress.sample_warning) {
    md += "\nWarning: a regime test fold has fewer than the recommended instance count.\n";
  }
  if (report.replicates) {
    md += "\n## Replicates\n\n";
    md += "| Seed | RAF |\n|---|---|\n";
    for (std::size_t i = 0; i < report.replicates->seeds.size(); ++i) {
      md += "| " + std::to_string(report.replicates->seeds[i]) + " | " +
            fmt_opt(report.replicates->raf_per_seed[i]) + " |\n";
    }
    md += "\nMean RAF: " + fmt_opt(report.replicates->mean_raf) +
          ", min: " + fmt_opt(report.replicates->min_raf) +
          ", max: " + fmt_opt(report.replicates->max_raf) +
          ", pooled: " + fmt_opt(report.replicates->pooled_raf) + "\n";
  }
  return md;
}

}  // namespace

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json doc;
  doc["config"] = resolved_config;
  doc["headline_seed"] = headline_seed;
  doc["regimes"] = {{"calm", regime_json(calm)}, {"stress", regime_json(stress)}};

  nlohmann::json cross_doc;
  cross_doc["raf"] = {{"delta_calm", cross.raf.delta_calm},
                      {"delta_stress", cross.raf.delta_stress},
                      {"factor", opt_json(cross.raf.factor)},
                      {"defined", cross.raf.defined()}};
  nlohmann::json amp_rows = nlohmann::json::array();
  for (const auto& row : cross.fnr_amplification) {
    amp_rows.push_back({{"name", row.name},
                        {"percentile", row.percentile},
                        {"delta_fnr_calm", opt_json(row.delta_fnr_calm)},
                        {"delta_fnr_stress", opt_json(row.delta_fnr_stress)},
                        {"factor", opt_json(row.factor)}});
  }
  cross_doc["fnr_amplification"] = std::move(amp_rows);
  cross_doc["delta_sri"] = opt_json(cross.delta_sri);
  cross_doc["early_warning"] = cross.early_warning;
  doc["cross_regime"] = std::move(cross_doc);

  if (replicates) {
    nlohmann::json rep;
    rep["seeds"] = replicates->seeds;
    nlohmann::json rafs = nlohmann::json::array();
    for (const auto& r : replicates->raf_per_seed) rafs.push_back(opt_json(r));
    rep["raf_per_seed"] = std::move(rafs);
    rep["delta_calm_per_seed"] = replicates->delta_calm_per_seed;
    rep["delta_stress_per_seed"] = replicates->delta_stress_per_seed;
    rep["mean_raf"] = opt_json(replicates->mean_raf);
    rep["min_raf"] = opt_json(replicates->min_raf);
    rep["max_raf"] = opt_json(replicates->max_raf);
    rep["pooled_raf"] = opt_json(replicates->pooled_raf);
    doc["replicates"] = std::move(rep);
  } else {
    doc["replicates"] = nullptr;
  }
  return doc;
}

void emit_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  check_consistency(report);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "'");

  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(dir / "baseline.csv", baseline_csv(report));
  write_file(dir / "adversarial.csv", adversarial_csv(report));
  write_file(dir / "risk.csv", risk_csv(report));
  write_file(dir / "thresholds.csv", thresholds_csv(report));
  write_file(dir / "sri.csv", sri_csv(report));
  write_file(dir / "report.md", report_md(report));
}

}  // namespace audit
