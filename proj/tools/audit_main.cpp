#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "audit/error.hpp"
#include "audit/pipeline.hpp"

namespace {

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& arg) {
  std::vector<std::uint64_t> seeds;
  std::string token;
  for (char c : arg + ",") {
    if (c == ',') {
      if (!token.empty()) seeds.push_back(std::stoull(token));
      token.clear();
    } else {
      token += c;
    }
  }
  return seeds;
}

int run_command(const std::string& config_path, const std::string& out_override) {
  audit::RunConfig cfg = audit::RunConfig::load(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const audit::EvaluationReport report = audit::run_protocol(cfg);
  audit::emit_report(report, cfg.output_dir);
  std::cout << "report written to " << cfg.output_dir << "\n";
  std::cout << "RAF: " << fmt_opt(report.cross.raf.factor) << "\n";
  return 0;
}

int synth_command(const std::string& spec_path, const std::string& out_dir,
                  const audit::SynthSpec& overrides, bool have_spec) {
  audit::SynthSpec spec = have_spec ? audit::SynthSpec::load(spec_path) : overrides;
  auto [data, stress] = audit::synth_generate(spec);
  std::filesystem::create_directories(out_dir);
  audit::write_dataset_csv(data, std::filesystem::path(out_dir) / "data.csv");
  stress.write_csv(std::filesystem::path(out_dir) / "stress.csv");
  std::ofstream spec_out(std::filesystem::path(out_dir) / "synth_spec.json");
  spec_out << spec.to_json().dump(2) << "\n";
  std::cout << "wrote " << data.size() << " rows (d=" << data.dim() << ") to " << out_dir
            << "\n";
  return 0;
}

int replicate_command(const std::string& config_path, const std::string& seeds_arg,
                      const std::string& out_override) {
  audit::RunConfig cfg = audit::RunConfig::load(config_path);
  if (!seeds_arg.empty()) cfg.seeds = parse_seed_list(seeds_arg);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const audit::ReplicateSummary summary = audit::replicate(cfg);
  for (std::size_t i = 0; i < summary.seeds.size(); ++i) {
    std::cout << "seed " << summary.seeds[i] << ": RAF " << fmt_opt(summary.raf_per_seed[i])
              << " (dAUROC calm " << summary.delta_calm_per_seed[i] << ", stress "
              << summary.delta_stress_per_seed[i] << ")\n";
  }
  std::cout << "RAF mean " << fmt_opt(summary.mean_raf) << ", min " << fmt_opt(summary.min_raf)
            << ", max " << fmt_opt(summary.max_raf) << ", pooled "
            << fmt_opt(summary.pooled_raf) << "\n";
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    nlohmann::json doc;
    doc["seeds"] = summary.seeds;
    nlohmann::json rafs = nlohmann::json::array();
    for (const auto& r : summary.raf_per_seed) {
      if (r) rafs.push_back(*r); else rafs.push_back(nullptr);
    }
    doc["raf_per_seed"] = rafs;
    doc["delta_calm_per_seed"] = summary.delta_calm_per_seed;
    doc["delta_stress_per_seed"] = summary.delta_stress_per_seed;
    if (summary.mean_raf) doc["mean_raf"] = *summary.mean_raf;
    if (summary.pooled_raf) doc["pooled_raf"] = *summary.pooled_raf;
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "replicate.json");
    out << doc.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-aware adversarial robustness audit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run the full audit protocol");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run->add_option("--out", out_dir, "Override the output directory");

  std::string spec_path;
  std::string synth_out;
  audit::SynthSpec synth_overrides;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  auto* spec_opt = synth->add_option("--spec", spec_path, "Generator spec (JSON)");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", synth_overrides.n_per_regime, "Rows per regime");
  synth->add_option("--d", synth_overrides.d, "Feature count");
  synth->add_option("--compression", synth_overrides.margin_compression,
                    "Stress margin compression factor");
  synth->add_option("--noise", synth_overrides.noise_level, "Label flip probability");
  synth->add_option("--seed", synth_overrides.seed, "Generator seed");

  std::string rep_config;
  std::string rep_seeds;
  std::string rep_out;
  auto* rep = app.add_subcommand("replicate", "Re-run the protocol across seeds");
  rep->add_option("--config", rep_config, "Run configuration (JSON)")->required();
  rep->add_option("--seeds", rep_seeds, "Comma-separated seed list override");
  rep->add_option("--out", rep_out, "Override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, out_dir);
    if (synth->parsed()) {
      return synth_command(spec_path, synth_out, synth_overrides, spec_opt->count() > 0);
    }
    if (rep->parsed()) return replicate_command(rep_config, rep_seeds, rep_out);
  } catch (const audit::Error& e) {
    std::cerr << "audit: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "audit: internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
