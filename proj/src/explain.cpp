#include "audit/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "audit/csv.hpp"
#include "audit/error.hpp"
#include "audit/rng.hpp"

namespace audit {

BackgroundSet BackgroundSet::sample(const Dataset& source, std::size_t size,
                                    std::uint64_t seed) {
  if (source.empty()) throw ConfigError("background sample from an empty dataset");
  if (size == 0) throw ConfigError("background size must be >= 1");
  std::vector<std::size_t> idx(source.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(mix64(seed, 0x6b67ULL));
  rng.shuffle(idx);
  BackgroundSet bg;
  const std::size_t take = std::min(size, source.size());
  bg.rows.reserve(take);
  for (std::size_t i = 0; i < take; ++i) bg.rows.push_back(source[idx[i]].features);
  return bg;
}

BackgroundSet BackgroundSet::from_rows(std::vector<FeatureVector> rows) {
  if (rows.empty()) throw ConfigError("background set must be non-empty");
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw SchemaError("background rows differ in width");
  }
  BackgroundSet bg;
  bg.rows = std::move(rows);
  return bg;
}

namespace {

double evaluate(const TrainedModel& model, std::span<const double> x, ShapleyOutput output) {
  return output == ShapleyOutput::Probability ? model.predict_proba(x) : model.margin(x);
}

}  // namespace

Attribution exact_shapley(const TrainedModel& model, std::span<const double> x,
                          const BackgroundSet& background, ShapleyOutput output) {
  const std::size_t d = x.size();
  if (d != model.dim()) throw SchemaError("instance dimension does not match model");
  if (background.dim() != d) throw SchemaError("background dimension does not match model");
  if (d > kShapleyMaxFeatures) {
    throw ConfigError("exact Shapley supports at most " +
                      std::to_string(kShapleyMaxFeatures) +
                      " features; lower d or subsample features");
  }

  const std::size_t n_masks = std::size_t{1} << d;
  const double inv_bg = 1.0 / static_cast<double>(background.size());

  // v[mask] = average model output with coalition features taken from x
  // and the rest from each background row.
  std::vector<double> coalition_value(n_masks, 0.0);
  FeatureVector composite(d);
  for (const auto& bg_row : background.rows) {
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      for (std::size_t j = 0; j < d; ++j) {
        composite[j] = (mask >> j) & 1 ? x[j] : bg_row[j];
      }
      coalition_value[mask] += evaluate(model, composite, output);
    }
  }
  for (double& v : coalition_value) v *= inv_bg;

  // w[s] = s! (d-1-s)! / d!
  std::vector<double> factorial(d + 1, 1.0);
  for (std::size_t i = 1; i <= d; ++i) {
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  }
  std::vector<double> weight(d, 0.0);
  for (std::size_t s = 0; s < d; ++s) {
    weight[s] = factorial[s] * factorial[d - 1 - s] / factorial[d];
  }

  Attribution attr;
  attr.phi.assign(d, 0.0);
  attr.base_value = coalition_value[0];
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      attr.phi[j] += weight[s] * (coalition_value[mask | bit] - coalition_value[mask]);
    }
  }
  return attr;
}

std::vector<std::pair<std::size_t, double>> top_k(const Attribution& attr, std::size_t k) {
  if (k < 1 || k > attr.phi.size()) {
    throw ConfigError("top_k requires 1 <= k <= d");
  }
  std::vector<std::pair<std::size_t, double>> ranked(attr.phi.size());
  for (std::size_t j = 0; j < attr.phi.size(); ++j) ranked[j] = {j, attr.phi[j]};
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a.second);
    const double mb = std::abs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  ranked.resize(k);
  return ranked;
}

void export_attributions_csv(const std::vector<Attribution>& attributions,
                             const std::vector<std::string>& feature_names,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "instance,base";
  for (const auto& name : feature_names) out << ",phi_" << name;
  out << '\n';
  for (const auto& attr : attributions) {
    if (attr.phi.size() != feature_names.size()) {
      throw SchemaError("attribution width does not match feature names");
    }
    out << attr.instance_index << ',' << csv::format_double(attr.base_value);
    for (double p : attr.phi) out << ',' << csv::format_double(p);
    out << '\n';
  }
}

}  // namespace audit
