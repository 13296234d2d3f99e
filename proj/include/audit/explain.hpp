#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "audit/dataset.hpp"
#include "audit/model.hpp"

namespace audit {

// Background rows realize the interventional expectation: off-coalition
// features are replaced by background values and averaged.
struct BackgroundSet {
  std::vector<FeatureVector> rows;

  static BackgroundSet sample(const Dataset& source, std::size_t size, std::uint64_t seed);
  static BackgroundSet from_rows(std::vector<FeatureVector> rows);

  std::size_t size() const { return rows.size(); }
  std::size_t dim() const { return rows.empty() ? 0 : rows[0].size(); }
};

struct Attribution {
  std::vector<double> phi;
  double base_value = 0.0;
  std::size_t instance_index = 0;
};

enum class ShapleyOutput { Probability, Margin };

inline constexpr std::size_t kShapleyMaxFeatures = 15;

// Exact Shapley values by full coalition enumeration (2^d model-eval
// passes over the background set). Requires d <= kShapleyMaxFeatures.
Attribution exact_shapley(const TrainedModel& model, std::span<const double> x,
                          const BackgroundSet& background,
                          ShapleyOutput output = ShapleyOutput::Probability);

// Features by |phi| descending; ties break toward the lower index.
std::vector<std::pair<std::size_t, double>> top_k(const Attribution& attr, std::size_t k);

// Columns: instance, base, phi_<f0>..phi_<fd-1>.
void export_attributions_csv(const std::vector<Attribution>& attributions,
                             const std::vector<std::string>& feature_names,
                             const std::filesystem::path& path);

}  // namespace audit
