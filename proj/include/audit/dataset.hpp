#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace audit {

using FeatureVector = std::vector<double>;

// One time-indexed observation: feature vector, binary label, timestamp
// (epoch seconds).
struct Instance {
  FeatureVector features;
  int label = 0;
  std::int64_t timestamp = 0;
};

// Immutable after construction; all rows share the schema width.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> feature_names, std::vector<Instance> rows);

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t dim() const { return feature_names_.size(); }

  const Instance& operator[](std::size_t i) const { return rows_[i]; }
  auto begin() const { return rows_.begin(); }
  auto end() const { return rows_.end(); }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<Instance>& rows() const { return rows_; }

  // Fraction of label-1 rows; 0 on empty.
  double positive_rate() const;
  std::size_t count_label(int label) const;

 private:
  std::vector<std::string> feature_names_;
  std::vector<Instance> rows_;
};

struct CsvSchema {
  std::vector<std::string> feature_columns;  // empty: every other column
  std::string label_column = "label";
  std::string time_column = "timestamp";
  char delimiter = ',';
};

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path,
                       const CsvSchema& schema = {});

enum class Regime { Calm, Stress, Neutral };

const char* to_string(Regime r);

struct RegimeConfig {
  double tau_calm;
  double tau_stress;
  RegimeConfig(double calm, double stress);
};

// Strict inequalities on both branches; boundary values are Neutral.
Regime classify_regime(double s_value, const RegimeConfig& cfg);

enum class JoinMode { LastObservation, Exact };

// Ordered stress indicator series keyed by timestamp.
class StressSeries {
 public:
  void add(std::int64_t timestamp, double value);
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  // LastObservation: most recent entry at or before `timestamp`.
  // Exact: entry at `timestamp` only. Throws JoinError otherwise.
  double at(std::int64_t timestamp, JoinMode mode = JoinMode::LastObservation) const;

  const std::vector<std::int64_t>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

  static StressSeries load_csv(const std::filesystem::path& path, char delimiter = ',');
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<std::int64_t> times_;
  std::vector<double> values_;
};

struct RegimeSlices {
  Dataset calm;
  Dataset stress;
  std::size_t neutral_count = 0;
};

RegimeSlices segment_regimes(const Dataset& data, const StressSeries& stress,
                             const RegimeConfig& cfg,
                             JoinMode mode = JoinMode::LastObservation);

// Per-feature min-max scaling fitted on training rows. Constant features
// map to 0 and are flagged attack-frozen.
class ScalingSpec {
 public:
  ScalingSpec() = default;
  ScalingSpec(std::vector<double> min, std::vector<double> max);

  std::size_t dim() const { return min_.size(); }
  double apply(double value, std::size_t feature) const;   // clipped to [0,1]
  double invert(double value, std::size_t feature) const;
  bool constant(std::size_t feature) const;
  std::vector<std::size_t> constant_features() const;

  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

ScalingSpec fit_scaling(const Dataset& train);
Dataset apply_scaling(const Dataset& data, const ScalingSpec& spec);

struct SplitPair {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
};

// Seeded stratified split; per-class test counts are round(n_c * fraction).
SplitPair stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace audit
