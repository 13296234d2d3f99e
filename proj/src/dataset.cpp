#include "audit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "audit/csv.hpp"
#include "audit/error.hpp"
#include "audit/rng.hpp"

namespace audit {

Dataset::Dataset(std::vector<std::string> feature_names, std::vector<Instance> rows)
    : feature_names_(std::move(feature_names)), rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].features.size() != feature_names_.size()) {
      throw SchemaError("row " + std::to_string(i) + " has " +
                        std::to_string(rows_[i].features.size()) + " features, schema has " +
                        std::to_string(feature_names_.size()));
    }
    if (rows_[i].label != 0 && rows_[i].label != 1) {
      throw ParseError("row " + std::to_string(i) + ": label must be 0 or 1");
    }
  }
}

double Dataset::positive_rate() const {
  if (rows_.empty()) return 0.0;
  return static_cast<double>(count_label(1)) / static_cast<double>(rows_.size());
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(),
                    [label](const Instance& r) { return r.label == label; }));
}

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  csv::Table table = csv::read_file(path, schema.delimiter);

  std::unordered_set<std::string> seen;
  for (const auto& name : table.header) {
    if (!seen.insert(name).second) {
      throw SchemaError("duplicate column '" + name + "' in '" + path.string() + "'");
    }
  }

  const std::size_t label_col = table.column(schema.label_column);
  const std::size_t time_col = table.column(schema.time_column);

  std::vector<std::string> feature_names;
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (i == label_col || i == time_col) continue;
      feature_names.push_back(table.header[i]);
      feature_cols.push_back(i);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(table.column(name));
      feature_names.push_back(name);
    }
  }

  std::vector<Instance> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    const std::string where = "row " + std::to_string(r + 1);
    if (fields.size() != table.header.size()) {
      throw ParseError(where + ": expected " + std::to_string(table.header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    Instance inst;
    inst.features.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      inst.features.push_back(csv::parse_double(fields[c], where + ", column '" + table.header[c] + "'"));
    }
    const std::int64_t label = csv::parse_int(fields[label_col], where + ", label");
    if (label != 0 && label != 1) {
      throw ParseError(where + ": label must be 0 or 1, got '" + fields[label_col] + "'");
    }
    inst.label = static_cast<int>(label);
    inst.timestamp = csv::parse_timestamp(fields[time_col], where + ", timestamp");
    rows.push_back(std::move(inst));
  }
  return Dataset(std::move(feature_names), std::move(rows));
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path,
                       const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const char d = schema.delimiter;
  out << schema.time_column << d << schema.label_column;
  for (const auto& name : data.feature_names()) out << d << csv::escape(name, d);
  out << '\n';
  for (const auto& row : data) {
    out << row.timestamp << d << row.label;
    for (double v : row.features) out << d << csv::format_double(v);
    out << '\n';
  }
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Calm: return "Calm";
    case Regime::Stress: return "Stress";
    case Regime::Neutral: return "Neutral";
  }
  return "?";
}

RegimeConfig::RegimeConfig(double calm, double stress) : tau_calm(calm), tau_stress(stress) {
  if (!(calm < stress)) {
    throw ConfigError("regime thresholds require tau_calm < tau_stress");
  }
}

Regime classify_regime(double s_value, const RegimeConfig& cfg) {
  if (s_value < cfg.tau_calm) return Regime::Calm;
  if (s_value > cfg.tau_stress) return Regime::Stress;
  return Regime::Neutral;
}

void StressSeries::add(std::int64_t timestamp, double value) {
  if (!times_.empty() && timestamp <= times_.back()) {
    throw ParseError("stress series timestamps must be strictly increasing");
  }
  times_.push_back(timestamp);
  values_.push_back(value);
}

double StressSeries::at(std::int64_t timestamp, JoinMode mode) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), timestamp);
  if (it == times_.begin()) {
    throw JoinError("no stress entry at or before timestamp " + std::to_string(timestamp));
  }
  const std::size_t idx = static_cast<std::size_t>(it - times_.begin()) - 1;
  if (mode == JoinMode::Exact && times_[idx] != timestamp) {
    throw JoinError("no stress entry exactly at timestamp " + std::to_string(timestamp));
  }
  return values_[idx];
}

StressSeries StressSeries::load_csv(const std::filesystem::path& path, char delimiter) {
  csv::Table table = csv::read_file(path, delimiter);
  const std::size_t time_col = table.column("timestamp");
  const std::size_t value_col = table.column("value");
  StressSeries series;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = "stress row " + std::to_string(r + 1);
    const auto& fields = table.rows[r];
    if (fields.size() != table.header.size()) {
      throw ParseError(where + ": wrong field count");
    }
    series.add(csv::parse_timestamp(fields[time_col], where),
               csv::parse_double(fields[value_col], where));
  }
  return series;
}

void StressSeries::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "timestamp,value\n";
  for (std::size_t i = 0; i < times_.size(); ++i) {
    out << times_[i] << ',' << csv::format_double(values_[i]) << '\n';
  }
}

RegimeSlices segment_regimes(const Dataset& data, const StressSeries& stress,
                             const RegimeConfig& cfg, JoinMode mode) {
  std::vector<Instance> calm_rows;
  std::vector<Instance> stress_rows;
  std::size_t neutral = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s;
    try {
      s = stress.at(data[i].timestamp, mode);
    } catch (const JoinError& e) {
      throw JoinError("instance " + std::to_string(i) + ": " + e.what());
    }
    switch (classify_regime(s, cfg)) {
      case Regime::Calm: calm_rows.push_back(data[i]); break;
      case Regime::Stress: stress_rows.push_back(data[i]); break;
      case Regime::Neutral: ++neutral; break;
    }
  }
  RegimeSlices slices;
  slices.calm = Dataset(data.feature_names(), std::move(calm_rows));
  slices.stress = Dataset(data.feature_names(), std::move(stress_rows));
  slices.neutral_count = neutral;
  return slices;
}

ScalingSpec::ScalingSpec(std::vector<double> min, std::vector<double> max)
    : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw ConfigError("scaling min/max size mismatch");
  for (std::size_t j = 0; j < min_.size(); ++j) {
    if (max_[j] < min_[j]) throw ConfigError("scaling requires max >= min per feature");
  }
}

double ScalingSpec::apply(double value, std::size_t feature) const {
  const double lo = min_[feature];
  const double hi = max_[feature];
  if (hi == lo) return 0.0;
  return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

double ScalingSpec::invert(double value, std::size_t feature) const {
  const double lo = min_[feature];
  const double hi = max_[feature];
  if (hi == lo) return lo;
  return lo + value * (hi - lo);
}

bool ScalingSpec::constant(std::size_t feature) const {
  return max_[feature] == min_[feature];
}

std::vector<std::size_t> ScalingSpec::constant_features() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < min_.size(); ++j) {
    if (constant(j)) out.push_back(j);
  }
  return out;
}

ScalingSpec fit_scaling(const Dataset& train) {
  if (train.empty()) throw ConfigError("cannot fit scaling on an empty dataset");
  const std::size_t d = train.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& row : train) {
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], row.features[j]);
      hi[j] = std::max(hi[j], row.features[j]);
    }
  }
  return ScalingSpec(std::move(lo), std::move(hi));
}

Dataset apply_scaling(const Dataset& data, const ScalingSpec& spec) {
  if (data.dim() != spec.dim()) {
    throw SchemaError("scaling spec dimension " + std::to_string(spec.dim()) +
                      " does not match dataset dimension " + std::to_string(data.dim()));
  }
  std::vector<Instance> rows(data.rows());
  for (auto& row : rows) {
    for (std::size_t j = 0; j < row.features.size(); ++j) {
      row.features[j] = spec.apply(row.features[j], j);
    }
  }
  return Dataset(data.feature_names(), std::move(rows));
}

SplitPair stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> pos_idx;
  std::vector<std::size_t> neg_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (data[i].label == 1 ? pos_idx : neg_idx).push_back(i);
  }
  if (pos_idx.empty() || neg_idx.empty()) {
    throw StratificationError("stratified split needs at least one instance of each class");
  }

  Rng rng(seed);
  std::vector<Instance> train_rows;
  std::vector<Instance> test_rows;
  for (auto* cls : {&neg_idx, &pos_idx}) {
    Rng stream = rng.fork(cls == &pos_idx ? 1 : 0);
    stream.shuffle(*cls);
    const auto n = static_cast<double>(cls->size());
    const std::size_t k = static_cast<std::size_t>(
        std::llround(n * test_fraction));
    for (std::size_t i = 0; i < cls->size(); ++i) {
      (i < k ? test_rows : train_rows).push_back(data[(*cls)[i]]);
    }
  }
  SplitPair pair;
  pair.train = Dataset(data.feature_names(), std::move(train_rows));
  pair.test = Dataset(data.feature_names(), std::move(test_rows));
  pair.seed = seed;
  return pair;
}

}  // namespace audit
