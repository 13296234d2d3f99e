#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "audit/dataset.hpp"

namespace audit {

enum class ModelFamily { Logistic, GradientBoostedTrees };

const char* to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& s);

struct TreeParams {
  double learning_rate = 0.1;
  int n_rounds = 100;
  int max_depth = 4;
  int min_leaf = 20;
  double l2 = 1.0;
};

struct LogisticParams {
  double learning_rate = 0.5;
  int n_epochs = 500;
  double l2 = 1e-3;
};

struct ModelSpec {
  ModelFamily family = ModelFamily::GradientBoostedTrees;
  TreeParams tree;
  LogisticParams logistic;
  std::uint64_t seed = 0;

  void validate() const;
};

// Flat node layout; feature < 0 marks a leaf. Split routes left iff
// x[feature] <= threshold.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
};

double sigmoid(double margin);

// Binary cross-entropy on a clamped probability.
double bce_loss(double p, int y);

// Immutable per-regime scorer. predict_proba stays inside (0, 1).
class TrainedModel {
 public:
  ModelFamily family() const { return family_; }
  std::size_t dim() const { return dim_; }

  double margin(std::span<const double> x) const;
  double predict_proba(std::span<const double> x) const;

  // Gradient of BCE(f(x), y) w.r.t. x; Logistic family only.
  std::vector<double> grad_analytic(std::span<const double> x, int y) const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  double base_score() const { return base_score_; }
  const ModelSpec& spec() const { return spec_; }
  const std::optional<ScalingSpec>& scaling() const { return scaling_; }
  void attach_scaling(ScalingSpec spec) { scaling_ = std::move(spec); }

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static TrainedModel load(const std::filesystem::path& path);

  static TrainedModel logistic(std::vector<double> weights, double bias,
                               ModelSpec spec = {});
  static TrainedModel boosted(std::vector<RegressionTree> trees, double base_score,
                              std::size_t dim, ModelSpec spec = {});

 private:
  TrainedModel() = default;

  ModelFamily family_ = ModelFamily::Logistic;
  std::size_t dim_ = 0;
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::vector<RegressionTree> trees_;
  double base_score_ = 0.0;
  ModelSpec spec_;
  std::optional<ScalingSpec> scaling_;
};

TrainedModel train(const ModelSpec& spec, const Dataset& train_data);

inline double predict_proba(const TrainedModel& model, std::span<const double> x) {
  return model.predict_proba(x);
}

inline std::vector<double> grad_analytic(const TrainedModel& model,
                                         std::span<const double> x, int y) {
  return model.grad_analytic(x, y);
}

// Mean BCE of the model over a dataset.
double training_loss(const TrainedModel& model, const Dataset& data);

}  // namespace audit
