#include "audit/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "audit/error.hpp"

namespace audit {

namespace {

constexpr double kProbFloor = 1e-12;

double clamp_proba(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

}  // namespace

const char* to_string(ModelFamily f) {
  return f == ModelFamily::Logistic ? "logistic" : "gradient_boosted_trees";
}

ModelFamily model_family_from_string(const std::string& s) {
  if (s == "logistic") return ModelFamily::Logistic;
  if (s == "gradient_boosted_trees") return ModelFamily::GradientBoostedTrees;
  throw ConfigError("unknown model family '" + s + "'");
}

void ModelSpec::validate() const {
  if (family == ModelFamily::GradientBoostedTrees) {
    if (tree.n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
    if (tree.max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (tree.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
    if (!(tree.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (tree.l2 < 0.0) throw ConfigError("l2 must be >= 0");
  } else {
    if (logistic.n_epochs < 1) throw ConfigError("n_epochs must be >= 1");
    if (!(logistic.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (logistic.l2 < 0.0) throw ConfigError("l2 must be >= 0");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  int idx = 0;
  while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
    const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
    idx = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                      : node.right;
  }
  return nodes[static_cast<std::size_t>(idx)].value;
}

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

double bce_loss(double p, int y) {
  p = clamp_proba(p);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double TrainedModel::margin(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw SchemaError("feature vector has " + std::to_string(x.size()) +
                      " components, model expects " + std::to_string(dim_));
  }
  if (family_ == ModelFamily::Logistic) {
    double z = bias_;
    for (std::size_t j = 0; j < dim_; ++j) z += weights_[j] * x[j];
    return z;
  }
  double z = base_score_;
  for (const auto& tree : trees_) z += tree.predict(x);
  return z;
}

double TrainedModel::predict_proba(std::span<const double> x) const {
  return clamp_proba(sigmoid(margin(x)));
}

std::vector<double> TrainedModel::grad_analytic(std::span<const double> x, int y) const {
  if (family_ != ModelFamily::Logistic) {
    throw UnsupportedFamilyError(
        "analytic gradients require the logistic family; use finite differences");
  }
  const double residual = predict_proba(x) - static_cast<double>(y);
  std::vector<double> grad(dim_);
  for (std::size_t j = 0; j < dim_; ++j) grad[j] = residual * weights_[j];
  return grad;
}

TrainedModel TrainedModel::logistic(std::vector<double> weights, double bias,
                                    ModelSpec spec) {
  TrainedModel m;
  m.family_ = ModelFamily::Logistic;
  m.dim_ = weights.size();
  m.weights_ = std::move(weights);
  m.bias_ = bias;
  spec.family = ModelFamily::Logistic;
  m.spec_ = spec;
  return m;
}

TrainedModel TrainedModel::boosted(std::vector<RegressionTree> trees, double base_score,
                                   std::size_t dim, ModelSpec spec) {
  TrainedModel m;
  m.family_ = ModelFamily::GradientBoostedTrees;
  m.dim_ = dim;
  m.trees_ = std::move(trees);
  m.base_score_ = base_score;
  spec.family = ModelFamily::GradientBoostedTrees;
  m.spec_ = spec;
  return m;
}

namespace {

TrainedModel train_logistic(const ModelSpec& spec, const Dataset& data) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> w(d, 0.0);
  double b = 0.0;

  std::vector<double> grad_w(d);
  for (int epoch = 0; epoch < spec.logistic.n_epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    for (const auto& row : data) {
      double z = b;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * row.features[j];
      const double residual = sigmoid(z) - static_cast<double>(row.label);
      for (std::size_t j = 0; j < d; ++j) grad_w[j] += residual * row.features[j];
      grad_b += residual;
    }
    for (std::size_t j = 0; j < d; ++j) {
      w[j] -= spec.logistic.learning_rate * inv_n * (grad_w[j] + spec.logistic.l2 * w[j]);
    }
    b -= spec.logistic.learning_rate * inv_n * grad_b;
  }
  return TrainedModel::logistic(std::move(w), b, spec);
}

struct BoostWorkspace {
  std::vector<double> grad;  // p_i - y_i
  std::vector<double> hess;  // p_i (1 - p_i)
};

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double leaf_weight(double g, double h, double l2) { return -g / (h + l2); }

double leaf_objective(double g, double h, double l2) { return g * g / (h + l2); }

// Exact greedy split search over sorted unique feature values; ties route
// to the left branch (x <= threshold).
SplitChoice best_split(const std::vector<std::size_t>& rows, const Dataset& data,
                       const BoostWorkspace& ws, const TreeParams& params,
                       std::vector<std::size_t>& scratch) {
  double total_g = 0.0, total_h = 0.0;
  for (std::size_t i : rows) {
    total_g += ws.grad[i];
    total_h += ws.hess[i];
  }
  const double parent_obj = leaf_objective(total_g, total_h, params.l2);

  SplitChoice best;
  const std::size_t d = data.dim();
  for (std::size_t f = 0; f < d; ++f) {
    scratch = rows;
    std::sort(scratch.begin(), scratch.end(), [&](std::size_t a, std::size_t b) {
      const double va = data[a].features[f];
      const double vb = data[b].features[f];
      if (va != vb) return va < vb;
      return a < b;
    });
    double left_g = 0.0, left_h = 0.0;
    std::size_t left_n = 0;
    for (std::size_t k = 0; k + 1 < scratch.size(); ++k) {
      const std::size_t i = scratch[k];
      left_g += ws.grad[i];
      left_h += ws.hess[i];
      ++left_n;
      const double v = data[i].features[f];
      const double v_next = data[scratch[k + 1]].features[f];
      if (v == v_next) continue;  // can only cut between distinct values
      const std::size_t right_n = scratch.size() - left_n;
      if (left_n < static_cast<std::size_t>(params.min_leaf) ||
          right_n < static_cast<std::size_t>(params.min_leaf)) {
        continue;
      }
      const double gain = 0.5 * (leaf_objective(left_g, left_h, params.l2) +
                                 leaf_objective(total_g - left_g, total_h - left_h, params.l2) -
                                 parent_obj);
      if (gain <= 0.0) continue;
      if (!best.found || gain > best.gain + 1e-12) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = v;
        best.gain = gain;
      }
    }
  }
  return best;
}

int build_node(RegressionTree& tree, std::vector<std::size_t> rows, const Dataset& data,
               const BoostWorkspace& ws, const TreeParams& params, int depth,
               std::vector<std::size_t>& scratch) {
  double g = 0.0, h = 0.0;
  for (std::size_t i : rows) {
    g += ws.grad[i];
    h += ws.hess[i];
  }

  SplitChoice split;
  if (depth < params.max_depth &&
      rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf)) {
    split = best_split(rows, data, ws, params, scratch);
  }

  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (!split.found) {
    tree.nodes[static_cast<std::size_t>(idx)].value =
        params.learning_rate * leaf_weight(g, h, params.l2);
    return idx;
  }

  std::vector<std::size_t> left_rows, right_rows;
  for (std::size_t i : rows) {
    const double v = data[i].features[static_cast<std::size_t>(split.feature)];
    (v <= split.threshold ? left_rows : right_rows).push_back(i);
  }
  rows.clear();
  rows.shrink_to_fit();

  const int left = build_node(tree, std::move(left_rows), data, ws, params, depth + 1, scratch);
  const int right = build_node(tree, std::move(right_rows), data, ws, params, depth + 1, scratch);
  TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
  node.feature = split.feature;
  node.threshold = split.threshold;
  node.left = left;
  node.right = right;
  return idx;
}

TrainedModel train_boosted(const ModelSpec& spec, const Dataset& data) {
  const std::size_t n = data.size();
  const double prior = data.positive_rate();
  const double base = std::log(clamp_proba(prior) / (1.0 - clamp_proba(prior)));

  std::vector<double> margins(n, base);
  BoostWorkspace ws;
  ws.grad.resize(n);
  ws.hess.resize(n);

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(spec.tree.n_rounds));
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<std::size_t> scratch;

  for (int round = 0; round < spec.tree.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = clamp_proba(sigmoid(margins[i]));
      ws.grad[i] = p - static_cast<double>(data[i].label);
      ws.hess[i] = p * (1.0 - p);
    }
    RegressionTree tree;
    build_node(tree, all_rows, data, ws, spec.tree, 0, scratch);
    for (std::size_t i = 0; i < n; ++i) {
      margins[i] += tree.predict(data[i].features);
    }
    trees.push_back(std::move(tree));
  }
  return TrainedModel::boosted(std::move(trees), base, data.dim(), spec);
}

}  // namespace

TrainedModel train(const ModelSpec& spec, const Dataset& train_data) {
  spec.validate();
  if (train_data.empty()) throw TrainingError("training data is empty");
  const std::size_t n_pos = train_data.count_label(1);
  if (n_pos == 0 || n_pos == train_data.size()) {
    throw TrainingError("training data must contain both classes");
  }
  return spec.family == ModelFamily::Logistic ? train_logistic(spec, train_data)
                                              : train_boosted(spec, train_data);
}

double training_loss(const TrainedModel& model, const Dataset& data) {
  if (data.empty()) throw MetricError("loss undefined on empty data");
  double sum = 0.0;
  for (const auto& row : data) {
    sum += bce_loss(model.predict_proba(row.features), row.label);
  }
  return sum / static_cast<double>(data.size());
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["family"] = to_string(family_);
  doc["dim"] = dim_;
  doc["seed"] = spec_.seed;
  if (family_ == ModelFamily::Logistic) {
    doc["weights"] = weights_;
    doc["bias"] = bias_;
    doc["hyperparams"] = {{"learning_rate", spec_.logistic.learning_rate},
                          {"n_epochs", spec_.logistic.n_epochs},
                          {"l2", spec_.logistic.l2}};
  } else {
    doc["base_score"] = base_score_;
    doc["hyperparams"] = {{"learning_rate", spec_.tree.learning_rate},
                          {"n_rounds", spec_.tree.n_rounds},
                          {"max_depth", spec_.tree.max_depth},
                          {"min_leaf", spec_.tree.min_leaf},
                          {"l2", spec_.tree.l2}};
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& node : tree.nodes) {
        nodes.push_back({{"f", node.feature},
                         {"t", node.threshold},
                         {"l", node.left},
                         {"r", node.right},
                         {"v", node.value}});
      }
      trees.push_back({{"nodes", std::move(nodes)}});
    }
    doc["trees"] = std::move(trees);
  }
  if (scaling_) {
    doc["scaling"] = {{"min", scaling_->min()}, {"max", scaling_->max()}};
  }
  return doc;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& doc) {
  if (doc.at("version").get<int>() != 1) {
    throw ParseError("unsupported model document version");
  }
  const ModelFamily family = model_family_from_string(doc.at("family").get<std::string>());
  ModelSpec spec;
  spec.family = family;
  spec.seed = doc.value("seed", std::uint64_t{0});
  const auto& hp = doc.at("hyperparams");

  TrainedModel model;
  if (family == ModelFamily::Logistic) {
    spec.logistic.learning_rate = hp.at("learning_rate").get<double>();
    spec.logistic.n_epochs = hp.at("n_epochs").get<int>();
    spec.logistic.l2 = hp.at("l2").get<double>();
    model = TrainedModel::logistic(doc.at("weights").get<std::vector<double>>(),
                                   doc.at("bias").get<double>(), spec);
  } else {
    spec.tree.learning_rate = hp.at("learning_rate").get<double>();
    spec.tree.n_rounds = hp.at("n_rounds").get<int>();
    spec.tree.max_depth = hp.at("max_depth").get<int>();
    spec.tree.min_leaf = hp.at("min_leaf").get<int>();
    spec.tree.l2 = hp.at("l2").get<double>();
    std::vector<RegressionTree> trees;
    for (const auto& tree_doc : doc.at("trees")) {
      RegressionTree tree;
      for (const auto& node_doc : tree_doc.at("nodes")) {
        TreeNode node;
        node.feature = node_doc.at("f").get<int>();
        node.threshold = node_doc.at("t").get<double>();
        node.left = node_doc.at("l").get<int>();
        node.right = node_doc.at("r").get<int>();
        node.value = node_doc.at("v").get<double>();
        tree.nodes.push_back(node);
      }
      trees.push_back(std::move(tree));
    }
    model = TrainedModel::boosted(std::move(trees), doc.at("base_score").get<double>(),
                                  doc.at("dim").get<std::size_t>(), spec);
  }
  if (doc.contains("scaling")) {
    model.attach_scaling(ScalingSpec(doc["scaling"].at("min").get<std::vector<double>>(),
                                     doc["scaling"].at("max").get<std::vector<double>>()));
  }
  return model;
}

void TrainedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json().dump(2) << '\n';
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid model document: " + std::string(e.what()));
  }
  return from_json(doc);
}

}  // namespace audit
