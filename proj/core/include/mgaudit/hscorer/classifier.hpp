#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mgaudit::hscorer {

struct LabeledData {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;  // 1 = human noun, 0 = not

  void add(std::vector<double> row, int label);
  std::size_t size() const { return rows.size(); }
  std::size_t feature_count() const { return rows.empty() ? 0 : rows.front().size(); }
  std::size_t count(int label) const;
  /// SHA-256 over the raw row bytes and labels.
  std::string checksum() const;
};

struct DataSplit {
  LabeledData train;
  LabeledData validation;
};

/// Per-class shuffle under `seed`; round(fraction * class size) rows of each
/// class go to validation. Row order inside each part follows the input.
DataSplit stratified_split(const LabeledData& data, double validation_fraction, std::uint64_t seed);

enum class MemberKind { logistic_regression, gradient_boosted_trees };

std::string_view to_string(MemberKind k);
MemberKind parse_member_kind(std::string_view s);

class ClassifierMember {
 public:
  virtual ~ClassifierMember() = default;

  virtual MemberKind kind() const = 0;
  virtual double probability(std::span<const double> features) const = 0;
  bool vote(std::span<const double> features) const { return probability(features) >= 0.5; }
  virtual nlohmann::ordered_json to_json() const = 0;
};

// ---------------------------------------------------------------------------
// Logistic regression with an L1 penalty

struct LogisticRegressionParams {
  /// Inverse regularization strength; the penalty weight is 1 / (C * n).
  double inverse_regularization = 100.0;
  std::size_t max_iterations = 5000;
  double tolerance = 1e-6;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> weight_gradient;
  double bias_gradient = 0.0;
};

/// Mean log-loss of sigmoid(bias + weights . x) and its analytic gradient.
LossAndGradient logistic_loss(std::span<const double> weights, double bias, const LabeledData& data);

class LogisticRegression final : public ClassifierMember {
 public:
  LogisticRegression(std::vector<double> weights, double bias, std::vector<double> mean, std::vector<double> scale);

  MemberKind kind() const override { return MemberKind::logistic_regression; }
  double probability(std::span<const double> features) const override;
  double margin(std::span<const double> features) const;
  nlohmann::ordered_json to_json() const override;
  static std::shared_ptr<LogisticRegression> from_json(const nlohmann::json& j);

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;  // in standardized feature space
  double bias_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

struct LogisticFit {
  std::shared_ptr<LogisticRegression> model;
  bool converged = false;
  std::size_t iterations = 0;
  double objective = 0.0;
};

/// Accelerated proximal gradient on standardized features.
LogisticFit fit_logistic_regression(const LabeledData& train, const LogisticRegressionParams& params);

// ---------------------------------------------------------------------------
// Gradient-boosted trees (second-order, histogram splits, logistic loss)

struct BoostedTreesParams {
  double learning_rate = 0.22394632872649503;
  int max_depth = 10;
  double min_child_weight = 78;
  std::size_t rounds = 912;
  /// 0 disables early stopping.
  std::size_t early_stopping_rounds = 20;
  double reg_lambda = 0.0;
  double gamma = 0.0;
  std::size_t max_bins = 256;
  std::uint64_t seed = 42;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class BoostedTrees final : public ClassifierMember {
 public:
  BoostedTrees(std::vector<std::vector<TreeNode>> trees, double base_margin);

  MemberKind kind() const override { return MemberKind::gradient_boosted_trees; }
  double probability(std::span<const double> features) const override;
  double margin(std::span<const double> features) const;
  nlohmann::ordered_json to_json() const override;
  static std::shared_ptr<BoostedTrees> from_json(const nlohmann::json& j);

  std::size_t tree_count() const { return trees_.size(); }

 private:
  std::vector<std::vector<TreeNode>> trees_;
  double base_margin_;
};

struct BoostedTreesFit {
  std::shared_ptr<BoostedTrees> model;
  std::vector<double> training_loss;    // mean log-loss after each round
  std::vector<double> validation_loss;  // empty without a validation set
  std::size_t best_round = 0;           // rounds kept = best_round + 1
};

BoostedTreesFit fit_boosted_trees(const LabeledData& train, const LabeledData* validation,
                                  const BoostedTreesParams& params);

// ---------------------------------------------------------------------------

struct TrainingOptions {
  LogisticRegressionParams logistic;
  BoostedTreesParams trees;
  double validation_fraction = 0.2;
  std::uint64_t split_seed = 42;
};

struct TrainedMember {
  std::shared_ptr<const ClassifierMember> model;
  double validation_accuracy = 0.0;
  bool converged = true;
  std::vector<double> training_loss;
  std::string data_checksum;
  nlohmann::ordered_json hyperparameters;
};

/// Splits 80/20 (stratified), fits on the training part and reports accuracy
/// on the held-out part. Throws DataError when either class is missing.
TrainedMember train_member(MemberKind kind, const LabeledData& data, const TrainingOptions& options = {});

double accuracy(const ClassifierMember& model, const LabeledData& data);

/// Versioned JSON container: format, version, kind, hyperparameters,
/// data_checksum, validation_accuracy, model.
nlohmann::ordered_json member_artifact(const TrainedMember& member);
std::shared_ptr<const ClassifierMember> load_member_artifact(const nlohmann::json& artifact);

nlohmann::ordered_json to_json(const LogisticRegressionParams& p);
nlohmann::ordered_json to_json(const BoostedTreesParams& p);
LogisticRegressionParams logistic_params_from_json(const nlohmann::json& j);
BoostedTreesParams trees_params_from_json(const nlohmann::json& j);

}  // namespace mgaudit::hscorer
