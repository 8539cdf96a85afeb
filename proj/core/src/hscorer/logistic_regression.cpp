#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "mgaudit/common.hpp"
#include "mgaudit/hscorer/classifier.hpp"

namespace mgaudit::hscorer {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct Standardized {
  std::vector<double> x;  // row-major n * d
  std::vector<double> mean;
  std::vector<double> scale;
  std::size_t n = 0;
  std::size_t d = 0;
};

Standardized standardize(const LabeledData& data) {
  Standardized s;
  s.n = data.size();
  s.d = data.feature_count();
  s.mean.assign(s.d, 0.0);
  s.scale.assign(s.d, 1.0);
  for (const auto& row : data.rows)
    for (std::size_t j = 0; j < s.d; ++j) s.mean[j] += row[j];
  for (auto& m : s.mean) m /= static_cast<double>(s.n);
  std::vector<double> var(s.d, 0.0);
  for (const auto& row : data.rows)
    for (std::size_t j = 0; j < s.d; ++j) var[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
  for (std::size_t j = 0; j < s.d; ++j) {
    double sd = std::sqrt(var[j] / static_cast<double>(s.n));
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  s.x.resize(s.n * s.d);
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.d; ++j) s.x[i * s.d + j] = (data.rows[i][j] - s.mean[j]) / s.scale[j];
  return s;
}

// Smooth part on standardized data; params = [w..., b].
double smooth_loss(const Standardized& s, const std::vector<int>& y, const std::vector<double>& params,
                   std::vector<double>* grad) {
  const std::size_t d = s.d;
  double loss = 0.0;
  if (grad) grad->assign(d + 1, 0.0);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double* row = &s.x[i * d];
    double z = params[d];
    for (std::size_t j = 0; j < d; ++j) z += params[j] * row[j];
    loss += softplus(z) - y[i] * z;
    if (grad) {
      double r = sigmoid(z) - y[i];
      for (std::size_t j = 0; j < d; ++j) (*grad)[j] += r * row[j];
      (*grad)[d] += r;
    }
  }
  auto inv_n = 1.0 / static_cast<double>(s.n);
  if (grad)
    for (auto& g : *grad) g *= inv_n;
  return loss * inv_n;
}

double l1(const std::vector<double>& params, std::size_t d) {
  double s = 0;
  for (std::size_t j = 0; j < d; ++j) s += std::abs(params[j]);
  return s;
}

}  // namespace

void LabeledData::add(std::vector<double> row, int label) {
  if (!rows.empty() && row.size() != rows.front().size())
    throw DataError("feature row has " + std::to_string(row.size()) + " values, expected " +
                    std::to_string(rows.front().size()));
  if (label != 0 && label != 1) throw DataError("labels must be 0 or 1");
  rows.push_back(std::move(row));
  labels.push_back(label);
}

std::size_t LabeledData::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::string LabeledData::checksum() const {
  std::string bytes;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    bytes.append(reinterpret_cast<const char*>(rows[i].data()), rows[i].size() * sizeof(double));
    bytes.push_back(static_cast<char>(labels[i]));
  }
  return sha256_hex(bytes);
}

DataSplit stratified_split(const LabeledData& data, double validation_fraction, std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0)
    throw ConfigError("validation fraction must be in [0, 1)");
  std::mt19937_64 rng(seed);
  std::vector<bool> in_validation(data.size(), false);
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.labels[i] == label) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < n_val; ++k) in_validation[idx[k]] = true;
  }
  DataSplit split;
  for (std::size_t i = 0; i < data.size(); ++i)
    (in_validation[i] ? split.validation : split.train).add(data.rows[i], data.labels[i]);
  return split;
}

std::string_view to_string(MemberKind k) {
  return k == MemberKind::logistic_regression ? "logistic_regression" : "gradient_boosted_trees";
}

MemberKind parse_member_kind(std::string_view s) {
  if (s == "logistic_regression") return MemberKind::logistic_regression;
  if (s == "gradient_boosted_trees") return MemberKind::gradient_boosted_trees;
  throw ConfigError("unknown classifier kind '" + std::string(s) + "'");
}

LossAndGradient logistic_loss(std::span<const double> weights, double bias, const LabeledData& data) {
  LossAndGradient out;
  out.weight_gradient.assign(weights.size(), 0.0);
  if (data.size() == 0) return out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& row = data.rows[i];
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * row[j];
    out.loss += softplus(z) - data.labels[i] * z;
    double r = sigmoid(z) - data.labels[i];
    for (std::size_t j = 0; j < weights.size(); ++j) out.weight_gradient[j] += r * row[j];
    out.bias_gradient += r;
  }
  auto inv_n = 1.0 / static_cast<double>(data.size());
  out.loss *= inv_n;
  for (auto& g : out.weight_gradient) g *= inv_n;
  out.bias_gradient *= inv_n;
  return out;
}

LogisticRegression::LogisticRegression(std::vector<double> weights, double bias, std::vector<double> mean,
                                       std::vector<double> scale)
    : weights_(std::move(weights)), bias_(bias), mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != weights_.size() || scale_.size() != weights_.size())
    throw DataError("logistic regression: inconsistent parameter sizes");
}

double LogisticRegression::margin(std::span<const double> x) const {
  if (x.size() != weights_.size())
    throw DataError("logistic regression expects " + std::to_string(weights_.size()) + " features, got " +
                    std::to_string(x.size()));
  double z = bias_;
  for (std::size_t j = 0; j < weights_.size(); ++j) z += weights_[j] * (x[j] - mean_[j]) / scale_[j];
  return z;
}

double LogisticRegression::probability(std::span<const double> x) const { return sigmoid(margin(x)); }

nlohmann::ordered_json LogisticRegression::to_json() const {
  nlohmann::ordered_json j;
  j["weights"] = weights_;
  j["bias"] = bias_;
  j["mean"] = mean_;
  j["scale"] = scale_;
  return j;
}

std::shared_ptr<LogisticRegression> LogisticRegression::from_json(const nlohmann::json& j) {
  return std::make_shared<LogisticRegression>(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(),
                                              j.at("mean").get<std::vector<double>>(),
                                              j.at("scale").get<std::vector<double>>());
}

LogisticFit fit_logistic_regression(const LabeledData& train, const LogisticRegressionParams& params) {
  if (train.size() == 0) throw DataError("logistic regression: no training rows");
  if (params.inverse_regularization <= 0) throw ConfigError("inverse regularization must be positive");
  auto s = standardize(train);
  const std::size_t d = s.d;
  const double lambda = 1.0 / (params.inverse_regularization * static_cast<double>(s.n));

  std::vector<double> x(d + 1, 0.0), x_prev = x, y = x, grad, candidate(d + 1);
  double step = 1.0;
  double t_momentum = 1.0;
  double objective = smooth_loss(s, train.labels, x, nullptr) + lambda * l1(x, d);

  LogisticFit fit;
  for (std::size_t iter = 1; iter <= params.max_iterations; ++iter) {
    double fy = smooth_loss(s, train.labels, y, &grad);
    // Backtracking on the quadratic upper bound.
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t j = 0; j < d; ++j) candidate[j] = soft_threshold(y[j] - step * grad[j], step * lambda);
      candidate[d] = y[d] - step * grad[d];
      double fc = smooth_loss(s, train.labels, candidate, nullptr);
      double bound = fy;
      double sq = 0;
      for (std::size_t j = 0; j <= d; ++j) {
        double diff = candidate[j] - y[j];
        bound += grad[j] * diff;
        sq += diff * diff;
      }
      bound += sq / (2 * step);
      if (fc <= bound + 1e-15) break;
      step *= 0.5;
    }
    double new_objective = smooth_loss(s, train.labels, candidate, nullptr) + lambda * l1(candidate, d);
    if (new_objective > objective) {
      // Momentum overshoot: restart from the last iterate.
      y = x;
      t_momentum = 1.0;
      continue;
    }
    double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum)) / 2.0;
    double max_change = 0, max_abs = 1.0;
    for (std::size_t j = 0; j <= d; ++j) {
      max_change = std::max(max_change, std::abs(candidate[j] - x[j]));
      max_abs = std::max(max_abs, std::abs(candidate[j]));
    }
    x_prev = x;
    x = candidate;
    for (std::size_t j = 0; j <= d; ++j) y[j] = x[j] + ((t_momentum - 1.0) / t_next) * (x[j] - x_prev[j]);
    t_momentum = t_next;
    objective = new_objective;
    fit.iterations = iter;
    if (max_change < params.tolerance * max_abs) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged)
    spdlog::warn("logistic regression did not converge in {} iterations; keeping best iterate",
                 params.max_iterations);
  fit.objective = objective;
  std::vector<double> w(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d));
  fit.model = std::make_shared<LogisticRegression>(std::move(w), x[d], std::move(s.mean), std::move(s.scale));
  return fit;
}

double accuracy(const ClassifierMember& model, const LabeledData& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (static_cast<int>(model.vote(data.rows[i])) == data.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainedMember train_member(MemberKind kind, const LabeledData& data, const TrainingOptions& options) {
  if (data.count(0) == 0 || data.count(1) == 0)
    throw DataError("training data must contain both human and non-human examples");
  auto split = stratified_split(data, options.validation_fraction, options.split_seed);
  if (split.train.count(0) == 0 || split.train.count(1) == 0)
    throw DataError("training split lost a class; add more examples");

  TrainedMember out;
  out.data_checksum = data.checksum();
  if (kind == MemberKind::logistic_regression) {
    auto fit = fit_logistic_regression(split.train, options.logistic);
    out.model = fit.model;
    out.converged = fit.converged;
    out.hyperparameters = to_json(options.logistic);
  } else {
    auto fit = fit_boosted_trees(split.train, split.validation.size() ? &split.validation : nullptr, options.trees);
    out.model = fit.model;
    out.training_loss = std::move(fit.training_loss);
    out.hyperparameters = to_json(options.trees);
  }
  out.hyperparameters["validation_fraction"] = options.validation_fraction;
  out.hyperparameters["split_seed"] = options.split_seed;
  out.validation_accuracy = accuracy(*out.model, split.validation.size() ? split.validation : split.train);
  return out;
}

nlohmann::ordered_json member_artifact(const TrainedMember& member) {
  nlohmann::ordered_json j;
  j["format"] = "mg-audit/classifier";
  j["version"] = 1;
  j["kind"] = to_string(member.model->kind());
  j["hyperparameters"] = member.hyperparameters;
  j["data_checksum"] = member.data_checksum;
  j["validation_accuracy"] = member.validation_accuracy;
  j["converged"] = member.converged;
  j["model"] = member.model->to_json();
  return j;
}

std::shared_ptr<const ClassifierMember> load_member_artifact(const nlohmann::json& artifact) {
  try {
    if (artifact.at("format") != "mg-audit/classifier") throw DataError("not a classifier artifact");
    if (artifact.at("version").get<int>() != 1) throw DataError("unsupported classifier artifact version");
    auto kind = parse_member_kind(artifact.at("kind").get<std::string>());
    if (kind == MemberKind::logistic_regression) return LogisticRegression::from_json(artifact.at("model"));
    return BoostedTrees::from_json(artifact.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed classifier artifact: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const LogisticRegressionParams& p) {
  nlohmann::ordered_json j;
  j["penalty"] = "l1";
  j["C"] = p.inverse_regularization;
  j["max_iterations"] = p.max_iterations;
  j["tolerance"] = p.tolerance;
  return j;
}

nlohmann::ordered_json to_json(const BoostedTreesParams& p) {
  nlohmann::ordered_json j;
  j["learning_rate"] = p.learning_rate;
  j["max_depth"] = p.max_depth;
  j["min_child_weight"] = p.min_child_weight;
  j["n_estimators"] = p.rounds;
  j["early_stopping_rounds"] = p.early_stopping_rounds;
  j["reg_lambda"] = p.reg_lambda;
  j["gamma"] = p.gamma;
  j["max_bins"] = p.max_bins;
  j["random_state"] = p.seed;
  return j;
}

LogisticRegressionParams logistic_params_from_json(const nlohmann::json& j) {
  LogisticRegressionParams p;
  if (!j.is_object()) return p;
  p.inverse_regularization = j.value("C", p.inverse_regularization);
  p.max_iterations = j.value("max_iterations", p.max_iterations);
  p.tolerance = j.value("tolerance", p.tolerance);
  if (j.contains("penalty") && j["penalty"] != "l1") throw ConfigError("only the l1 penalty is supported");
  return p;
}

BoostedTreesParams trees_params_from_json(const nlohmann::json& j) {
  BoostedTreesParams p;
  if (!j.is_object()) return p;
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
  p.rounds = j.value("n_estimators", p.rounds);
  p.early_stopping_rounds = j.value("early_stopping_rounds", p.early_stopping_rounds);
  p.reg_lambda = j.value("reg_lambda", p.reg_lambda);
  p.gamma = j.value("gamma", p.gamma);
  p.max_bins = j.value("max_bins", p.max_bins);
  p.seed = j.value("random_state", p.seed);
  if (p.max_bins < 2 || p.max_bins > 65535) throw ConfigError("max_bins must be in [2, 65535]");
  return p;
}

}  // namespace mgaudit::hscorer
