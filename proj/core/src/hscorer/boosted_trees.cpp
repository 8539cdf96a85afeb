#include <algorithm>
#include <cmath>
#include <limits>

#include "mgaudit/common.hpp"
#include "mgaudit/hscorer/classifier.hpp"

namespace mgaudit::hscorer {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double mean_log_loss(const std::vector<double>& margins, const std::vector<int>& labels) {
  double loss = 0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    double z = margins[i];
    double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += sp - labels[i] * z;
  }
  return margins.empty() ? 0.0 : loss / static_cast<double>(margins.size());
}

/// Cut points per feature; bin(x) = number of cuts strictly below x, so
/// bin(x) <= b exactly when x <= cuts[b].
struct Binning {
  std::vector<std::vector<double>> cuts;
  std::vector<std::uint16_t> bins;  // column-major: bins[f * n + i]
  std::size_t n = 0;

  std::size_t bin_count(std::size_t f) const { return cuts[f].size() + 1; }
  std::uint16_t at(std::size_t f, std::size_t i) const { return bins[f * n + i]; }
};

Binning make_bins(const LabeledData& data, std::size_t max_bins) {
  Binning b;
  b.n = data.size();
  const std::size_t d = data.feature_count();
  b.cuts.resize(d);
  b.bins.resize(d * b.n);
  std::vector<double> column(b.n);
  for (std::size_t f = 0; f < d; ++f) {
    for (std::size_t i = 0; i < b.n; ++i) column[i] = data.rows[i][f];
    std::vector<double> uniq = column;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    auto& cuts = b.cuts[f];
    if (uniq.size() <= max_bins) {
      for (std::size_t k = 0; k + 1 < uniq.size(); ++k) cuts.push_back(uniq[k] + (uniq[k + 1] - uniq[k]) / 2);
    } else {
      std::vector<double> sorted = column;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t k = 1; k < max_bins; ++k) {
        double q = sorted[k * sorted.size() / max_bins];
        if (cuts.empty() || q > cuts.back()) cuts.push_back(q);
      }
    }
    for (std::size_t i = 0; i < b.n; ++i) {
      auto pos = std::lower_bound(cuts.begin(), cuts.end(), column[i]) - cuts.begin();
      b.bins[f * b.n + i] = static_cast<std::uint16_t>(pos);
    }
  }
  return b;
}

struct SplitChoice {
  double gain = 0;
  int feature = -1;
  std::size_t bin = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Binning& bins, const std::vector<double>& grad, const std::vector<double>& hess,
              const BoostedTreesParams& params)
      : bins_(bins), grad_(grad), hess_(hess), params_(params) {}

  /// Grows one tree; `leaf_of[i]` receives the leaf value for training row i.
  std::vector<TreeNode> build(std::vector<double>& leaf_of) {
    std::vector<TreeNode> nodes;
    std::vector<std::uint32_t> all(bins_.n);
    for (std::size_t i = 0; i < bins_.n; ++i) all[i] = static_cast<std::uint32_t>(i);
    nodes.emplace_back();
    grow(nodes, 0, std::move(all), 0, leaf_of);
    return nodes;
  }

 private:
  double score(double g, double h) const { return g * g / (h + params_.reg_lambda); }

  void grow(std::vector<TreeNode>& nodes, int node, std::vector<std::uint32_t> rows, int depth,
            std::vector<double>& leaf_of) {
    double g_total = 0, h_total = 0;
    for (auto i : rows) {
      g_total += grad_[i];
      h_total += hess_[i];
    }
    SplitChoice best;
    if (depth < params_.max_depth) best = find_split(rows, g_total, h_total);
    if (best.feature < 0) {
      double value = -g_total / (h_total + params_.reg_lambda) * params_.learning_rate;
      nodes[static_cast<std::size_t>(node)].value = value;
      for (auto i : rows) leaf_of[i] = value;
      return;
    }
    std::vector<std::uint32_t> left, right;
    for (auto i : rows)
      (bins_.at(static_cast<std::size_t>(best.feature), i) <= best.bin ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();

    int l = static_cast<int>(nodes.size());
    nodes.emplace_back();
    int r = static_cast<int>(nodes.size());
    nodes.emplace_back();
    auto& n = nodes[static_cast<std::size_t>(node)];
    n.feature = best.feature;
    n.threshold = bins_.cuts[static_cast<std::size_t>(best.feature)][best.bin];
    n.left = l;
    n.right = r;
    grow(nodes, l, std::move(left), depth + 1, leaf_of);
    grow(nodes, r, std::move(right), depth + 1, leaf_of);
  }

  SplitChoice find_split(const std::vector<std::uint32_t>& rows, double g_total, double h_total) const {
    SplitChoice best;
    if (h_total < 2 * params_.min_child_weight) return best;
    const double parent = score(g_total, h_total);
    const std::size_t d = bins_.cuts.size();
    std::vector<double> hg, hh;
    for (std::size_t f = 0; f < d; ++f) {
      std::size_t nb = bins_.bin_count(f);
      if (nb < 2) continue;
      hg.assign(nb, 0.0);
      hh.assign(nb, 0.0);
      for (auto i : rows) {
        auto b = bins_.at(f, i);
        hg[b] += grad_[i];
        hh[b] += hess_[i];
      }
      double gl = 0, hl = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hg[b];
        hl += hh[b];
        double gr = g_total - gl, hr = h_total - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent) - params_.gamma;
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.bin = b;
        }
      }
    }
    return best;
  }

  const Binning& bins_;
  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
  const BoostedTreesParams& params_;
};

double tree_value(const std::vector<TreeNode>& tree, std::span<const double> x) {
  std::size_t k = 0;
  while (tree[k].feature >= 0) {
    const auto& n = tree[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return tree[k].value;
}

}  // namespace

BoostedTrees::BoostedTrees(std::vector<std::vector<TreeNode>> trees, double base_margin)
    : trees_(std::move(trees)), base_margin_(base_margin) {}

double BoostedTrees::margin(std::span<const double> x) const {
  double z = base_margin_;
  for (const auto& t : trees_) z += tree_value(t, x);
  return z;
}

double BoostedTrees::probability(std::span<const double> x) const { return sigmoid(margin(x)); }

nlohmann::ordered_json BoostedTrees::to_json() const {
  nlohmann::ordered_json j;
  j["base_margin"] = base_margin_;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : trees_) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j;
}

std::shared_ptr<BoostedTrees> BoostedTrees::from_json(const nlohmann::json& j) {
  std::vector<std::vector<TreeNode>> trees;
  for (const auto& t : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& n : t)
      nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                       n.at(4).get<double>()});
    for (const auto& n : nodes) {
      if (n.feature >= 0 && (n.left < 0 || n.right < 0 || static_cast<std::size_t>(n.left) >= nodes.size() ||
                             static_cast<std::size_t>(n.right) >= nodes.size()))
        throw DataError("boosted trees artifact has a dangling child index");
    }
    if (nodes.empty()) throw DataError("boosted trees artifact has an empty tree");
    trees.push_back(std::move(nodes));
  }
  return std::make_shared<BoostedTrees>(std::move(trees), j.at("base_margin").get<double>());
}

BoostedTreesFit fit_boosted_trees(const LabeledData& train, const LabeledData* validation,
                                  const BoostedTreesParams& params) {
  if (train.size() == 0) throw DataError("boosted trees: no training rows");
  if (params.learning_rate <= 0) throw ConfigError("learning rate must be positive");
  auto bins = make_bins(train, params.max_bins);
  const std::size_t n = train.size();

  // base_score 0.5
  const double base_margin = 0.0;
  std::vector<double> margins(n, base_margin), grad(n), hess(n), leaf_of(n);
  std::vector<double> val_margins;
  if (validation) val_margins.assign(validation->size(), base_margin);

  BoostedTreesFit fit;
  std::vector<std::vector<TreeNode>> trees;
  double best_val = std::numeric_limits<double>::infinity();

  for (std::size_t round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = sigmoid(margins[i]);
      grad[i] = p - train.labels[i];
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }
    TreeBuilder builder(bins, grad, hess, params);
    auto tree = builder.build(leaf_of);
    for (std::size_t i = 0; i < n; ++i) margins[i] += leaf_of[i];
    fit.training_loss.push_back(mean_log_loss(margins, train.labels));

    if (validation) {
      for (std::size_t i = 0; i < validation->size(); ++i) val_margins[i] += tree_value(tree, validation->rows[i]);
      double vl = mean_log_loss(val_margins, validation->labels);
      fit.validation_loss.push_back(vl);
      if (vl < best_val) {
        best_val = vl;
        fit.best_round = round;
      }
    } else {
      fit.best_round = round;
    }
    trees.push_back(std::move(tree));
    if (validation && params.early_stopping_rounds > 0 && round - fit.best_round >= params.early_stopping_rounds)
      break;
  }
  trees.resize(std::min(trees.size(), fit.best_round + 1));
  fit.model = std::make_shared<BoostedTrees>(std::move(trees), base_margin);
  return fit;
}

}  // namespace mgaudit::hscorer
