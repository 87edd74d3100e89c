#include <algorithm>
#include <cmath>
#include <numeric>

#include "decor/outlier.hpp"

namespace decor {

namespace {

constexpr double kEulerMascheroni = 0.57721566490153286;

struct TreeBuilder {
  const EmbMatrix& x;
  int depth_cap;
  Rng rng;
  std::vector<IsoNode> nodes;

  // Grows the subtree over rows[lo, hi) and returns its node index.
  int grow(std::vector<int>& rows, int lo, int hi, int depth) {
    const int id = (int)nodes.size();
    nodes.push_back(IsoNode{});
    nodes[(std::size_t)id].depth = depth;
    const int count = hi - lo;

    // Feature ranges over this node's points; only spread can be split.
    const int d = (int)x.cols();
    std::vector<double> fmin((std::size_t)d), fmax((std::size_t)d);
    for (int f = 0; f < d; ++f) {
      double mn = x(rows[(std::size_t)lo], f), mx = mn;
      for (int i = lo + 1; i < hi; ++i) {
        const double v = x(rows[(std::size_t)i], f);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      fmin[(std::size_t)f] = mn;
      fmax[(std::size_t)f] = mx;
    }
    std::vector<int> spread;
    for (int f = 0; f < d; ++f)
      if (fmax[(std::size_t)f] > fmin[(std::size_t)f]) spread.push_back(f);

    if (count < 2 || depth >= depth_cap || spread.empty()) {
      nodes[(std::size_t)id].leaf_path = depth + average_path_length(count);
      return id;
    }

    const int feature = spread[(std::size_t)rng.below(spread.size())];
    const double split =
        rng.uniform(fmin[(std::size_t)feature], fmax[(std::size_t)feature]);

    // Partition rows in place: strictly below the split goes left.
    int mid = lo;
    for (int i = lo; i < hi; ++i)
      if (x(rows[(std::size_t)i], feature) < split) std::swap(rows[(std::size_t)i], rows[(std::size_t)mid++]);

    nodes[(std::size_t)id].feature = feature;
    nodes[(std::size_t)id].split = split;
    nodes[(std::size_t)id].left = grow(rows, lo, mid, depth + 1);
    nodes[(std::size_t)id].right = grow(rows, mid, hi, depth + 1);
    return id;
  }
};

double path_length(const IsolationTree& tree, const EmbMatrix& x, Eigen::Index row) {
  int id = 0;
  while (tree.nodes[(std::size_t)id].feature >= 0) {
    const IsoNode& node = tree.nodes[(std::size_t)id];
    id = x(row, node.feature) < node.split ? node.left : node.right;
  }
  return tree.nodes[(std::size_t)id].leaf_path;
}

}  // namespace

double average_path_length(int n) {
  if (n < 2) return 0.0;
  return 2.0 * (std::log((double)(n - 1)) + kEulerMascheroni) -
         2.0 * (double)(n - 1) / (double)n;
}

int IsolationTree::max_depth() const {
  int deepest = 0;
  for (const IsoNode& node : nodes) deepest = std::max(deepest, node.depth);
  return deepest;
}

IsolationForestModel fit_isolation_forest(const EmbMatrix& x, int trees, int subsample,
                                          std::uint64_t seed) {
  if (trees < 1) throw config_error("isolation forest needs at least one tree");
  if (subsample < 2) throw config_error("isolation forest subsample must be at least 2");
  const int n = (int)x.rows();
  if (n < 2) throw config_error("isolation forest needs at least two points");

  IsolationForestModel model;
  model.subsample = std::min(subsample, n);
  model.normalizer = average_path_length(model.subsample);
  const int depth_cap = (int)std::ceil(std::log2((double)model.subsample));

  Rng master(seed);
  std::vector<int> pool((std::size_t)n);
  for (int t = 0; t < trees; ++t) {
    Rng tree_rng = master.fork((std::uint64_t)t);

    // Subsample without replacement: partial Fisher-Yates over the pool.
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> rows((std::size_t)model.subsample);
    for (int i = 0; i < model.subsample; ++i) {
      const std::size_t j = (std::size_t)i + (std::size_t)tree_rng.below((std::uint64_t)(n - i));
      std::swap(pool[(std::size_t)i], pool[j]);
      rows[(std::size_t)i] = pool[(std::size_t)i];
    }

    TreeBuilder builder{x, depth_cap, std::move(tree_rng), {}};
    builder.grow(rows, 0, model.subsample, 0);
    model.trees.push_back(IsolationTree{std::move(builder.nodes)});
  }
  return model;
}

std::vector<double> if_scores(const IsolationForestModel& model, const EmbMatrix& x) {
  if (model.trees.empty()) throw config_error("isolation forest model holds no trees");
  std::vector<double> scores((std::size_t)x.rows(), 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mean_path = 0.0;
    for (const IsolationTree& tree : model.trees) mean_path += path_length(tree, x, i);
    mean_path /= (double)model.trees.size();
    scores[(std::size_t)i] = std::pow(2.0, -mean_path / model.normalizer);
  }
  return scores;
}

}  // namespace decor
