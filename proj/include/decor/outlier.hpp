#pragma once

// Per-cluster outlier detection: an Isolation Forest and LOF ensemble whose
// flags must agree, with robust median + k·MAD score cuts and a sample-size
// adaptive LOF neighborhood.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "decor/common.hpp"

namespace decor {

// Rows are samples, matching the clustering module.
using EmbMatrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Score thresholds.

// tau = median(s) + k * MAD(s), MAD(s) = median(|s - median(s)|); the median
// of an even-length vector is the mean of the two central order statistics.
double robust_cut(const std::vector<double>& scores, double k);

// floor(sqrt(N)) clipped to [min_k, max_k], then capped at N - 1.
int adaptive_k(int n, int min_k = 10, int max_k = 50);

// ---------------------------------------------------------------------------
// Isolation forest.

struct IsoNode {
  int feature = -1;  // -1 marks a leaf
  double split = 0.0;
  int left = -1, right = -1;
  int depth = 0;
  double leaf_path = 0.0;  // depth plus the subtree-size path correction
};

struct IsolationTree {
  std::vector<IsoNode> nodes;  // node 0 is the root

  int max_depth() const;
};

struct IsolationForestModel {
  int subsample = 0;        // psi actually used (capped at N)
  double normalizer = 0.0;  // c(psi)
  std::vector<IsolationTree> trees;
};

// Average unsuccessful-search path length c(n) = 2·H(n-1) - 2(n-1)/n with
// H(m) = ln m + Euler–Mascheroni; 0 for n < 2.
double average_path_length(int n);

// Each tree grows on a seeded subsample without replacement; splits pick a
// feature uniformly among those with spread and a uniform value within the
// node's range; growth stops at one point, zero spread, or depth
// ceil(log2 psi).
IsolationForestModel fit_isolation_forest(const EmbMatrix& x, int trees, int subsample,
                                          std::uint64_t seed);

// Anomaly scores 2^(-E[h(x)] / c(psi)) in (0, 1); higher is more anomalous.
std::vector<double> if_scores(const IsolationForestModel& model, const EmbMatrix& x);

// ---------------------------------------------------------------------------
// Local outlier factor.

// Classic LOF with Euclidean metric: k-distance neighborhoods (ties
// included), reachability distances, local reachability density, and the
// mean density ratio. Duplicate points (zero mean reachability) saturate the
// density so that identical points score exactly 1.
std::vector<double> lof_scores(const EmbMatrix& x, int k_lof);

// ---------------------------------------------------------------------------
// Ensemble detection.

struct OutlierConfig {
  int trees = 100;
  int subsample = 256;
  double k_cut = 3.0;      // robust-cut scale
  double hi_cont = 0.20;   // contamination prior: IF prefilter quantile
  int min_k = 10;          // LOF neighborhood clip range
  int max_k = 50;
  int min_cluster = 15;    // smaller clusters are skipped
  std::uint64_t seed = 0;

  // How the IF flag combines the contamination quantile and the robust cut.
  enum class IfRule { quantile_and_cut, quantile_only, cut_only };
  IfRule if_rule = IfRule::quantile_and_cut;

  void validate() const;
};

struct ClusterOutliers {
  int cluster = 0;           // 0-based cluster id
  std::vector<int> members;  // global row indices, ascending
  std::vector<double> if_scores, lof_scores;
  double if_cut = 0.0, lof_cut = 0.0;
  std::vector<bool> if_flags, lof_flags, final_flags;  // parallel to members
};

struct OutlierReport {
  std::vector<ClusterOutliers> clusters;          // processed, ascending id
  std::vector<std::pair<int, int>> skipped;       // (cluster id, member count)
  std::vector<int> flagged;                       // O*: sorted global indices
};

// Runs the ensemble per hard-label cluster. Clusters below min_cluster are
// recorded as skipped with zero flags. Each cluster's forest draws from an
// independent stream forked from (seed, cluster id), so the report does not
// depend on evaluation order.
OutlierReport detect_outliers(const EmbMatrix& z, const std::vector<int>& labels,
                              const OutlierConfig& cfg = {});

// Text table `sample_index, cluster, if_score, lof_score, if_flag, lof_flag,
// final_flag` (1-based indices and cluster ids on disk) under a column-name
// header, with a footer listing skipped clusters. Thresholds are not stored;
// loaded reports carry NaN cuts.
void write_outlier_report(const std::filesystem::path& path, const OutlierReport& report);
OutlierReport read_outlier_report(const std::filesystem::path& path);

}  // namespace decor
