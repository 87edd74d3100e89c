#pragma once

// Non-parametric clustering of embeddings: a Dirichlet-process mixture with
// Normal-inverse-Wishart components and deterministic split/merge moves, a
// k-means baseline, and an MLP soft-assignment head distilled from the
// mixture's responsibilities.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "decor/common.hpp"
#include "decor/nn.hpp"

namespace decor {

// Rows are samples throughout this module.
using EmbMatrix = Eigen::MatrixXd;

EmbMatrix to_double_matrix(const RowMat<float>& emb);

// ---------------------------------------------------------------------------
// Normal-inverse-Wishart machinery.

struct NIWPrior {
  Eigen::VectorXd mu0;
  double kappa0 = 1.0;
  double nu = 0.0;      // degrees of freedom, >= d (default d + 2)
  Eigen::MatrixXd psi;  // scale matrix, SPD (diagonal mode stores a diagonal)
  bool diagonal = false;

  int dim() const { return (int)mu0.size(); }
  void validate() const;
};

// Data-scaled default: mu0 = column mean, kappa0 = 1, nu = d + 2,
// psi = I * mean per-dimension variance (1 when the data are degenerate).
NIWPrior make_default_prior(const EmbMatrix& z, bool diagonal = false);

// Weighted first/second moments of a set of points.
struct GaussStats {
  double n = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;  // sum of weighted outer products about the mean

  GaussStats() = default;
  explicit GaussStats(int d)
      : mean(Eigen::VectorXd::Zero(d)), scatter(Eigen::MatrixXd::Zero(d, d)) {}
};

GaussStats gauss_stats(const EmbMatrix& z, const Eigen::VectorXd& weights);
GaussStats gauss_stats(const EmbMatrix& z, const std::vector<int>& members);
GaussStats merge_stats(const GaussStats& a, const GaussStats& b);

// Log marginal likelihood of the points summarized by stats under the prior
// (normal likelihood, NIW prior integrated out; multivariate-t closed form).
// n = 0 returns 0. context names the cluster in numerical errors.
double niw_log_marginal(const GaussStats& stats, const NIWPrior& prior,
                        const std::string& context = "cluster");

// Posterior predictive density, prepared once per cluster for the E-step.
struct Predictive {
  double dof = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;       // lower Cholesky factor of the t scale matrix
  Eigen::VectorXd diag_var;   // diagonal mode: per-dimension scale^2
  double log_norm = 0.0;      // density constant (full mode)
  bool diagonal = false;
};

Predictive niw_predictive(const GaussStats& stats, const NIWPrior& prior,
                          const std::string& context = "cluster");

// Log densities of every row of z under the predictive (length N).
Eigen::VectorXd predictive_log_density(const Predictive& pred, const EmbMatrix& z);

// ---------------------------------------------------------------------------
// K-means.

struct KmeansResult {
  std::vector<int> labels;  // 0-based
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // one entry per Lloyd assignment round
};

// k-means++ seeding, Lloyd iterations to an assignment fixpoint (<= 300
// rounds), best of `restarts` runs by inertia. Deterministic for a seed.
KmeansResult kmeans(const EmbMatrix& z, int k, std::uint64_t seed, int restarts = 1);

// ---------------------------------------------------------------------------
// DPMM.

struct DpmmConfig {
  int k_init = 30;
  int max_epochs = 200;
  double alpha = 1.0;          // concentration, used by the split/merge ratios
  int split_merge_period = 5;  // propose moves every this many epochs
  int stable_epochs = 10;      // stop after this many unchanged epochs
  bool diagonal = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// 2-means halves of one cluster's members, the split-proposal material.
struct SubClusters {
  GaussStats a, b;
  bool usable = false;  // both halves hold at least two members
};

struct ClusterState {
  int K = 0;
  NIWPrior prior;
  std::vector<GaussStats> stats;    // per-cluster soft statistics
  std::vector<SubClusters> subs;    // per-cluster halves, refreshed every epoch
  std::vector<double> weights;      // mixture weights, proportional to counts
  Eigen::MatrixXd resp;             // N x K responsibilities, rows sum to 1
  std::vector<int> hard;            // argmax labels, 0-based
  int epochs_run = 0;
  bool converged = false;
};

ClusterState fit_dpmm(const EmbMatrix& z, const DpmmConfig& cfg);

// ---------------------------------------------------------------------------
// MLP soft-assignment head: affine(d -> hidden), ReLU, affine(hidden -> K),
// softmax rows.

struct MlpHead {
  int in_dim = 0, hidden = 0, k = 0;
  std::vector<double> params;

  MlpHead() = default;
  MlpHead(int in, int h, int classes);

  std::size_t w1() const { return 0; }
  std::size_t b1() const { return (std::size_t)hidden * in_dim; }
  std::size_t w2() const { return b1() + (std::size_t)hidden; }
  std::size_t b2() const { return w2() + (std::size_t)k * hidden; }
  std::size_t param_count() const { return b2() + (std::size_t)k; }
};

struct HeadFitConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int max_epochs = 500;
  double target_agreement = 0.99;
  int hidden = 50;
  std::uint64_t seed = 0;
};

struct HeadFitResult {
  MlpHead head;
  double agreement = 0.0;  // final argmax agreement with the DPMM labels
  int epochs_run = 0;
  bool reached_target = false;
};

// Distills the mixture's responsibilities into the head with soft-target
// cross-entropy; stops once argmax agreement with the DPMM hard labels
// reaches the target (or at the epoch cap, recording a warning flag).
HeadFitResult fit_head(const EmbMatrix& z, const ClusterState& state,
                       const HeadFitConfig& cfg = {});

// Row-stochastic soft memberships of every row of z.
Eigen::MatrixXd soft_cluster(const EmbMatrix& z, const MlpHead& head);

// Argmax per row; ties break toward the lowest cluster index. 0-based.
std::vector<int> hard_labels(const Eigen::MatrixXd& p);

// ---------------------------------------------------------------------------
// Serialization.

// Clustering checkpoint: magic "DPM1", prior, per-cluster statistics and
// weights, and the distilled head.
struct ClusterModel {
  ClusterState state;
  MlpHead head;
};

void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model);
ClusterModel load_cluster_model(const std::filesystem::path& path);

// Assignment table: `K=<k>` header, then one line per sample
// `index, hard_label, p_1, ..., p_K` (indices and labels 1-based on disk).
struct Assignments {
  int k = 0;
  std::vector<int> hard;  // 0-based in memory
  Eigen::MatrixXd p;
};

void write_assignments(const std::filesystem::path& path, const Eigen::MatrixXd& p);
Assignments read_assignments(const std::filesystem::path& path);

}  // namespace decor
