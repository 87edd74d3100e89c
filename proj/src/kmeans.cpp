#include <cmath>
#include <limits>

#include "decor/cluster.hpp"

namespace decor {

namespace {

constexpr int kMaxLloydRounds = 300;

// Squared distances of every row of z to one center.
Eigen::VectorXd sq_dist_to(const EmbMatrix& z, const Eigen::RowVectorXd& center) {
  return (z.rowwise() - center).rowwise().squaredNorm();
}

// k-means++ seeding: first center uniform, then proportional to the squared
// distance to the nearest chosen center.
Eigen::MatrixXd seed_centroids(const EmbMatrix& z, int k, Rng& rng) {
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd centers(k, z.cols());
  centers.row(0) = z.row((Eigen::Index)rng.below((std::uint64_t)n));
  Eigen::VectorXd best = sq_dist_to(z, centers.row(0));
  for (int c = 1; c < k; ++c) {
    const double total = best.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= best(i);
        if (target <= 0.0) {
          pick = i;
          break;
        }
        pick = i;  // numeric slack: fall through to the last row
      }
    } else {
      pick = (Eigen::Index)rng.below((std::uint64_t)n);  // all points coincide
    }
    centers.row(c) = z.row(pick);
    best = best.cwiseMin(sq_dist_to(z, centers.row(c)));
  }
  return centers;
}

KmeansResult lloyd(const EmbMatrix& z, int k, Rng& rng) {
  const Eigen::Index n = z.rows();
  KmeansResult r;
  r.centroids = seed_centroids(z, k, rng);
  r.labels.assign((std::size_t)n, 0);

  std::vector<int> counts((std::size_t)k, 0);
  for (int round = 0; round < kMaxLloydRounds; ++round) {
    // Assign: nearest centroid, lowest index on ties.
    bool changed = round == 0;
    Eigen::VectorXd best = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (int c = 0; c < k; ++c) {
      const Eigen::VectorXd d = sq_dist_to(z, r.centroids.row(c));
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d(i) < best(i)) {
          best(i) = d(i);
          if (r.labels[(std::size_t)i] != c) {
            if (round > 0) changed = true;
            r.labels[(std::size_t)i] = c;
          }
        }
      }
    }
    r.inertia = best.sum();
    r.inertia_trace.push_back(r.inertia);
    if (!changed) return r;

    // Update: means of members; an empty cluster is reseeded at the point
    // farthest from its current centroid.
    r.centroids.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      r.centroids.row(r.labels[(std::size_t)i]) += z.row(i);
      ++counts[(std::size_t)r.labels[(std::size_t)i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[(std::size_t)c] > 0) {
        r.centroids.row(c) /= (double)counts[(std::size_t)c];
      } else {
        Eigen::Index far = 0;
        best.maxCoeff(&far);
        r.centroids.row(c) = z.row(far);
        best(far) = 0.0;
      }
    }
  }

  // Hit the round cap: recompute the final inertia for the last assignment.
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 0; c < k; ++c) best = best.cwiseMin(sq_dist_to(z, r.centroids.row(c)));
  r.inertia = best.sum();
  r.inertia_trace.push_back(r.inertia);
  return r;
}

}  // namespace

KmeansResult kmeans(const EmbMatrix& z, int k, std::uint64_t seed, int restarts) {
  if (k < 1) throw config_error("k must be positive");
  if (restarts < 1) throw config_error("restarts must be positive");
  if (z.rows() < k)
    throw config_error("k-means needs at least as many points as clusters (" +
                       std::to_string(z.rows()) + " < " + std::to_string(k) + ")");

  Rng base(seed);
  KmeansResult best;
  for (int attempt = 0; attempt < restarts; ++attempt) {
    Rng rng = base.fork((std::uint64_t)attempt);
    KmeansResult run = lloyd(z, k, rng);
    if (attempt == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

}  // namespace decor
