#include <cmath>
#include <limits>

#include "decor/cluster.hpp"

namespace decor {

namespace {

std::vector<std::vector<int>> group_members(const std::vector<int>& hard, int k) {
  std::vector<std::vector<int>> members((std::size_t)k);
  for (std::size_t i = 0; i < hard.size(); ++i)
    members[(std::size_t)hard[i]].push_back((int)i);
  return members;
}

// Hard argmax labels, lowest column on ties.
std::vector<int> argmax_rows(const Eigen::MatrixXd& r) {
  std::vector<int> hard((std::size_t)r.rows(), 0);
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    double best = r(i, 0);
    for (Eigen::Index c = 1; c < r.cols(); ++c) {
      if (r(i, c) > best) {
        best = r(i, c);
        hard[(std::size_t)i] = (int)c;
      }
    }
  }
  return hard;
}

Eigen::MatrixXd one_hot(const std::vector<int>& hard, int k) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero((Eigen::Index)hard.size(), k);
  for (std::size_t i = 0; i < hard.size(); ++i) r((Eigen::Index)i, hard[i]) = 1.0;
  return r;
}

// 2-means on one cluster's members. Clusters with fewer than two points keep
// empty halves; halves must both hold two points to back a split.
SubClusters refresh_subclusters(const EmbMatrix& z, const std::vector<int>& members,
                                std::uint64_t seed) {
  SubClusters sub;
  if (members.size() < 2) return sub;
  EmbMatrix local((Eigen::Index)members.size(), z.cols());
  for (std::size_t i = 0; i < members.size(); ++i)
    local.row((Eigen::Index)i) = z.row((Eigen::Index)members[i]);
  const KmeansResult split = kmeans(local, 2, seed);

  std::vector<int> in_a, in_b;
  for (std::size_t i = 0; i < members.size(); ++i)
    (split.labels[i] == 0 ? in_a : in_b).push_back((int)i);
  sub.a = gauss_stats(local, in_a);
  sub.b = gauss_stats(local, in_b);
  sub.usable = in_a.size() >= 2 && in_b.size() >= 2;
  return sub;
}

void refresh_all_subclusters(ClusterState& state, const EmbMatrix& z, const Rng& master,
                             int epoch) {
  const auto members = group_members(state.hard, state.K);
  state.subs.assign((std::size_t)state.K, SubClusters{});
  for (int c = 0; c < state.K; ++c) {
    state.subs[(std::size_t)c] = refresh_subclusters(
        z, members[(std::size_t)c],
        master.fork(1000 + (std::uint64_t)epoch).fork((std::uint64_t)c).origin());
  }
}

}  // namespace

void DpmmConfig::validate() const {
  if (k_init < 1) throw config_error("k_init must be positive");
  if (max_epochs < 1) throw config_error("max_epochs must be positive");
  if (alpha <= 0.0) throw config_error("concentration alpha must be positive");
  if (split_merge_period < 1) throw config_error("split/merge period must be positive");
  if (stable_epochs < 1) throw config_error("stability window must be positive");
}

ClusterState fit_dpmm(const EmbMatrix& z, const DpmmConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = z.rows();
  if (n < cfg.k_init)
    throw config_error("DPMM needs at least k_init points (" + std::to_string(n) + " < " +
                       std::to_string(cfg.k_init) + ")");

  ClusterState state;
  state.prior = make_default_prior(z, cfg.diagonal);

  Rng master(cfg.seed);
  const std::uint64_t kmeans_seed = master.fork(1).origin();

  // k-means++ initialization, then drop any empty initial clusters.
  std::vector<int> hard = kmeans(z, cfg.k_init, kmeans_seed, 1).labels;
  {
    std::vector<int> counts((std::size_t)cfg.k_init, 0);
    for (int l : hard) ++counts[(std::size_t)l];
    std::vector<int> remap((std::size_t)cfg.k_init, -1);
    int next = 0;
    for (int c = 0; c < cfg.k_init; ++c)
      if (counts[(std::size_t)c] > 0) remap[(std::size_t)c] = next++;
    for (int& l : hard) l = remap[(std::size_t)l];
    state.K = next;
  }
  state.resp = one_hot(hard, state.K);
  state.hard = hard;
  state.stats.clear();
  for (int c = 0; c < state.K; ++c)
    state.stats.push_back(gauss_stats(z, Eigen::VectorXd(state.resp.col(c))));
  refresh_all_subclusters(state, z, master, 0);

  const auto cluster_name = [](int c) { return "cluster " + std::to_string(c + 1); };

  const auto e_step = [&]() {
    Eigen::MatrixXd logr(n, state.K);
    for (int c = 0; c < state.K; ++c) {
      const Predictive pred =
          niw_predictive(state.stats[(std::size_t)c], state.prior, cluster_name(c));
      logr.col(c) = predictive_log_density(pred, z).array() +
                    std::log(state.stats[(std::size_t)c].n / (double)n);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double peak = logr.row(i).maxCoeff();
      const Eigen::ArrayXd shifted = (logr.row(i).array() - peak).exp();
      state.resp.row(i) = (shifted / shifted.sum()).matrix();
    }
    state.hard = argmax_rows(state.resp);
  };

  int stable = 0;
  std::vector<int> prev_hard = state.hard;
  int prev_k = state.K;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    state.epochs_run = epoch;

    // E-step: responsibilities from posterior predictive densities times
    // count-proportional mixture weights, normalized per row in log space.
    e_step();

    // M-step on the soft responsibilities.
    for (int c = 0; c < state.K; ++c)
      state.stats[(std::size_t)c] = gauss_stats(z, Eigen::VectorXd(state.resp.col(c)));

    // Prune clusters that no longer own any point.
    {
      std::vector<int> counts((std::size_t)state.K, 0);
      for (int l : state.hard) ++counts[(std::size_t)l];
      std::vector<int> keep;
      for (int c = 0; c < state.K; ++c)
        if (counts[(std::size_t)c] > 0) keep.push_back(c);
      if ((int)keep.size() < state.K) {
        Eigen::MatrixXd resp(n, (Eigen::Index)keep.size());
        std::vector<GaussStats> stats;
        std::vector<int> remap((std::size_t)state.K, -1);
        for (std::size_t j = 0; j < keep.size(); ++j) {
          resp.col((Eigen::Index)j) = state.resp.col(keep[j]);
          stats.push_back(state.stats[(std::size_t)keep[j]]);
          remap[(std::size_t)keep[j]] = (int)j;
        }
        for (Eigen::Index i = 0; i < n; ++i) resp.row(i) /= resp.row(i).sum();
        state.resp = std::move(resp);
        state.stats = std::move(stats);
        state.K = (int)keep.size();
        for (int& l : state.hard) l = remap[(std::size_t)l];
      }
    }

    // Sub-cluster refresh on the hard members, every epoch.
    refresh_all_subclusters(state, z, master, epoch);

    // Structural moves on the hard partition, every split_merge_period epochs.
    if (epoch % cfg.split_merge_period == 0) {
      auto members = group_members(state.hard, state.K);
      bool moved = false;

      // Splits: sub-cluster pair as the proposal, accepted when the
      // marginal-likelihood ratio with the concentration beats 1.
      std::vector<int> next_label(state.hard.size(), -1);
      int next_k = 0;
      for (int c = 0; c < state.K; ++c) {
        const SubClusters& sub = state.subs[(std::size_t)c];
        bool split = false;
        if (sub.usable) {
          const GaussStats whole = gauss_stats(z, members[(std::size_t)c]);
          const double ratio = std::log(cfg.alpha) + std::lgamma(sub.a.n) +
                               std::lgamma(sub.b.n) - std::lgamma(whole.n) +
                               niw_log_marginal(sub.a, state.prior, cluster_name(c)) +
                               niw_log_marginal(sub.b, state.prior, cluster_name(c)) -
                               niw_log_marginal(whole, state.prior, cluster_name(c));
          split = ratio > 0.0;
        }
        if (split) {
          // Recover the half assignment by nearest sub-mean.
          const int label_a = next_k, label_b = next_k + 1;
          for (int idx : members[(std::size_t)c]) {
            const double da = (z.row(idx).transpose() - sub.a.mean).squaredNorm();
            const double db = (z.row(idx).transpose() - sub.b.mean).squaredNorm();
            next_label[(std::size_t)idx] = da <= db ? label_a : label_b;
          }
          next_k += 2;
          moved = true;
        } else {
          for (int idx : members[(std::size_t)c]) next_label[(std::size_t)idx] = next_k;
          next_k += 1;
        }
      }
      state.hard = next_label;
      state.K = next_k;

      // Merge: the pair with the closest posterior means, single proposal.
      members = group_members(state.hard, state.K);
      if (state.K >= 2) {
        std::vector<GaussStats> hard_stats;
        for (int c = 0; c < state.K; ++c)
          hard_stats.push_back(gauss_stats(z, members[(std::size_t)c]));
        int best_a = 0, best_b = 1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int a = 0; a < state.K; ++a)
          for (int b = a + 1; b < state.K; ++b) {
            const double d =
                (hard_stats[(std::size_t)a].mean - hard_stats[(std::size_t)b].mean).squaredNorm();
            if (d < best_d) {
              best_d = d;
              best_a = a;
              best_b = b;
            }
          }
        const GaussStats merged =
            merge_stats(hard_stats[(std::size_t)best_a], hard_stats[(std::size_t)best_b]);
        const double ratio =
            std::lgamma(merged.n) - std::lgamma(hard_stats[(std::size_t)best_a].n) -
            std::lgamma(hard_stats[(std::size_t)best_b].n) - std::log(cfg.alpha) +
            niw_log_marginal(merged, state.prior, cluster_name(best_a)) -
            niw_log_marginal(hard_stats[(std::size_t)best_a], state.prior, cluster_name(best_a)) -
            niw_log_marginal(hard_stats[(std::size_t)best_b], state.prior, cluster_name(best_b));
        if (ratio > 0.0) {
          for (int& l : state.hard) {
            if (l == best_b) l = best_a;
            if (l > best_b) --l;
          }
          --state.K;
          moved = true;
        }
      }

      if (moved) {
        // Rebuild the soft state around the new partition; the next E-step
        // re-softens it.
        state.resp = one_hot(state.hard, state.K);
        state.stats.clear();
        for (int c = 0; c < state.K; ++c)
          state.stats.push_back(gauss_stats(z, Eigen::VectorXd(state.resp.col(c))));
        refresh_all_subclusters(state, z, master, epoch);
      }
    }

    // Stability: unchanged cluster count and assignments.
    if (state.K == prev_k && state.hard == prev_hard) {
      if (++stable >= cfg.stable_epochs) {
        state.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    prev_hard = state.hard;
    prev_k = state.K;
  }

  // Leave a coherent soft view: one final E-step against the final clusters.
  e_step();
  for (int c = 0; c < state.K; ++c)
    state.stats[(std::size_t)c] = gauss_stats(z, Eigen::VectorXd(state.resp.col(c)));
  refresh_all_subclusters(state, z, master, state.epochs_run + 1);

  state.weights.assign((std::size_t)state.K, 0.0);
  for (int c = 0; c < state.K; ++c)
    state.weights[(std::size_t)c] = state.stats[(std::size_t)c].n / (double)n;
  return state;
}

}  // namespace decor
