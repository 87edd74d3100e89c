#include <algorithm>
#include <cmath>
#include <numeric>

#include "decor/cluster.hpp"

namespace decor {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

void check_head(const MlpHead& head) {
  if (head.in_dim < 1 || head.hidden < 1 || head.k < 1)
    throw shape_error("MLP head dimensions must be positive");
  if (head.params.size() != head.param_count())
    throw shape_error("MLP head holds " + std::to_string(head.params.size()) +
                      " parameters, expected " + std::to_string(head.param_count()));
}

// Hidden activations and row-softmax output for a block of rows.
Eigen::MatrixXd head_forward(const MlpHead& head, const EmbMatrix& x,
                             Eigen::MatrixXd* hidden_out) {
  ConstMap w1(head.params.data() + head.w1(), head.hidden, head.in_dim);
  ConstMap w2(head.params.data() + head.w2(), head.k, head.hidden);
  Eigen::Map<const Eigen::VectorXd> b1(head.params.data() + head.b1(), head.hidden);
  Eigen::Map<const Eigen::VectorXd> b2(head.params.data() + head.b2(), head.k);

  Eigen::MatrixXd h = (x * w1.transpose()).rowwise() + b1.transpose();
  h = h.cwiseMax(0.0);
  Eigen::MatrixXd logits = (h * w2.transpose()).rowwise() + b2.transpose();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    const Eigen::ArrayXd e = (logits.row(i).array() - peak).exp();
    logits.row(i) = (e / e.sum()).matrix();
  }
  if (hidden_out) *hidden_out = std::move(h);
  return logits;
}

}  // namespace

MlpHead::MlpHead(int in, int h, int classes) : in_dim(in), hidden(h), k(classes) {
  if (in < 1 || h < 1 || classes < 1)
    throw shape_error("MLP head dimensions must be positive");
  params.assign(param_count(), 0.0);
}

Eigen::MatrixXd soft_cluster(const EmbMatrix& z, const MlpHead& head) {
  check_head(head);
  if (z.cols() != head.in_dim)
    throw shape_error("embedding dimension " + std::to_string(z.cols()) +
                      " does not match the head input " + std::to_string(head.in_dim));
  return head_forward(head, z, nullptr);
}

std::vector<int> hard_labels(const Eigen::MatrixXd& p) {
  if (p.cols() < 1) throw shape_error("membership matrix has no columns");
  std::vector<int> hard((std::size_t)p.rows(), 0);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double best = p(i, 0);
    for (Eigen::Index c = 1; c < p.cols(); ++c) {
      if (p(i, c) > best) {
        best = p(i, c);
        hard[(std::size_t)i] = (int)c;
      }
    }
  }
  return hard;
}

HeadFitResult fit_head(const EmbMatrix& z, const ClusterState& state,
                       const HeadFitConfig& cfg) {
  if (cfg.learning_rate < 0.0) throw config_error("learning rate must not be negative");
  if (cfg.batch_size < 1) throw config_error("batch size must be positive");
  if (cfg.max_epochs < 1) throw config_error("epoch count must be positive");
  if (cfg.hidden < 1) throw config_error("hidden width must be positive");
  if (z.rows() < 1) throw config_error("cannot distill a head from an empty embedding");
  if (state.K < 1 || state.resp.cols() != state.K || state.resp.rows() != z.rows() ||
      (Eigen::Index)state.hard.size() != z.rows())
    throw shape_error("cluster state does not match the embedding");

  const int n = (int)z.rows();
  const int d = (int)z.cols();

  HeadFitResult result;
  MlpHead& head = result.head;
  head.in_dim = d;
  head.hidden = cfg.hidden;
  head.k = state.K;
  head.params.assign(head.param_count(), 0.0);

  Rng master(cfg.seed);
  Rng init_rng = master.fork(0);
  const double s1 = 1.0 / std::sqrt((double)d);
  for (std::size_t i = head.w1(); i < head.b1(); ++i)
    head.params[i] = init_rng.uniform(-s1, s1);
  const double s2 = 1.0 / std::sqrt((double)cfg.hidden);
  for (std::size_t i = head.w2(); i < head.b2(); ++i)
    head.params[i] = init_rng.uniform(-s2, s2);

  Rng shuffle_rng = master.fork(1);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  const std::size_t pc = head.param_count();
  std::vector<double> grad(pc, 0.0), m(pc, 0.0), v(pc, 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  const auto agreement_of = [&]() {
    const std::vector<int> pred = hard_labels(head_forward(head, z, nullptr));
    int hits = 0;
    for (int i = 0; i < n; ++i)
      if (pred[(std::size_t)i] == state.hard[(std::size_t)i]) ++hits;
    return (double)hits / n;
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    result.epochs_run = epoch;
    shuffle_rng.shuffle(order);

    for (int start = 0; start < n; start += cfg.batch_size) {
      const int b = std::min(cfg.batch_size, n - start);
      EmbMatrix x(b, d);
      Eigen::MatrixXd target(b, state.K);
      for (int i = 0; i < b; ++i) {
        x.row(i) = z.row(order[(std::size_t)(start + i)]);
        target.row(i) = state.resp.row(order[(std::size_t)(start + i)]);
      }

      Eigen::MatrixXd hidden;
      const Eigen::MatrixXd p = head_forward(head, x, &hidden);
      const double loss =
          -(target.array() * (p.array() + 1e-300).log()).sum() / b;
      if (!std::isfinite(loss))
        throw numerical_error("head loss is not finite at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(start / cfg.batch_size + 1));

      // Soft-target cross-entropy: d loss / d logits = (p - target) / b.
      const Eigen::MatrixXd dlogits = (p - target) / (double)b;
      ConstMap w2(head.params.data() + head.w2(), head.k, cfg.hidden);
      Eigen::MatrixXd dhidden = dlogits * w2;
      dhidden = (hidden.array() > 0.0).select(dhidden, 0.0);

      MutMap gw1(grad.data() + head.w1(), cfg.hidden, d);
      MutMap gw2(grad.data() + head.w2(), head.k, cfg.hidden);
      Eigen::Map<Eigen::VectorXd> gb1(grad.data() + head.b1(), cfg.hidden);
      Eigen::Map<Eigen::VectorXd> gb2(grad.data() + head.b2(), head.k);
      gw2 = dlogits.transpose() * hidden;
      gb2 = dlogits.colwise().sum();
      gw1 = dhidden.transpose() * x;
      gb1 = dhidden.colwise().sum();

      ++step;
      const double c1 = 1.0 - std::pow(beta1, (double)step);
      const double c2 = 1.0 - std::pow(beta2, (double)step);
      bool finite = true;
      for (std::size_t i = 0; i < pc; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        head.params[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        finite &= std::isfinite(head.params[i]);
      }
      if (!finite)
        throw numerical_error("head parameters became non-finite at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(start / cfg.batch_size + 1));
    }

    result.agreement = agreement_of();
    if (result.agreement >= cfg.target_agreement) {
      result.reached_target = true;
      break;
    }
  }
  return result;
}

}  // namespace decor
