#include <cmath>

#include "decor/cluster.hpp"

namespace decor {

namespace {

constexpr double kLogPi = 1.1447298858494001741;  // ln(pi)
constexpr double kLog2Pi = 1.8378770664093454836;

// ln of the multivariate gamma function.
double log_multigamma(int d, double a) {
  double acc = 0.25 * d * (d - 1) * kLogPi;
  for (int j = 1; j <= d; ++j) acc += std::lgamma(a + 0.5 * (1 - j));
  return acc;
}

// Cholesky with an escalating additive jitter; returns the factor and the
// log determinant of the (possibly jittered) matrix.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& m, const std::string& context,
                                double* log_det) {
  const int d = (int)m.rows();
  for (const double jitter : {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4}) {
    Eigen::MatrixXd candidate = m;
    if (jitter > 0.0) candidate += jitter * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(candidate);
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd l = llt.matrixL();
      if (log_det != nullptr) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) acc += std::log(l(i, i));
        *log_det = 2.0 * acc;
      }
      return l;
    }
  }
  throw numerical_error("Cholesky factorization failed for " + context +
                        " even after jitter escalation");
}

struct PosteriorParams {
  double kappa = 0.0, nu = 0.0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd psi;
};

PosteriorParams niw_posterior(const GaussStats& stats, const NIWPrior& prior) {
  PosteriorParams p;
  const double n = stats.n;
  p.kappa = prior.kappa0 + n;
  p.nu = prior.nu + n;
  if (n <= 0.0) {
    p.mu = prior.mu0;
    p.psi = prior.psi;
    return p;
  }
  p.mu = (prior.kappa0 * prior.mu0 + n * stats.mean) / p.kappa;
  const Eigen::VectorXd gap = stats.mean - prior.mu0;
  if (prior.diagonal) {
    p.psi = prior.psi;
    p.psi.diagonal() += stats.scatter.diagonal();
    p.psi.diagonal() += (prior.kappa0 * n / p.kappa) * gap.cwiseProduct(gap);
  } else {
    p.psi = prior.psi + stats.scatter + (prior.kappa0 * n / p.kappa) * (gap * gap.transpose());
  }
  return p;
}

// Univariate specialization of the marginal, used per dimension in
// diagonal mode: parameters are scalars.
double log_marginal_1d(double n, double kappa0, double nu0, double psi0, double kappa_n,
                       double nu_n, double psi_n) {
  return -0.5 * n * kLogPi + std::lgamma(0.5 * nu_n) - std::lgamma(0.5 * nu0) +
         0.5 * nu0 * std::log(psi0) - 0.5 * nu_n * std::log(psi_n) +
         0.5 * (std::log(kappa0) - std::log(kappa_n));
}

}  // namespace

EmbMatrix to_double_matrix(const RowMat<float>& emb) {
  EmbMatrix z(emb.rows, emb.cols);
  for (int i = 0; i < emb.rows; ++i)
    for (int j = 0; j < emb.cols; ++j) z(i, j) = (double)emb.at(i, j);
  return z;
}

void NIWPrior::validate() const {
  const int d = dim();
  if (d < 1) throw config_error("prior dimension must be positive");
  if (kappa0 <= 0.0) throw config_error("prior strength kappa0 must be positive");
  if (nu < (double)d) throw config_error("prior degrees of freedom must be at least d");
  if (psi.rows() != d || psi.cols() != d) throw shape_error("prior scale matrix shape mismatch");
}

NIWPrior make_default_prior(const EmbMatrix& z, bool diagonal) {
  if (z.rows() < 1 || z.cols() < 1) throw config_error("cannot build a prior from no data");
  const int d = (int)z.cols();
  NIWPrior prior;
  prior.mu0 = z.colwise().mean();
  prior.kappa0 = 1.0;
  prior.nu = (double)d + 2.0;
  const Eigen::VectorXd var =
      (z.rowwise() - prior.mu0.transpose()).array().square().colwise().mean();
  double mean_var = var.mean();
  if (!(mean_var > 1e-12)) mean_var = 1.0;  // degenerate data: unit scale
  prior.psi = mean_var * Eigen::MatrixXd::Identity(d, d);
  prior.diagonal = diagonal;
  return prior;
}

GaussStats gauss_stats(const EmbMatrix& z, const Eigen::VectorXd& weights) {
  if (weights.size() != z.rows()) throw shape_error("weight vector length mismatch");
  const int d = (int)z.cols();
  GaussStats s(d);
  s.n = weights.sum();
  if (s.n <= 0.0) return s;
  s.mean = (z.transpose() * weights) / s.n;
  const Eigen::MatrixXd centered = z.rowwise() - s.mean.transpose();
  const Eigen::MatrixXd weighted = weights.cwiseSqrt().asDiagonal() * centered;
  s.scatter = weighted.transpose() * weighted;
  s.scatter = 0.5 * (s.scatter + s.scatter.transpose()).eval();
  return s;
}

GaussStats gauss_stats(const EmbMatrix& z, const std::vector<int>& members) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(z.rows());
  for (int i : members) w((Eigen::Index)i) = 1.0;
  return gauss_stats(z, w);
}

GaussStats merge_stats(const GaussStats& a, const GaussStats& b) {
  if (a.n <= 0.0) return b;
  if (b.n <= 0.0) return a;
  GaussStats m((int)a.mean.size());
  m.n = a.n + b.n;
  m.mean = (a.n * a.mean + b.n * b.mean) / m.n;
  const Eigen::VectorXd gap = a.mean - b.mean;
  m.scatter = a.scatter + b.scatter + (a.n * b.n / m.n) * (gap * gap.transpose());
  return m;
}

double niw_log_marginal(const GaussStats& stats, const NIWPrior& prior,
                        const std::string& context) {
  prior.validate();
  if (stats.n <= 0.0) return 0.0;
  const int d = prior.dim();
  const double n = stats.n;
  const PosteriorParams post = niw_posterior(stats, prior);

  if (prior.diagonal) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      acc += log_marginal_1d(n, prior.kappa0, prior.nu - d + 1.0, prior.psi(j, j), post.kappa,
                             post.nu - d + 1.0, post.psi(j, j));
    }
    return acc;
  }

  double logdet0 = 0.0, logdet_n = 0.0;
  (void)robust_cholesky(prior.psi, context + " prior scale", &logdet0);
  (void)robust_cholesky(post.psi, context, &logdet_n);
  return -0.5 * n * d * kLogPi + log_multigamma(d, 0.5 * post.nu) -
         log_multigamma(d, 0.5 * prior.nu) + 0.5 * prior.nu * logdet0 - 0.5 * post.nu * logdet_n +
         0.5 * d * (std::log(prior.kappa0) - std::log(post.kappa));
}

Predictive niw_predictive(const GaussStats& stats, const NIWPrior& prior,
                          const std::string& context) {
  prior.validate();
  const int d = prior.dim();
  const PosteriorParams post = niw_posterior(stats, prior);
  Predictive pred;
  pred.dof = post.nu - d + 1.0;
  pred.mean = post.mu;
  pred.diagonal = prior.diagonal;
  const double scale = (post.kappa + 1.0) / (post.kappa * pred.dof);

  if (prior.diagonal) {
    // Product of univariate t densities; per-dimension dof uses the
    // univariate posterior (nu - d + 1 shift applied dimension-wise).
    pred.dof = (post.nu - d + 1.0);
    pred.diag_var = scale * post.psi.diagonal();
    return pred;
  }

  double logdet = 0.0;
  pred.chol = robust_cholesky(scale * post.psi, context, &logdet);
  pred.log_norm = std::lgamma(0.5 * (pred.dof + d)) - std::lgamma(0.5 * pred.dof) -
                  0.5 * d * (std::log(pred.dof) + kLogPi) - 0.5 * logdet;
  return pred;
}

Eigen::VectorXd predictive_log_density(const Predictive& pred, const EmbMatrix& z) {
  const int d = (int)pred.mean.size();
  if (z.cols() != d) throw shape_error("embedding dimension does not match the predictive");
  const Eigen::Index n = z.rows();

  if (pred.diagonal) {
    const double dof = pred.dof;
    const double per_dim_norm =
        std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) - 0.5 * (std::log(dof) + kLogPi);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < d; ++j) {
      const double v = pred.diag_var(j);
      const Eigen::ArrayXd gap = z.col(j).array() - pred.mean(j);
      out.array() += per_dim_norm - 0.5 * std::log(v) -
                     0.5 * (dof + 1.0) * (1.0 + gap.square() / (v * dof)).log();
    }
    return out;
  }

  // Solve L y = (x - mu) for all points at once; m2 = |y|^2 per point.
  Eigen::MatrixXd gap = (z.rowwise() - pred.mean.transpose()).transpose();
  pred.chol.triangularView<Eigen::Lower>().solveInPlace(gap);
  const Eigen::ArrayXd m2 = gap.colwise().squaredNorm().transpose();
  return (pred.log_norm - 0.5 * (pred.dof + d) * (1.0 + m2 / pred.dof).log()).matrix();
}

}  // namespace decor
