#include "infmcmc/geometry.hpp"
#include "infmcmc/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace infmcmc {

SplitMetric::SplitMetric(const KLPrior &prior, BlockIndices block,
                         Eigen::MatrixXd fisher)
    : lambda2_(prior.eigenvalues()), lambda_(prior.std_devs()),
      block_(std::move(block)), fisher_(std::move(fisher)) {
  const auto d = static_cast<Eigen::Index>(block_.size());
  if (fisher_.rows() != d || fisher_.cols() != d)
    throw std::invalid_argument("metric: Fisher block has the wrong shape");
  block_lambda_.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const int j = block_[k];
    if (j < 0 || j >= prior.dim())
      throw std::invalid_argument("metric: block index out of range");
    block_lambda_[k] = lambda_[j];
  }
  if (d == 0)
    return;

  Eigen::MatrixXd whitened =
      block_lambda_.asDiagonal() * fisher_ * block_lambda_.asDiagonal();
  whitened = 0.5 * (whitened + whitened.transpose());
  whitened.diagonal().array() += 1.0;
  whitened_.compute(whitened);
  if (whitened_.info() != Eigen::Success) {
    // F~ is PSD in exact arithmetic; one jitter retry absorbs round-off.
    whitened.diagonal().array() += 1e-10 * whitened.trace() / double(d);
    whitened_.compute(whitened);
    jittered_ = true;
    if (whitened_.info() != Eigen::Success)
      throw MetricFailure("metric: block precision is not positive definite");
  }
  const Eigen::MatrixXd &l = whitened_.matrixLLT();
  double half = 0.0;
  for (Eigen::Index k = 0; k < d; ++k)
    half += std::log(l(k, k));
  half_logdet_ck_ = half;
  if (!std::isfinite(half_logdet_ck_))
    throw MetricFailure("metric: non-finite log-determinant");
}

Eigen::VectorXd SplitMetric::block_gather(const Coefficients &x) const {
  Eigen::VectorXd out(block_.size());
  for (std::size_t k = 0; k < block_.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = x[block_[k]];
  return out;
}

Eigen::MatrixXd SplitMetric::block_precision() const {
  Eigen::MatrixXd p = fisher_;
  p.diagonal() += block_lambda_.cwiseAbs2().cwiseInverse();
  return p;
}

Eigen::MatrixXd SplitMetric::block_chol() const {
  if (block_.empty())
    return {};
  return block_lambda_.cwiseInverse().asDiagonal() *
         Eigen::MatrixXd(whitened_.matrixL());
}

double SplitMetric::precision_inner(const Coefficients &a,
                                    const Coefficients &b) const {
  double out = (a.array() * b.array() / lambda2_.array()).sum();
  if (!block_.empty())
    out += block_gather(a).dot(fisher_ * block_gather(b));
  return out;
}

double SplitMetric::excess_quadratic(const Coefficients &w) const {
  if (block_.empty())
    return 0.0;
  const Eigen::VectorXd wt = block_gather(w);
  return wt.dot(fisher_ * wt);
}

Coefficients SplitMetric::apply_covariance(const Coefficients &r) const {
  Coefficients out = lambda2_.cwiseProduct(r);
  if (block_.empty())
    return out;
  // K^t = Lambda M^{-1} Lambda.
  const Eigen::VectorXd kt =
      block_lambda_.cwiseProduct(whitened_.solve(block_lambda_.cwiseProduct(block_gather(r))));
  for (std::size_t k = 0; k < block_.size(); ++k)
    out[block_[k]] = kt[static_cast<Eigen::Index>(k)];
  return out;
}

Coefficients SplitMetric::colour(const Eigen::VectorXd &z) const {
  if (z.size() != dim())
    throw std::invalid_argument("metric: normal vector length mismatch");
  Coefficients out = lambda_.cwiseProduct(z);
  if (block_.empty())
    return out;
  // Solve block_chol^T x = z^t with block_chol = Lambda^{-1} L_M, i.e.
  // x = Lambda L_M^{-T} z^t, whose covariance is Lambda M^{-1} Lambda = K^t.
  const Eigen::VectorXd x = block_lambda_.cwiseProduct(
      whitened_.matrixU().solve(block_gather(z)));
  for (std::size_t k = 0; k < block_.size(); ++k)
    out[block_[k]] = x[static_cast<Eigen::Index>(k)];
  return out;
}

Eigen::MatrixXd SplitMetric::dense_covariance() const {
  const Eigen::Index n = dim();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    k.col(j) = apply_covariance(Eigen::VectorXd::Unit(n, j));
  return 0.5 * (k + k.transpose());
}

SplitMetric build_metric(ForwardModel &model, const KLPrior &prior,
                         const Coefficients &u, const BlockIndices &block) {
  return SplitMetric(prior, block, model.fisher_block(u, block));
}

NaturalGradient natural_gradient(const SplitMetric &metric, const Coefficients &u,
                                 const Coefficients &dphi) {
  if (u.size() != metric.dim() || dphi.size() != metric.dim())
    throw std::invalid_argument("natural_gradient: dimension mismatch");
  // (C^{-1} - K^{-1}) u = -F~ u^t on the block and zero on the tail.
  Coefficients drive = dphi;
  const auto &block = metric.block_indices();
  if (!block.empty()) {
    Eigen::VectorXd ut(block.size());
    for (std::size_t k = 0; k < block.size(); ++k)
      ut[static_cast<Eigen::Index>(k)] = u[block[k]];
    const Eigen::VectorXd fu = metric.fisher() * ut;
    for (std::size_t k = 0; k < block.size(); ++k)
      drive[block[k]] -= fu[static_cast<Eigen::Index>(k)];
  }
  return {-metric.apply_covariance(drive)};
}

Coefficients metric_sample(const SplitMetric &metric, ChainRng &rng) {
  return metric.colour(rng.normals(metric.dim()));
}

double lambda_log(const SplitMetric &metric, const NaturalGradient &g,
                  const Coefficients &w, double h) {
  if (!(h > 0.0))
    throw std::invalid_argument("lambda_log: step must be positive");
  const Coefficients &gv = g.values;
  return -(h / 8.0) * metric.precision_inner(gv, gv) +
         0.5 * std::sqrt(h) * metric.precision_inner(gv, w) -
         0.5 * metric.excess_quadratic(w) + metric.half_logdet_ck();
}

} // namespace infmcmc
