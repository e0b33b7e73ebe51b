#pragma once

#include "infmcmc/model.hpp"
#include "infmcmc/prior.hpp"
#include "infmcmc/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace infmcmc {

/// Position-dependent preconditioner K(u) in split form:
///
///   K(u)^{-1} = [ F~(u) + C_t^{-1}   0        ]
///               [ 0                  C_r^{-1} ]
///
/// where F~ is the Fisher (Gauss-Newton) information on the block modes and
/// the tail keeps the prior. Internally the block is factored through the
/// whitened matrix M = I + Lambda F~ Lambda (Lambda = diag(lambda_j) on the
/// block), whose eigenvalues are all >= 1; block_precision = Lambda^{-1} M
/// Lambda^{-1}. An empty block gives K = C exactly.
class SplitMetric {
public:
  SplitMetric(const KLPrior &prior, BlockIndices block, Eigen::MatrixXd fisher);

  int dim() const noexcept { return static_cast<int>(lambda_.size()); }
  int block_size() const noexcept { return static_cast<int>(block_.size()); }
  const BlockIndices &block_indices() const noexcept { return block_; }
  const Eigen::MatrixXd &fisher() const noexcept { return fisher_; }

  /// {K(u)^t}^{-1} = F~ + diag(1 / lambda_j^2) on the block.
  Eigen::MatrixXd block_precision() const;
  /// Lower Cholesky factor of block_precision().
  Eigen::MatrixXd block_chol() const;
  /// log |C^{1/2} K(u)^{-1/2}| = 1/2 log det(I + Lambda F~ Lambda) >= 0.
  double half_logdet_ck() const noexcept { return half_logdet_ck_; }
  /// Whether the diagonal jitter fallback was needed.
  bool jittered() const noexcept { return jittered_; }

  /// <a, K^{-1} b> = sum_j a_j b_j / lambda_j^2 + <a^t, F~ b^t>.
  double precision_inner(const Coefficients &a, const Coefficients &b) const;
  /// <w^t, F~ w^t> = <w, (K^{-1} - C^{-1}) w>, formed without subtraction.
  double excess_quadratic(const Coefficients &w) const;
  /// K r.
  Coefficients apply_covariance(const Coefficients &r) const;
  /// Factor B with B B^T = K applied to standard normals z.
  Coefficients colour(const Eigen::VectorXd &z) const;
  /// Dense K, for testing at small dimension.
  Eigen::MatrixXd dense_covariance() const;

private:
  Eigen::VectorXd block_gather(const Coefficients &x) const;

  Eigen::VectorXd lambda2_; ///< prior eigenvalues, all modes
  Eigen::VectorXd lambda_;
  BlockIndices block_;
  Eigen::VectorXd block_lambda_;
  Eigen::MatrixXd fisher_;
  Eigen::LLT<Eigen::MatrixXd> whitened_; ///< chol(I + Lambda F~ Lambda)
  double half_logdet_ck_ = 0.0;
  bool jittered_ = false;
};

/// Natural gradient g(u) = -K(u){(C^{-1} - K^{-1}(u)) u + D Phi(u)}.
/// Block: -K^t{-F~ u^t + DPhi^t}; tail: -lambda_j^2 DPhi_j.
struct NaturalGradient {
  Coefficients values;
};

/// Assemble F~ at u (one forward plus |block| tangent solves) and factor.
SplitMetric build_metric(ForwardModel &model, const KLPrior &prior,
                         const Coefficients &u, const BlockIndices &block);

NaturalGradient natural_gradient(const SplitMetric &metric, const Coefficients &u,
                                 const Coefficients &dphi);

/// v ~ N(0, K(u)). Consumes dim() normals in index order.
Coefficients metric_sample(const SplitMetric &metric, ChainRng &rng);

/// log of the density of N((sqrt(h)/2) g, K(u)) with respect to N(0, C) at w:
///   -(h/8)|K^{-1/2} g|^2 + (sqrt(h)/2)<K^{-1/2} g, K^{-1/2} w>
///   - 1/2 <w^t, F~ w^t> + log|C^{1/2} K^{-1/2}|.
double lambda_log(const SplitMetric &metric, const NaturalGradient &g,
                  const Coefficients &w, double h);

} // namespace infmcmc
