#include "infmcmc/model.hpp"
#include "infmcmc/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace infmcmc {

NoiseCovariance::NoiseCovariance(const Eigen::MatrixXd &sigma)
    : sigma_(sigma), llt_(sigma) {
  if (sigma.rows() == 0 || sigma.rows() != sigma.cols())
    throw std::invalid_argument("noise covariance must be square and non-empty");
  if (!sigma.isApprox(sigma.transpose()))
    throw std::invalid_argument("noise covariance must be symmetric");
  if (llt_.info() != Eigen::Success)
    throw std::invalid_argument("noise covariance must be positive definite");
}

NoiseCovariance NoiseCovariance::isotropic(int m, double variance) {
  if (!(variance > 0.0))
    throw std::invalid_argument("noise variance must be positive");
  return NoiseCovariance(variance * Eigen::MatrixXd::Identity(m, m));
}

Eigen::MatrixXd NoiseCovariance::whiten(const Eigen::MatrixXd &x) const {
  return llt_.matrixL().solve(x);
}

Eigen::VectorXd NoiseCovariance::colour(const Eigen::VectorXd &z) const {
  return llt_.matrixL() * z;
}

ForwardModel::ForwardModel(NoiseCovariance noise, Eigen::VectorXd data)
    : noise_(std::move(noise)), data_(std::move(data)) {
  if (data_.size() != noise_.size())
    throw std::invalid_argument("data length does not match noise covariance");
}

void ForwardModel::set_data(Eigen::VectorXd data) {
  if (data.size() != noise_.size())
    throw std::invalid_argument("data length does not match noise covariance");
  data_ = std::move(data);
}

Eigen::VectorXd
ForwardModel::weighted_residual(const Eigen::VectorXd &predicted) const {
  return noise_.solve(predicted - data_);
}

Evaluation ForwardModel::evaluate(const Coefficients &u,
                                  const EvalRequest &request) {
  if (u.size() != dim())
    throw std::invalid_argument("evaluate: coefficient length mismatch");
  if (!u.allFinite())
    throw std::invalid_argument("evaluate: non-finite coefficients");
  for (int j : request.block) {
    if (j < 0 || j >= dim())
      throw std::invalid_argument("evaluate: block index out of range");
  }

  Evaluation out;
  compute(u, request, out);

  const Eigen::VectorXd white = noise_.whiten(data_ - out.predicted);
  out.potential = 0.5 * white.squaredNorm();
  if (!std::isfinite(out.potential))
    throw SolverFailure("non-finite data misfit");
  if (request.gradient && !out.gradient.allFinite())
    throw SolverFailure("non-finite gradient");

  if (request.fisher) {
    const Eigen::MatrixXd wj = noise_.whiten(out.jacobian);
    Eigen::MatrixXd f = wj.transpose() * wj;
    out.fisher = 0.5 * (f + f.transpose());
    if (!out.fisher.allFinite())
      throw SolverFailure("non-finite Fisher block");
  }
  return out;
}

Eigen::VectorXd ForwardModel::forward_map(const Coefficients &u) {
  return evaluate(u, {}).predicted;
}

double ForwardModel::potential(const Coefficients &u) {
  return evaluate(u, {}).potential;
}

Coefficients ForwardModel::gradient(const Coefficients &u) {
  return evaluate(u, {.gradient = true}).gradient;
}

Eigen::MatrixXd ForwardModel::fisher_block(const Coefficients &u,
                                           std::span<const int> block) {
  return evaluate(u, {.block = block, .fisher = true}).fisher;
}

Eigen::MatrixXd ForwardModel::jacobian(const Coefficients &u,
                                       std::span<const int> block) {
  return evaluate(u, {.block = block, .fisher = false}).jacobian;
}

Eigen::VectorXd generate_data(ForwardModel &model, const Coefficients &truth,
                              double noise_std, ChainRng &rng) {
  if (!(noise_std >= 0.0))
    throw std::invalid_argument("generate_data: noise std must be >= 0");
  Eigen::VectorXd y = model.forward_map(truth);
  const Eigen::VectorXd z = rng.normals(y.size());
  if (noise_std > 0.0)
    y += noise_std * z;
  return y;
}

} // namespace infmcmc
