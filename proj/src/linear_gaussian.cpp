#include "infmcmc/linear_gaussian.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>

namespace infmcmc {

LinearGaussianModel::LinearGaussianModel(Eigen::MatrixXd design,
                                         NoiseCovariance noise,
                                         Eigen::VectorXd data)
    : ForwardModel(std::move(noise), std::move(data)),
      design_(std::move(design)) {
  if (design_.rows() != obs_count())
    throw std::invalid_argument("design rows must equal observation count");
  if (design_.cols() == 0)
    throw std::invalid_argument("design must have at least one column");
}

void LinearGaussianModel::compute(const Coefficients &u,
                                  const EvalRequest &request, Evaluation &out) {
  out.predicted = design_ * u;
  ++counts_.forward;
  if (request.gradient) {
    out.gradient = design_.transpose() * weighted_residual(out.predicted);
    ++counts_.adjoint;
  }
  if (request.fisher || !request.block.empty()) {
    out.jacobian.resize(design_.rows(),
                        static_cast<Eigen::Index>(request.block.size()));
    for (std::size_t k = 0; k < request.block.size(); ++k)
      out.jacobian.col(static_cast<Eigen::Index>(k)) =
          design_.col(request.block[k]);
    counts_.tangent += static_cast<long>(request.block.size());
  }
}

LinearGaussianModel::Posterior
LinearGaussianModel::posterior(const KLPrior &prior) const {
  if (prior.dim() != dim())
    throw std::invalid_argument("posterior: prior dimension mismatch");
  const Eigen::MatrixXd wa = noise().whiten(design_);
  Posterior post;
  post.precision = wa.transpose() * wa;
  post.precision.diagonal() += prior.eigenvalues().cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(post.precision);
  post.covariance =
      llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
  post.mean = llt.solve(design_.transpose() * noise().solve(data()));
  return post;
}

} // namespace infmcmc
