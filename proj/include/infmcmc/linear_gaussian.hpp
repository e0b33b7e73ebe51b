#pragma once

#include "infmcmc/model.hpp"

namespace infmcmc {

/// G(u) = A u. With a Gaussian prior the posterior is exactly Gaussian, which
/// makes this model the reference oracle for every sampler.
class LinearGaussianModel final : public ForwardModel {
public:
  LinearGaussianModel(Eigen::MatrixXd design, NoiseCovariance noise,
                      Eigen::VectorXd data);

  int dim() const override { return static_cast<int>(design_.cols()); }
  const Eigen::MatrixXd &design() const noexcept { return design_; }

  struct Posterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd precision; ///< C^{-1} + A^T Sigma^{-1} A
  };
  Posterior posterior(const KLPrior &prior) const;

  std::unique_ptr<ForwardModel> clone() const override {
    return std::make_unique<LinearGaussianModel>(*this);
  }

protected:
  void compute(const Coefficients &u, const EvalRequest &request,
               Evaluation &out) override;

private:
  Eigen::MatrixXd design_;
};

} // namespace infmcmc
