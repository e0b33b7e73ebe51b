#pragma once

#include "infmcmc/prior.hpp"
#include "infmcmc/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <memory>
#include <span>

namespace infmcmc {

/// Linear solves performed by a model, by kind.
struct SolveCounts {
  long forward = 0;
  long adjoint = 0;
  long tangent = 0;

  long total() const noexcept { return forward + adjoint + tangent; }

  SolveCounts &operator+=(const SolveCounts &o) {
    forward += o.forward;
    adjoint += o.adjoint;
    tangent += o.tangent;
    return *this;
  }
  friend SolveCounts operator-(SolveCounts a, const SolveCounts &b) {
    a.forward -= b.forward;
    a.adjoint -= b.adjoint;
    a.tangent -= b.tangent;
    return a;
  }
  friend bool operator==(const SolveCounts &, const SolveCounts &) = default;
};

/// Symmetric positive-definite observation noise covariance.
class NoiseCovariance {
public:
  explicit NoiseCovariance(const Eigen::MatrixXd &sigma);
  static NoiseCovariance isotropic(int m, double variance);

  int size() const noexcept { return static_cast<int>(sigma_.rows()); }
  const Eigen::MatrixXd &matrix() const noexcept { return sigma_; }

  /// Sigma^{-1} r.
  Eigen::VectorXd solve(const Eigen::VectorXd &r) const { return llt_.solve(r); }
  /// L^{-1} X for Sigma = L L^T; whitened residuals and Jacobians.
  Eigen::MatrixXd whiten(const Eigen::MatrixXd &x) const;
  /// L z, a draw from N(0, Sigma) when z is standard normal.
  Eigen::VectorXd colour(const Eigen::VectorXd &z) const;

private:
  Eigen::MatrixXd sigma_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// What to compute at a point. The forward solve is shared.
struct EvalRequest {
  bool gradient = false;
  /// Modes whose Jacobian columns (and Fisher block) are required.
  std::span<const int> block = {};
  bool fisher = false;
};

/// Everything a model produced at one point.
struct Evaluation {
  double potential = 0.0;
  Eigen::VectorXd predicted;  ///< G(u)
  Coefficients gradient;      ///< D Phi(u), empty unless requested
  Eigen::MatrixXd jacobian;   ///< m x D0 columns dG/du_j on the block
  Eigen::MatrixXd fisher;     ///< J^T Sigma^{-1} J, symmetrised
};

/// Forward model contract: y = G(u) + eta, eta ~ N(0, Sigma), with the data
/// misfit Phi(u) = 1/2 |y - G(u)|^2_Sigma and derivatives in KL coordinates.
///
/// Evaluation mutates scratch state and solve counters, so an instance
/// belongs to one chain; use clone() for another chain.
class ForwardModel {
public:
  ForwardModel(NoiseCovariance noise, Eigen::VectorXd data);
  virtual ~ForwardModel() = default;

  virtual int dim() const = 0;
  int obs_count() const noexcept { return noise_.size(); }

  const NoiseCovariance &noise() const noexcept { return noise_; }
  const Eigen::VectorXd &data() const noexcept { return data_; }
  void set_data(Eigen::VectorXd data);

  /// Single entry point. Rejects non-finite u. Throws SolverFailure.
  Evaluation evaluate(const Coefficients &u, const EvalRequest &request);

  Eigen::VectorXd forward_map(const Coefficients &u);
  double potential(const Coefficients &u);
  Coefficients gradient(const Coefficients &u);
  /// J^T Sigma^{-1} J restricted to `block`, symmetric PSD.
  Eigen::MatrixXd fisher_block(const Coefficients &u, std::span<const int> block);
  /// m x |block| Jacobian of G.
  Eigen::MatrixXd jacobian(const Coefficients &u, std::span<const int> block);

  const SolveCounts &counts() const noexcept { return counts_; }
  void reset_counts() noexcept { counts_ = {}; }

  virtual std::unique_ptr<ForwardModel> clone() const = 0;

protected:
  /// Fill predicted, and gradient/jacobian when asked. The base class forms
  /// the potential and the Fisher block from them. Implementations bump
  /// counts_ for every linear solve they perform.
  virtual void compute(const Coefficients &u, const EvalRequest &request,
                       Evaluation &out) = 0;

  /// Sigma^{-1} (G(u) - y), the weighted residual driving the adjoint.
  Eigen::VectorXd weighted_residual(const Eigen::VectorXd &predicted) const;

  SolveCounts counts_;

private:
  NoiseCovariance noise_;
  Eigen::VectorXd data_;
};

/// y = G(u_true) + noise, noise ~ N(0, noise_std^2 I).
Eigen::VectorXd generate_data(ForwardModel &model, const Coefficients &truth,
                              double noise_std, ChainRng &rng);

} // namespace infmcmc
