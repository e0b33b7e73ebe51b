#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "infmcmc/errors.hpp"
#include "infmcmc/groundwater.hpp"
#include "infmcmc/linear_gaussian.hpp"
#include "infmcmc/prior.hpp"
#include "infmcmc/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <random>

namespace oracle {

using namespace infmcmc;

/// Linear-Gaussian problem of dimension n with m observations, prior
/// variances 1 / (j + 1)^{1.5}, design entries N(0, 1), noise variance
/// `noise_var`, data generated from a prior draw.
struct LinearProblem {
  std::shared_ptr<KLPrior> prior;
  std::unique_ptr<LinearGaussianModel> model;
  LinearGaussianModel::Posterior posterior;
};

inline LinearProblem linear_problem(int n = 10, int m = 10, double noise_var = 0.1,
                                    std::uint64_t seed = 5) {
  std::vector<double> eig(n);
  for (int j = 0; j < n; ++j)
    eig[j] = 1.0 / std::pow(j + 1.0, 1.5);
  LinearProblem p;
  p.prior = std::make_shared<KLPrior>(KLPrior::from_eigenvalues(eig));
  ChainRng rng(seed);
  Eigen::MatrixXd a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = rng.normal();
  p.model = std::make_unique<LinearGaussianModel>(
      a, NoiseCovariance::isotropic(m, noise_var), Eigen::VectorXd::Zero(m));
  const Coefficients truth = sample_prior(*p.prior, rng);
  p.model->set_data(generate_data(*p.model, truth, std::sqrt(noise_var), rng));
  p.posterior = p.model->posterior(*p.prior);
  return p;
}

/// Phi == 0: zero design and zero data.
inline std::unique_ptr<LinearGaussianModel> null_model(int n, int m = 3) {
  return std::make_unique<LinearGaussianModel>(Eigen::MatrixXd::Zero(m, n),
                                               NoiseCovariance::isotropic(m, 1.0),
                                               Eigen::VectorXd::Zero(m));
}

/// 2D groundwater problem with noiseless-mesh data from `data_mesh` and
/// inference on `mesh`.
struct GroundwaterProblem {
  std::shared_ptr<const KLPrior> prior;
  std::unique_ptr<GroundwaterModel> model;
  Coefficients truth;
};

inline GroundwaterProblem groundwater_problem(int mesh, int data_mesh = 40, int cap = 10,
                                              std::uint64_t data_seed = 2024) {
  GroundwaterProblem p;
  p.prior = std::make_shared<const KLPrior>(KLPrior::cosine_2d({0.0, 1.0, 1.1}, cap));
  const Stations st = circle_stations();
  const auto noise = NoiseCovariance::isotropic(33, 1e-4);
  GroundwaterModel gen(p.prior, Mesh{data_mesh, data_mesh}, st, noise,
                       Eigen::VectorXd::Zero(33));
  p.truth = groundwater_truth(*p.prior);
  ChainRng rng(data_seed);
  const Eigen::VectorXd y = generate_data(gen, p.truth, 1e-2, rng);
  p.model = std::make_unique<GroundwaterModel>(p.prior, Mesh{mesh, mesh}, st, noise, y);
  return p;
}

/// Dense solve of the constant-permeability five-point system, written out
/// cell by cell without the model's face list.
inline Eigen::VectorXd dense_unit_permeability(int nx, int ny) {
  const double hx = 1.0 / nx, hy = 1.0 / ny;
  const int n = nx * ny;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  auto id = [nx](int i, int j) { return j * nx + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = id(i, j);
      const double x = (i + 0.5) * hx;
      if (i > 0) {
        a(c, c) += hy / hx;
        a(c, id(i - 1, j)) -= hy / hx;
      }
      if (i < nx - 1) {
        a(c, c) += hy / hx;
        a(c, id(i + 1, j)) -= hy / hx;
      }
      if (j > 0) {
        a(c, c) += hx / hy;
        a(c, id(i, j - 1)) -= hx / hy;
      } else {
        a(c, c) += 2.0 * hx / hy;
        b[c] += 2.0 * hx / hy * x;
      }
      if (j < ny - 1) {
        a(c, c) += hx / hy;
        a(c, id(i, j + 1)) -= hx / hy;
      } else {
        a(c, c) += 2.0 * hx / hy;
        b[c] += 2.0 * hx / hy * (1.0 - x);
      }
    }
  }
  return a.partialPivLu().solve(b);
}

/// Central difference of Phi along `dir`.
inline double fd_directional(ForwardModel &model, const Coefficients &u,
                             const Coefficients &dir, double step = 1e-6) {
  return (model.potential(u + step * dir) - model.potential(u - step * dir)) /
         (2.0 * step);
}

/// Central-difference Jacobian column of G along `dir`.
inline Eigen::VectorXd fd_forward(ForwardModel &model, const Coefficients &u,
                                  const Coefficients &dir, double step = 1e-6) {
  return (model.forward_map(u + step * dir) - model.forward_map(u - step * dir)) /
         (2.0 * step);
}

/// Wraps a model and throws SolverFailure on a fixed fraction of calls.
class FlakyModel final : public ForwardModel {
public:
  FlakyModel(std::unique_ptr<ForwardModel> inner, double rate, std::uint64_t seed)
      : ForwardModel(inner->noise(), inner->data()), inner_(std::move(inner)),
        rate_(rate), engine_(seed) {}

  int dim() const override { return inner_->dim(); }
  long failures() const { return failures_; }

  std::unique_ptr<ForwardModel> clone() const override {
    return std::make_unique<FlakyModel>(inner_->clone(), rate_, engine_());
  }

protected:
  void compute(const Coefficients &u, const EvalRequest &request,
               Evaluation &out) override {
    if (std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < rate_) {
      ++failures_;
      throw SolverFailure("injected failure");
    }
    const SolveCounts before = inner_->counts();
    Evaluation ev = inner_->evaluate(u, request);
    out.predicted = ev.predicted;
    out.gradient = ev.gradient;
    out.jacobian = ev.jacobian;
    counts_ += inner_->counts() - before;
  }

private:
  std::unique_ptr<ForwardModel> inner_;
  double rate_;
  mutable std::mt19937_64 engine_;
  long failures_ = 0;
};

} // namespace oracle
