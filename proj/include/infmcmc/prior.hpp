#pragma once

#include "infmcmc/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <span>
#include <variant>
#include <vector>

namespace infmcmc {

/// Karhunen-Loeve coordinates {u_j} of a function, one per retained mode.
using Coefficients = Eigen::VectorXd;

/// Index list of the modes that carry the dense (data-informed) block of a
/// split metric.
using BlockIndices = std::vector<int>;

/// Scale and smoothness of the covariance sigma^2 (alpha I - Laplacian)^{-s}.
struct Hyper {
  double alpha = 0.0;
  double sigma2 = 1.0;
  double s = 1.1;
};

/// Cosine eigenbasis on the rectangle [k1,k2] x [l1,l2], index pairs
/// (i1, i2) enumerated row-major with i1, i2 < cap.
struct Cosine2D {
  double k1 = 0.0, k2 = 1.0, l1 = 0.0, l2 = 1.0;
  int cap = 10;
  std::vector<std::array<int, 2>> indices;
};

/// Cosine eigenbasis on [-1, 1], indices 0 <= i < cap.
struct Cosine1D {
  int cap = 10;
};

/// Spectrum given directly, with no function-space realisation.
struct ExplicitSpectrum {};

using Basis = std::variant<Cosine2D, Cosine1D, ExplicitSpectrum>;

struct Spectrum2D {
  std::vector<double> eigenvalues;
  std::vector<std::array<int, 2>> indices;
};

/// lambda_i^2 = sigma2 {alpha + pi^2 ((i1+1/2)^2 + (i2+1/2)^2)}^{-s} for
/// 0 <= i1, i2 < cap, row-major. Requires s > 1, sigma2 > 0, alpha >= 0.
Spectrum2D spectrum_2d(double alpha, double sigma2, double s, int cap);

/// lambda_i^2 = 2^{[i=0]} sigma2 {alpha + (pi i)^2}^{-s} for 0 <= i < cap.
/// Requires s > 1/2, sigma2 > 0, alpha > 0.
std::vector<double> spectrum_1d(double alpha, double sigma2, double s, int cap);

/// Trace-class Gaussian prior N(0, C) in its eigenbasis. Immutable.
class KLPrior {
public:
  static KLPrior cosine_2d(const Hyper &hyper, int cap, double k1 = 0.0,
                           double k2 = 1.0, double l1 = 0.0, double l2 = 1.0);
  static KLPrior cosine_1d(const Hyper &hyper, int cap);
  static KLPrior from_eigenvalues(std::vector<double> eigenvalues);

  int dim() const noexcept { return static_cast<int>(eigenvalues_.size()); }

  /// Marginal variances lambda_j^2.
  const Eigen::VectorXd &eigenvalues() const noexcept { return eigenvalues_; }
  /// Marginal standard deviations lambda_j.
  const Eigen::VectorXd &std_devs() const noexcept { return std_devs_; }

  const Basis &basis() const noexcept { return basis_; }
  const Hyper &hyper() const noexcept { return hyper_; }

  /// The first `size` modes of the truncation. On a 2D cosine basis `size`
  /// must be 0, dim(), or a square k^2, which selects {i1 < k, i2 < k}.
  BlockIndices truncation_block(int size) const;

private:
  KLPrior(Eigen::VectorXd eigenvalues, Basis basis, Hyper hyper);

  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd std_devs_;
  Basis basis_;
  Hyper hyper_;
};

/// Independent draws u_j ~ N(0, lambda_j^2).
Coefficients sample_prior(const KLPrior &prior, ChainRng &rng);

/// Componentwise (lambda_j^2)^power u_j; power 1, -1, 1/2, -1/2 realise
/// C, C^{-1}, C^{1/2}, C^{-1/2}.
Coefficients apply_spectral(const KLPrior &prior, double power,
                            const Coefficients &u);

/// Tensor lattice of evaluation points. For a 1D basis `y` is empty.
struct Lattice {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return y.empty() ? x.size() : x.size() * y.size(); }
};

/// Basis function values at arbitrary points: row p holds phi_j(points[p]).
/// Points outside the basis domain are rejected.
Eigen::MatrixXd basis_matrix(const KLPrior &prior,
                             std::span<const std::array<double, 2>> points);

/// Basis function values on a lattice, row index iy * nx + ix.
Eigen::MatrixXd basis_matrix(const KLPrior &prior, const Lattice &grid);

/// sum_j u_j phi_j at each lattice point (row-major as in basis_matrix).
Eigen::VectorXd synthesize_field(const KLPrior &prior, const Coefficients &u,
                                 const Lattice &grid);

} // namespace infmcmc
