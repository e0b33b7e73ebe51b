#include "infmcmc/prior.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace infmcmc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_common(double sigma2, int cap) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("prior: sigma2 must be positive");
  if (cap < 1)
    throw std::invalid_argument("prior: cap must be at least 1");
}

} // namespace

Spectrum2D spectrum_2d(double alpha, double sigma2, double s, int cap) {
  check_common(sigma2, cap);
  if (!(s > 1.0))
    throw std::invalid_argument(
        "prior: 2D covariance is trace-class only for s > 1");
  if (!(alpha >= 0.0))
    throw std::invalid_argument("prior: alpha must be non-negative");

  Spectrum2D out;
  out.eigenvalues.reserve(static_cast<std::size_t>(cap) * cap);
  out.indices.reserve(static_cast<std::size_t>(cap) * cap);
  for (int i1 = 0; i1 < cap; ++i1) {
    for (int i2 = 0; i2 < cap; ++i2) {
      const double a = i1 + 0.5;
      const double b = i2 + 0.5;
      out.eigenvalues.push_back(sigma2 *
                                std::pow(alpha + kPi * kPi * (a * a + b * b), -s));
      out.indices.push_back({i1, i2});
    }
  }
  return out;
}

std::vector<double> spectrum_1d(double alpha, double sigma2, double s, int cap) {
  check_common(sigma2, cap);
  if (!(s > 0.5))
    throw std::invalid_argument(
        "prior: 1D covariance is trace-class only for s > 1/2");
  if (!(alpha > 0.0))
    throw std::invalid_argument(
        "prior: 1D spectrum includes index 0, which needs alpha > 0");

  std::vector<double> out;
  out.reserve(cap);
  for (int i = 0; i < cap; ++i) {
    const double base = alpha + (kPi * i) * (kPi * i);
    out.push_back((i == 0 ? 2.0 : 1.0) * sigma2 * std::pow(base, -s));
  }
  return out;
}

KLPrior::KLPrior(Eigen::VectorXd eigenvalues, Basis basis, Hyper hyper)
    : eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)),
      hyper_(hyper) {
  if (eigenvalues_.size() == 0)
    throw std::invalid_argument("prior: no modes retained");
  for (Eigen::Index j = 0; j < eigenvalues_.size(); ++j) {
    if (!(eigenvalues_[j] > 0.0) || !std::isfinite(eigenvalues_[j]))
      throw std::invalid_argument("prior: eigenvalue " + std::to_string(j) +
                                  " is not positive and finite");
  }
  std_devs_ = eigenvalues_.array().sqrt();
}

KLPrior KLPrior::cosine_2d(const Hyper &hyper, int cap, double k1, double k2,
                           double l1, double l2) {
  if (!(k2 > k1) || !(l2 > l1))
    throw std::invalid_argument("prior: empty rectangle");
  auto spec = spectrum_2d(hyper.alpha, hyper.sigma2, hyper.s, cap);
  Cosine2D basis{k1, k2, l1, l2, cap, std::move(spec.indices)};
  return KLPrior(Eigen::Map<const Eigen::VectorXd>(
                     spec.eigenvalues.data(),
                     static_cast<Eigen::Index>(spec.eigenvalues.size())),
                 std::move(basis), hyper);
}

KLPrior KLPrior::cosine_1d(const Hyper &hyper, int cap) {
  auto values = spectrum_1d(hyper.alpha, hyper.sigma2, hyper.s, cap);
  return KLPrior(Eigen::Map<const Eigen::VectorXd>(
                     values.data(), static_cast<Eigen::Index>(values.size())),
                 Cosine1D{cap}, hyper);
}

KLPrior KLPrior::from_eigenvalues(std::vector<double> eigenvalues) {
  return KLPrior(Eigen::Map<const Eigen::VectorXd>(
                     eigenvalues.data(),
                     static_cast<Eigen::Index>(eigenvalues.size())),
                 ExplicitSpectrum{}, Hyper{});
}

BlockIndices KLPrior::truncation_block(int size) const {
  if (size < 0 || size > dim())
    throw std::invalid_argument("prior: block size " + std::to_string(size) +
                                " outside [0, " + std::to_string(dim()) + "]");
  BlockIndices block;
  if (size == 0)
    return block;
  const auto *grid = std::get_if<Cosine2D>(&basis_);
  if (grid == nullptr || size == dim()) {
    for (int j = 0; j < size; ++j)
      block.push_back(j);
    return block;
  }
  // Square truncation {i1 < k, i2 < k}; membership is decided on the index
  // pair, not on position in the enumeration.
  const int k = static_cast<int>(std::lround(std::sqrt(double(size))));
  if (k * k != size || k > grid->cap)
    throw std::invalid_argument(
        "prior: 2D block size must be 0, dim, or a square k^2 with k <= cap");
  for (int j = 0; j < dim(); ++j) {
    const auto &idx = grid->indices[j];
    if (idx[0] < k && idx[1] < k)
      block.push_back(j);
  }
  return block;
}

Coefficients sample_prior(const KLPrior &prior, ChainRng &rng) {
  return prior.std_devs().cwiseProduct(rng.normals(prior.dim()));
}

Coefficients apply_spectral(const KLPrior &prior, double power,
                            const Coefficients &u) {
  if (u.size() != prior.dim())
    throw std::invalid_argument("apply_spectral: dimension mismatch");
  if (power == 1.0)
    return prior.eigenvalues().cwiseProduct(u);
  if (power == -1.0)
    return u.cwiseQuotient(prior.eigenvalues());
  if (power == 0.5)
    return prior.std_devs().cwiseProduct(u);
  if (power == -0.5)
    return u.cwiseQuotient(prior.std_devs());
  return prior.eigenvalues().array().pow(power).matrix().cwiseProduct(u);
}

namespace {

struct BasisEvaluator {
  std::span<const std::array<double, 2>> points;
  int dim;

  Eigen::MatrixXd operator()(const Cosine2D &b) const {
    const double area = (b.k2 - b.k1) * (b.l2 - b.l1);
    const double scale = 2.0 / std::sqrt(area);
    Eigen::MatrixXd out(points.size(), dim);
    std::vector<double> cx(b.cap), cy(b.cap);
    for (std::size_t p = 0; p < points.size(); ++p) {
      const auto [x, y] = points[p];
      if (x < b.k1 || x > b.k2 || y < b.l1 || y > b.l2)
        throw std::invalid_argument("synthesize_field: point outside domain");
      const double t1 = (x - b.k1) / (b.k2 - b.k1);
      const double t2 = (y - b.l1) / (b.l2 - b.l1);
      for (int i = 0; i < b.cap; ++i) {
        cx[i] = std::cos(kPi * (i + 0.5) * t1);
        cy[i] = std::cos(kPi * (i + 0.5) * t2);
      }
      for (int j = 0; j < dim; ++j) {
        const auto &idx = b.indices[j];
        out(p, j) = scale * cx[idx[0]] * cy[idx[1]];
      }
    }
    return out;
  }

  Eigen::MatrixXd operator()(const Cosine1D &) const {
    Eigen::MatrixXd out(points.size(), dim);
    for (std::size_t p = 0; p < points.size(); ++p) {
      const double x = points[p][0];
      if (x < -1.0 || x > 1.0)
        throw std::invalid_argument("synthesize_field: point outside domain");
      out(p, 0) = 1.0 / std::sqrt(2.0);
      for (int i = 1; i < dim; ++i)
        out(p, i) = std::cos(kPi * i * x);
    }
    return out;
  }

  Eigen::MatrixXd operator()(const ExplicitSpectrum &) const {
    throw std::invalid_argument(
        "synthesize_field: explicit spectrum has no basis functions");
  }
};

} // namespace

Eigen::MatrixXd basis_matrix(const KLPrior &prior,
                             std::span<const std::array<double, 2>> points) {
  return std::visit(BasisEvaluator{points, prior.dim()}, prior.basis());
}

Eigen::MatrixXd basis_matrix(const KLPrior &prior, const Lattice &grid) {
  std::vector<std::array<double, 2>> points;
  points.reserve(grid.size());
  if (grid.y.empty()) {
    for (double x : grid.x)
      points.push_back({x, 0.0});
  } else {
    for (double y : grid.y)
      for (double x : grid.x)
        points.push_back({x, y});
  }
  return basis_matrix(prior, points);
}

Eigen::VectorXd synthesize_field(const KLPrior &prior, const Coefficients &u,
                                 const Lattice &grid) {
  if (u.size() != prior.dim())
    throw std::invalid_argument("synthesize_field: dimension mismatch");
  return basis_matrix(prior, grid) * u;
}

} // namespace infmcmc
