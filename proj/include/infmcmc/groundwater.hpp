#pragma once

#include "infmcmc/model.hpp"
#include "infmcmc/prior.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <array>
#include <memory>
#include <vector>

namespace infmcmc {

/// Uniform nx x ny cell grid on the unit square. Cell (i, j) has centre
/// ((i + 1/2) hx, (j + 1/2) hy) and linear index j * nx + i.
struct Mesh {
  int nx = 20;
  int ny = 20;

  double hx() const { return 1.0 / nx; }
  double hy() const { return 1.0 / ny; }
  int cells() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  std::array<double, 2> centre(int i, int j) const {
    return {(i + 0.5) * hx(), (j + 0.5) * hy()};
  }
  Lattice centres() const;

  friend bool operator==(const Mesh &, const Mesh &) = default;
};

/// Cell-centred hydraulic head.
struct PressureField {
  Mesh mesh;
  Eigen::VectorXd values;

  double at(int i, int j) const { return values[mesh.index(i, j)]; }
};

using Stations = std::vector<std::array<double, 2>>;

/// `count` points equally spaced in angle on a circle, the first at angle 0.
Stations circle_stations(int count = 33, std::array<double, 2> centre = {0.5, 0.5},
                         double radius = 0.25);

/// Reference log-permeability: (lambda_i^2)^{1/4} sin((i1 + 1/2)^2 + (i2 + 1/2)^2)
/// on the 0-based index pair of each mode (1-based i - 1/2 in the original
/// indexing). Requires a 2D cosine prior.
Coefficients groundwater_truth(const KLPrior &prior);

/// Steady Darcy flow  -div(e^u grad p) = 0  on [0,1]^2 with
/// p = x1 on x2 = 0, p = 1 - x1 on x2 = 1, and no flux through x1 in {0, 1}.
///
/// Five-point flux stencil, harmonic mean of e^u at interior faces, Dirichlet
/// values imposed at half-cell distance. The assembled matrix is a symmetric
/// M-matrix, so the adjoint system reuses the forward factorisation.
/// Observations are bilinear interpolants of the cell-centred head.
class GroundwaterModel final : public ForwardModel {
public:
  GroundwaterModel(std::shared_ptr<const KLPrior> prior, Mesh mesh,
                   Stations stations, NoiseCovariance noise,
                   Eigen::VectorXd data);

  int dim() const override { return prior_->dim(); }
  const Mesh &mesh() const noexcept { return mesh_; }
  const Stations &stations() const noexcept { return stations_; }
  const KLPrior &prior() const noexcept { return *prior_; }

  PressureField solve_forward(const Coefficients &u);
  Eigen::VectorXd observe(const PressureField &field) const;

  /// Assembled system A(u) p = b(u) with Dirichlet values eliminated.
  struct System {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
  };
  System assemble(const Coefficients &u) const;

  std::unique_ptr<ForwardModel> clone() const override;

protected:
  void compute(const Coefficients &u, const EvalRequest &request,
               Evaluation &out) override;

private:
  struct Face {
    int a;                 ///< cell on one side
    int b;                 ///< cell on the other side, -1 on a Dirichlet edge
    double factor;         ///< face length / centre distance
    double boundary_value; ///< prescribed head when b == -1
  };
  struct FaceState {
    double trans;   ///< transmissibility
    double d_log_a; ///< d trans / d log k_a
    double d_log_b; ///< d trans / d log k_b
  };

  GroundwaterModel(const GroundwaterModel &other);

  void build_faces();
  void build_observation();
  void face_states(const Eigen::VectorXd &log_k, std::vector<FaceState> &states) const;
  void fill_system(const std::vector<FaceState> &states,
                   Eigen::SparseMatrix<double> &matrix, Eigen::VectorXd &rhs) const;
  Eigen::VectorXd log_permeability(const Coefficients &u) const;
  Eigen::VectorXd factor_and_solve(const Coefficients &u);

  std::shared_ptr<const KLPrior> prior_;
  Mesh mesh_;
  Stations stations_;
  std::shared_ptr<const Eigen::MatrixXd> basis_; ///< cells x modes
  std::vector<Face> faces_;
  Eigen::SparseMatrix<double> observation_;      ///< m x cells

  // Per-evaluation scratch; the factorisation is kept for the adjoint and
  // tangent back-substitutions at the same point.
  Eigen::SparseMatrix<double> matrix_;
  Eigen::VectorXd rhs_;
  std::vector<FaceState> states_;
  std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> solver_;
};

} // namespace infmcmc
