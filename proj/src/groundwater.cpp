#include "infmcmc/groundwater.hpp"
#include "infmcmc/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace infmcmc {

Lattice Mesh::centres() const {
  Lattice grid;
  for (int i = 0; i < nx; ++i)
    grid.x.push_back((i + 0.5) * hx());
  for (int j = 0; j < ny; ++j)
    grid.y.push_back((j + 0.5) * hy());
  return grid;
}

Stations circle_stations(int count, std::array<double, 2> centre, double radius) {
  if (count < 1 || !(radius > 0.0))
    throw std::invalid_argument("circle_stations: need count >= 1, radius > 0");
  Stations out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / count;
    out.push_back({centre[0] + radius * std::cos(angle),
                   centre[1] + radius * std::sin(angle)});
  }
  return out;
}

Coefficients groundwater_truth(const KLPrior &prior) {
  const auto *grid = std::get_if<Cosine2D>(&prior.basis());
  if (grid == nullptr)
    throw std::invalid_argument("groundwater_truth: needs a 2D cosine prior");
  Coefficients truth(prior.dim());
  for (int j = 0; j < prior.dim(); ++j) {
    const auto &idx = grid->indices[j];
    const double a = idx[0] + 0.5;
    const double b = idx[1] + 0.5;
    truth[j] = std::pow(prior.eigenvalues()[j], 0.25) * std::sin(a * a + b * b);
  }
  return truth;
}

GroundwaterModel::GroundwaterModel(std::shared_ptr<const KLPrior> prior,
                                   Mesh mesh, Stations stations,
                                   NoiseCovariance noise, Eigen::VectorXd data)
    : ForwardModel(std::move(noise), std::move(data)), prior_(std::move(prior)),
      mesh_(mesh), stations_(std::move(stations)) {
  if (!prior_)
    throw std::invalid_argument("groundwater: prior required");
  if (mesh_.nx < 2 || mesh_.ny < 2)
    throw std::invalid_argument("groundwater: mesh must be at least 2 x 2");
  if (static_cast<int>(stations_.size()) != obs_count())
    throw std::invalid_argument("groundwater: one noise entry per station");
  basis_ = std::make_shared<const Eigen::MatrixXd>(
      basis_matrix(*prior_, mesh_.centres()));
  build_faces();
  build_observation();
  matrix_ = assemble(Coefficients::Zero(dim())).matrix;
  solver_ = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
  solver_->analyzePattern(matrix_);
}

GroundwaterModel::GroundwaterModel(const GroundwaterModel &other)
    : ForwardModel(other), prior_(other.prior_), mesh_(other.mesh_),
      stations_(other.stations_), basis_(other.basis_), faces_(other.faces_),
      observation_(other.observation_), matrix_(other.matrix_) {
  counts_ = {};
  solver_ = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
  solver_->analyzePattern(matrix_);
}

std::unique_ptr<ForwardModel> GroundwaterModel::clone() const {
  return std::unique_ptr<ForwardModel>(new GroundwaterModel(*this));
}

void GroundwaterModel::build_faces() {
  const double hx = mesh_.hx(), hy = mesh_.hy();
  faces_.clear();
  for (int j = 0; j < mesh_.ny; ++j) {
    for (int i = 0; i < mesh_.nx; ++i) {
      const int c = mesh_.index(i, j);
      if (i + 1 < mesh_.nx)
        faces_.push_back({c, mesh_.index(i + 1, j), hy / hx, 0.0});
      if (j + 1 < mesh_.ny)
        faces_.push_back({c, mesh_.index(i, j + 1), hx / hy, 0.0});
      const double x = (i + 0.5) * hx;
      if (j == 0)
        faces_.push_back({c, -1, 2.0 * hx / hy, x});
      if (j == mesh_.ny - 1)
        faces_.push_back({c, -1, 2.0 * hx / hy, 1.0 - x});
    }
  }
}

void GroundwaterModel::build_observation() {
  std::vector<Eigen::Triplet<double>> entries;
  const double hx = mesh_.hx(), hy = mesh_.hy();
  for (std::size_t n = 0; n < stations_.size(); ++n) {
    const auto [x, y] = stations_[n];
    // Continuous index in the lattice of cell centres.
    const double sx = x / hx - 0.5;
    const double sy = y / hy - 0.5;
    if (!(sx >= 0.0 && sx <= mesh_.nx - 1 && sy >= 0.0 && sy <= mesh_.ny - 1))
      throw std::invalid_argument("groundwater: station outside the mesh");
    const int i0 = std::min(static_cast<int>(sx), mesh_.nx - 2);
    const int j0 = std::min(static_cast<int>(sy), mesh_.ny - 2);
    const double tx = sx - i0, ty = sy - j0;
    const int row = static_cast<int>(n);
    entries.emplace_back(row, mesh_.index(i0, j0), (1 - tx) * (1 - ty));
    entries.emplace_back(row, mesh_.index(i0 + 1, j0), tx * (1 - ty));
    entries.emplace_back(row, mesh_.index(i0, j0 + 1), (1 - tx) * ty);
    entries.emplace_back(row, mesh_.index(i0 + 1, j0 + 1), tx * ty);
  }
  observation_.resize(static_cast<Eigen::Index>(stations_.size()), mesh_.cells());
  observation_.setFromTriplets(entries.begin(), entries.end());
}

Eigen::VectorXd GroundwaterModel::log_permeability(const Coefficients &u) const {
  return (*basis_) * u;
}

void GroundwaterModel::face_states(const Eigen::VectorXd &log_k,
                                   std::vector<FaceState> &states) const {
  states.resize(faces_.size());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face &face = faces_[f];
    const double ka = std::exp(log_k[face.a]);
    if (face.b < 0) {
      const double t = face.factor * ka;
      states[f] = {t, t, 0.0};
      continue;
    }
    const double kb = std::exp(log_k[face.b]);
    const double sum = ka + kb;
    const double t = face.factor * 2.0 * ka * kb / sum;
    const double denom = sum * sum;
    states[f] = {t, face.factor * 2.0 * ka * kb * kb / denom,
                 face.factor * 2.0 * ka * ka * kb / denom};
  }
}

void GroundwaterModel::fill_system(const std::vector<FaceState> &states,
                                   Eigen::SparseMatrix<double> &matrix,
                                   Eigen::VectorXd &rhs) const {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(faces_.size() * 4);
  rhs = Eigen::VectorXd::Zero(mesh_.cells());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face &face = faces_[f];
    const double t = states[f].trans;
    entries.emplace_back(face.a, face.a, t);
    if (face.b < 0) {
      rhs[face.a] += t * face.boundary_value;
    } else {
      entries.emplace_back(face.b, face.b, t);
      entries.emplace_back(face.a, face.b, -t);
      entries.emplace_back(face.b, face.a, -t);
    }
  }
  matrix.resize(mesh_.cells(), mesh_.cells());
  matrix.setFromTriplets(entries.begin(), entries.end());
}

GroundwaterModel::System GroundwaterModel::assemble(const Coefficients &u) const {
  if (u.size() != dim())
    throw std::invalid_argument("groundwater: coefficient length mismatch");
  std::vector<FaceState> states;
  face_states(log_permeability(u), states);
  System sys;
  fill_system(states, sys.matrix, sys.rhs);
  return sys;
}

Eigen::VectorXd GroundwaterModel::factor_and_solve(const Coefficients &u) {
  const Eigen::VectorXd log_k = log_permeability(u);
  if (!log_k.allFinite() || log_k.cwiseAbs().maxCoeff() > 600.0)
    throw SolverFailure("groundwater: permeability out of floating-point range");
  face_states(log_k, states_);
  fill_system(states_, matrix_, rhs_);
  ++counts_.forward;
  solver_->factorize(matrix_);
  if (solver_->info() != Eigen::Success)
    throw SolverFailure("groundwater: stiffness factorisation failed");
  Eigen::VectorXd p = solver_->solve(rhs_);
  if (solver_->info() != Eigen::Success || !p.allFinite())
    throw SolverFailure("groundwater: forward solve failed");
  return p;
}

PressureField GroundwaterModel::solve_forward(const Coefficients &u) {
  if (u.size() != dim() || !u.allFinite())
    throw std::invalid_argument("groundwater: invalid coefficients");
  return {mesh_, factor_and_solve(u)};
}

Eigen::VectorXd GroundwaterModel::observe(const PressureField &field) const {
  if (!(field.mesh == mesh_) || field.values.size() != mesh_.cells())
    throw std::invalid_argument("groundwater: field is not on the model mesh");
  return observation_ * field.values;
}

void GroundwaterModel::compute(const Coefficients &u, const EvalRequest &request,
                               Evaluation &out) {
  const Eigen::VectorXd p = factor_and_solve(u);
  out.predicted = observation_ * p;

  if (request.gradient) {
    const Eigen::VectorXd source =
        observation_.transpose() * weighted_residual(out.predicted);
    const Eigen::VectorXd adj = solver_->solve(source);
    ++counts_.adjoint;
    if (!adj.allFinite())
      throw SolverFailure("groundwater: adjoint solve failed");
    // dPhi/dlog k_c = -adj^T dR/dlog k_c, R = A(u) p - b(u).
    Eigen::VectorXd d_log_k = Eigen::VectorXd::Zero(mesh_.cells());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      const Face &face = faces_[f];
      const FaceState &st = states_[f];
      if (face.b < 0) {
        d_log_k[face.a] -= adj[face.a] * (p[face.a] - face.boundary_value) * st.d_log_a;
      } else {
        const double s = (adj[face.a] - adj[face.b]) * (p[face.a] - p[face.b]);
        d_log_k[face.a] -= s * st.d_log_a;
        d_log_k[face.b] -= s * st.d_log_b;
      }
    }
    out.gradient = basis_->transpose() * d_log_k;
  }

  if (request.fisher || !request.block.empty()) {
    const auto cols = static_cast<Eigen::Index>(request.block.size());
    out.jacobian.resize(obs_count(), cols);
    Eigen::VectorXd d_res(mesh_.cells());
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto dir = basis_->col(request.block[k]);
      d_res.setZero();
      for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Face &face = faces_[f];
        const FaceState &st = states_[f];
        if (face.b < 0) {
          d_res[face.a] += st.d_log_a * dir[face.a] * (p[face.a] - face.boundary_value);
        } else {
          const double dt = st.d_log_a * dir[face.a] + st.d_log_b * dir[face.b];
          const double flux = dt * (p[face.a] - p[face.b]);
          d_res[face.a] += flux;
          d_res[face.b] -= flux;
        }
      }
      const Eigen::VectorXd dp = solver_->solve(-d_res);
      ++counts_.tangent;
      if (!dp.allFinite())
        throw SolverFailure("groundwater: tangent solve failed");
      out.jacobian.col(k) = observation_ * dp;
    }
  }
}

} // namespace infmcmc
