#include "infmcmc/errors.hpp"
#include "infmcmc/groundwater.hpp"
#include "infmcmc/linear_gaussian.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace infmcmc;

namespace {

LinearGaussianModel identity_model(int n) {
  return LinearGaussianModel(Eigen::MatrixXd::Identity(n, n),
                             NoiseCovariance::isotropic(n, 1.0), Eigen::VectorXd::Zero(n));
}

} // namespace

TEST(LinearModel, PotentialAndGradient) {
  auto m = identity_model(2);
  EXPECT_DOUBLE_EQ(m.potential(Coefficients{{3.0, 4.0}}), 12.5);
  EXPECT_EQ(m.gradient(Coefficients{{1.0, 2.0}}), (Coefficients{{1.0, 2.0}}));
  m.set_data(Eigen::VectorXd{{1.0, 2.0}});
  EXPECT_EQ(m.potential(Coefficients{{1.0, 2.0}}), 0.0);
  EXPECT_EQ(m.gradient(Coefficients{{1.0, 2.0}}), Coefficients::Zero(2));
}

TEST(LinearModel, FisherIsRestrictedGram) {
  auto p = oracle::linear_problem(6, 4, 0.5);
  const std::vector<int> block{1, 4};
  const Eigen::MatrixXd f = p.model->fisher_block(Coefficients::Zero(6), block);
  Eigen::MatrixXd a(4, 2);
  a << p.model->design().col(1), p.model->design().col(4);
  EXPECT_LT((f - a.transpose() * a / 0.5).cwiseAbs().maxCoeff(), 1e-12);
  ChainRng rng(1);
  const Eigen::MatrixXd g = p.model->fisher_block(rng.normals(6), block);
  EXPECT_LT((f - g).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LinearModel, SolveCounts) {
  auto p = oracle::linear_problem(5, 3);
  const Coefficients u = Coefficients::Zero(5);
  const std::vector<int> block{0, 1, 2};
  p.model->reset_counts();
  p.model->potential(u);
  EXPECT_EQ(p.model->counts(), (SolveCounts{1, 0, 0}));
  p.model->gradient(u);
  EXPECT_EQ(p.model->counts(), (SolveCounts{2, 1, 0}));
  p.model->fisher_block(u, block);
  EXPECT_EQ(p.model->counts(), (SolveCounts{3, 1, 3}));
}

TEST(Model, RejectsNonFinite) {
  auto m = identity_model(2);
  EXPECT_THROW(m.potential(Coefficients{{NAN, 0.0}}), std::invalid_argument);
  EXPECT_THROW(m.potential(Coefficients{{1.0}}), std::invalid_argument);
}

TEST(Model, GenerateDataNoise) {
  auto m = identity_model(4);
  const Coefficients truth{{0.1, -0.2, 0.3, 0.4}};
  ChainRng rng(9);
  EXPECT_EQ(generate_data(m, truth, 0.0, rng), truth);
  ChainRng a(5), b(5);
  EXPECT_EQ(generate_data(m, truth, 0.1, a), generate_data(m, truth, 0.1, b));

  const double sd = 0.01;
  double sum2 = 0.0;
  long count = 0;
  for (int r = 0; r < 10000; ++r) {
    const Eigen::VectorXd e = generate_data(m, truth, sd, rng) - truth;
    sum2 += e.squaredNorm();
    count += e.size();
  }
  EXPECT_NEAR(sum2 / count / (sd * sd), 1.0, 0.05);
}

class Groundwater : public ::testing::Test {
protected:
  std::shared_ptr<const KLPrior> prior =
      std::make_shared<const KLPrior>(KLPrior::cosine_2d({0.0, 1.0, 1.1}, 10));

  GroundwaterModel make(int mesh, Stations st = circle_stations()) {
    const int m = static_cast<int>(st.size());
    return GroundwaterModel(prior, Mesh{mesh, mesh}, std::move(st),
                            NoiseCovariance::isotropic(m, 1e-4), Eigen::VectorXd::Zero(m));
  }
};

TEST_F(Groundwater, UnitPermeabilityMatchesDenseStencil) {
  auto model = make(10);
  const PressureField p = model.solve_forward(Coefficients::Zero(100));
  const Eigen::VectorXd ref = oracle::dense_unit_permeability(10, 10);
  EXPECT_LT((p.values - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(Groundwater, MaximumPrinciple) {
  auto model = make(20);
  ChainRng rng(4);
  for (const Coefficients &u : {Coefficients(Coefficients::Zero(100)),
                                Coefficients(sample_prior(*prior, rng))}) {
    const PressureField p = model.solve_forward(u);
    EXPECT_GE(p.values.minCoeff(), 0.0);
    EXPECT_LE(p.values.maxCoeff(), 1.0);
  }
}

TEST_F(Groundwater, StiffnessSymmetricPositiveDefinite) {
  auto model = make(8);
  ChainRng rng(2);
  const auto sys = model.assemble(sample_prior(*prior, rng));
  const Eigen::MatrixXd a(sys.matrix);
  EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST_F(Groundwater, ObservationInterpolation) {
  auto model = make(20);
  PressureField f{model.mesh(), Eigen::VectorXd::Constant(400, 0.7)};
  EXPECT_LT((model.observe(f).array() - 0.7).abs().maxCoeff(), 1e-14);
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 20; ++i)
      f.values[model.mesh().index(i, j)] = model.mesh().centre(i, j)[0];
  const Eigen::VectorXd obs = model.observe(f);
  for (std::size_t n = 0; n < model.stations().size(); ++n)
    EXPECT_NEAR(obs[n], model.stations()[n][0], 1e-14);
  PressureField wrong{Mesh{10, 10}, Eigen::VectorXd::Zero(100)};
  EXPECT_THROW(model.observe(wrong), std::invalid_argument);
}

TEST_F(Groundwater, StationsNearNodeValues) {
  auto model = make(40);
  ChainRng rng(8);
  const PressureField p = model.solve_forward(sample_prior(*prior, rng));
  const Eigen::VectorXd obs = model.observe(p);
  ASSERT_EQ(obs.size(), 33);
  for (std::size_t n = 0; n < 33; ++n) {
    const auto [x, y] = model.stations()[n];
    const int i = std::clamp(static_cast<int>(x * 40), 0, 39);
    const int j = std::clamp(static_cast<int>(y * 40), 0, 39);
    EXPECT_NEAR(obs[n], p.at(i, j), 0.05);
  }
}

TEST_F(Groundwater, StationsOutsideHullRejected) {
  EXPECT_THROW(make(10, Stations{{0.01, 0.5}}), std::invalid_argument);
}

TEST_F(Groundwater, MeshRefinementConverges) {
  ChainRng rng(21);
  const Coefficients u = 0.5 * sample_prior(*prior, rng);
  auto m10 = make(10), m20 = make(20), m40 = make(40), m80 = make(80);
  const Eigen::VectorXd g80 = m80.forward_map(u);
  const double e10 = (m10.forward_map(u) - g80).cwiseAbs().maxCoeff();
  const double e20 = (m20.forward_map(u) - g80).cwiseAbs().maxCoeff();
  const double e40 = (m40.forward_map(u) - g80).cwiseAbs().maxCoeff();
  RecordProperty("err10", std::to_string(e10));
  RecordProperty("err20", std::to_string(e20));
  RecordProperty("err40", std::to_string(e40));
  EXPECT_LT(e20, e10);
  EXPECT_LT(e40, e20);
}

TEST_F(Groundwater, TruthGivesZeroMisfitOnDataMesh) {
  auto model = make(40);
  const Coefficients truth = groundwater_truth(*prior);
  ChainRng rng(1);
  model.set_data(generate_data(model, truth, 0.0, rng));
  EXPECT_EQ(model.potential(truth), 0.0);
}

TEST_F(Groundwater, TruthCoefficients) {
  const Coefficients t = groundwater_truth(*prior);
  // Mode (0, 0): (lambda^2)^{1/4} sin(1/2).
  EXPECT_NEAR(t[0], std::pow(prior->eigenvalues()[0], 0.25) * std::sin(0.5), 1e-15);
  // Mode (1, 2) sits at 12: sin(1.5^2 + 2.5^2).
  EXPECT_NEAR(t[12], std::pow(prior->eigenvalues()[12], 0.25) * std::sin(8.5), 1e-15);
}

TEST_F(Groundwater, AdjointGradientMatchesFiniteDifferences) {
  auto p = oracle::groundwater_problem(10);
  ChainRng rng(31);
  const Coefficients u = sample_prior(*p.prior, rng);
  const Coefficients g = p.model->gradient(u);
  for (int j = 0; j < 100; ++j) {
    const double fd = oracle::fd_directional(*p.model, u, Coefficients::Unit(100, j));
    EXPECT_LT(std::abs(g[j] - fd), 1e-5 * std::abs(fd)) << "mode " << j;
  }
}

TEST_F(Groundwater, AdjointRandomDirections) {
  auto p = oracle::groundwater_problem(12);
  ChainRng rng(32);
  for (int rep = 0; rep < 5; ++rep) {
    const Coefficients u = sample_prior(*p.prior, rng);
    const Coefficients v = rng.normals(100);
    const double fd = oracle::fd_directional(*p.model, u, v);
    EXPECT_LT(std::abs(p.model->gradient(u).dot(v) - fd), 1e-5 * std::abs(fd));
  }
}

TEST_F(Groundwater, JacobianMatchesFiniteDifferences) {
  auto p = oracle::groundwater_problem(10);
  ChainRng rng(33);
  const Coefficients u = sample_prior(*p.prior, rng);
  const std::vector<int> block{0, 1, 10, 11};
  const Eigen::MatrixXd jac = p.model->jacobian(u, block);
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd fd =
        oracle::fd_forward(*p.model, u, Coefficients::Unit(100, block[k]));
    EXPECT_LT((jac.col(k) - fd).norm(), 1e-5 * fd.norm()) << "column " << k;
  }
}

TEST_F(Groundwater, FisherPsdAndSolveCounts) {
  auto p = oracle::groundwater_problem(10);
  const BlockIndices block = p.prior->truncation_block(25);
  ChainRng rng(34);
  const Coefficients u = sample_prior(*p.prior, rng);
  p.model->reset_counts();
  const Eigen::MatrixXd f = p.model->fisher_block(u, block);
  EXPECT_EQ(p.model->counts(), (SolveCounts{1, 0, 25}));
  p.model->potential(u);
  EXPECT_EQ(p.model->counts(), (SolveCounts{2, 0, 25}));
  p.model->gradient(u);
  EXPECT_EQ(p.model->counts(), (SolveCounts{3, 1, 25}));
  EXPECT_EQ(f, f.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * f.trace());
}

TEST_F(Groundwater, GaussNewtonEqualsHessianAtZeroResidual) {
  auto p = oracle::groundwater_problem(10);
  ChainRng rng(35);
  const Coefficients u = 0.3 * sample_prior(*p.prior, rng);
  p.model->set_data(p.model->forward_map(u));
  const std::vector<int> block{0, 1, 10};
  const Eigen::MatrixXd f = p.model->fisher_block(u, block);
  const double step = 1e-5;
  for (int a = 0; a < 3; ++a) {
    const Coefficients ea = Coefficients::Unit(100, block[a]);
    const Eigen::VectorXd dg =
        (p.model->gradient(u + step * ea) - p.model->gradient(u - step * ea)) / (2 * step);
    for (int b = 0; b < 3; ++b)
      EXPECT_NEAR(dg[block[b]], f(b, a), 1e-4 * f.norm());
  }
}

TEST_F(Groundwater, CloneIsIndependent) {
  auto p = oracle::groundwater_problem(10);
  ChainRng rng(36);
  const Coefficients u = sample_prior(*p.prior, rng);
  const double phi = p.model->potential(u);
  auto copy = p.model->clone();
  EXPECT_EQ(copy->counts().total(), 0);
  EXPECT_EQ(copy->potential(u), phi);
  EXPECT_EQ(copy->counts().forward, 1);
}

TEST_F(Groundwater, ExtremeFieldFailsCleanly) {
  auto model = make(10);
  EXPECT_THROW(model.potential(Coefficients::Constant(100, 1e4)), SolverFailure);
}
