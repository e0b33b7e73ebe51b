#pragma once

#include "infmcmc/model.hpp"
#include "infmcmc/prior.hpp"
#include "infmcmc/samplers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace infmcmc {

enum class InitKind { zero, prior };

/// One configured chain. `step` is h for pCN and the Langevin kernels and
/// the leapfrog step eps for the Hamiltonian ones. `iterations` counts the
/// burn-in.
struct SamplerConfig {
  Method method = Method::pcn;
  std::string label = "pcn";
  double step = 1.0;
  std::optional<double> rho; ///< pCN only; fixes the kernel, disables adaptation
  int leapfrog_max = 1;
  int block_size = 0;
  long iterations = 1000;
  long burn_in = 0;
  AdaptSettings adapt;
  std::uint64_t seed = 0;
  InitKind init = InitKind::zero;

  /// Throws ConfigError naming the bad field.
  void validate(const KLPrior &prior) const;
};

struct ChainRecord {
  std::string label;
  SamplerConfig config;
  Eigen::MatrixXd samples;          ///< T x n, post burn-in
  std::vector<double> misfit;       ///< Phi along the recorded chain
  std::vector<std::uint8_t> accepted;
  std::vector<double> accept_prob;
  double wall_seconds = 0.0;        ///< post burn-in only
  SolveCounts solves;               ///< whole run, including the start point
  long leapfrog_total = 0;          ///< whole run
  long solver_failures = 0;         ///< whole run
  double final_step = 0.0;

  long length() const noexcept { return static_cast<long>(misfit.size()); }
};

/// Run a chain to completion. The model's counters are reset first.
ChainRecord run_chain(ForwardModel &model, const KLPrior &prior,
                      const SamplerConfig &config);

/// Single step under `config` at a fixed step size; the building block of
/// run_chain, exposed for tests.
Transition chain_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                      const SamplerConfig &config, double step,
                      const BlockIndices &block, ChainRng &rng);

} // namespace infmcmc
