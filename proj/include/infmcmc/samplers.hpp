#pragma once

#include "infmcmc/geometry.hpp"
#include "infmcmc/model.hpp"
#include "infmcmc/prior.hpp"
#include "infmcmc/rng.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace infmcmc {

/// The five transition kernels. The split variants are mmala/mhmc with a
/// block smaller than the full dimension.
enum class Method { pcn, mala, hmc, mmala, mhmc };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);
bool uses_gradient(Method m);
bool uses_metric(Method m);
bool is_hamiltonian(Method m);

/// rho = (1 - h/4)/(1 + h/4) and beta = sqrt(1 - rho^2) = sqrt(h)/(1 + h/4).
struct CrankNicolson {
  double rho = 0.0;
  double beta = 1.0;
  bool negative_rho = false; ///< h > 4; valid kernel, outside the usual range
};

CrankNicolson rho_of_h(double h);
/// Parameters for pCN given rho in [0, 1) directly.
CrankNicolson from_rho(double rho);

/// A leapfrog step whose kicks use `kick` and whose rotation is by the
/// angle with the given cosine and sine.
struct LeapfrogStep {
  double kick = 0.0;
  double cos_rot = 1.0;
  double sin_rot = 0.0;

  /// Kick and rotation both equal to eps.
  static LeapfrogStep uniform(double eps);
};

/// The single-step mapping under which HMC-type proposals with one leapfrog
/// reproduce the Langevin-type proposal with step h: kick = sqrt(h),
/// cos = (1 - h/4)/(1 + h/4), sin = sqrt(h)/(1 + h/4).
LeapfrogStep step_map(double h);

/// Quantities cached at one position. `gradient` is empty for pCN; `metric`
/// and `natural` are filled only for the geometric kernels.
struct PointState {
  Coefficients u;
  double potential = 0.0;
  Coefficients gradient;
  std::optional<SplitMetric> metric;
  NaturalGradient natural;
};

enum class Needs { potential, gradient, geometry };

Needs needs_for(Method m);

/// Evaluate the model once at u and derive what `needs` asks for.
PointState evaluate_point(ForwardModel &model, const KLPrior &prior,
                          const Coefficients &u, Needs needs,
                          const BlockIndices &block = {});

struct Transition {
  Coefficients proposed;
  double log_accept_ratio = 0.0;
  double accept_prob = 0.0;
  bool accepted = false;
  bool solver_failed = false;
  int leapfrog_steps = 0;
  SolveCounts solves;
};

/// u' = rho u + beta xi, xi ~ N(0, C); log ratio Phi(u) - Phi(u').
Transition pcn_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                    const CrankNicolson &cn, ChainRng &rng);

/// u' = rho u + beta {xi - (sqrt(h)/2) C DPhi(u)} with the Girsanov-type
/// correction kappa(u', u) / kappa(u, u').
Transition mala_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                     double h, ChainRng &rng);

/// Position and velocity during a trajectory.
struct Phase {
  PointState point;
  Coefficients velocity;
};

/// v- = v - (k/2) C DPhi(u); rotate (u, v-); v = v+ - (k/2) C DPhi(u_new).
Phase hmc_leapfrog(const Phase &start, ForwardModel &model, const KLPrior &prior,
                   const LeapfrogStep &step);

/// Same with the natural gradient: v- = v + (k/2) g(u), ..., + (k/2) g(u_new).
Phase mhmc_leapfrog(const Phase &start, ForwardModel &model, const KLPrior &prior,
                    const LeapfrogStep &step, const BlockIndices &block);

struct Trajectory {
  Phase end;
  double delta_h = 0.0; ///< expanded-sum energy change
};

/// `steps` leapfrogs from (start, velocity) accumulating the energy change
/// from the per-step inner products; never by differencing an energy.
Trajectory hmc_trajectory(const PointState &start, const Coefficients &velocity,
                          int steps, ForwardModel &model, const KLPrior &prior,
                          const LeapfrogStep &step);
Trajectory mhmc_trajectory(const PointState &start, const Coefficients &velocity,
                           int steps, ForwardModel &model, const KLPrior &prior,
                           const LeapfrogStep &step, const BlockIndices &block);

/// H(u, v) = Phi(u) + 1/2 <u, C^{-1} u> + 1/2 <v, K(u)^{-1} v>
///           - log|C^{1/2} K(u)^{-1/2}|,  with K = C when no metric is cached.
/// Finite only in finite dimension; used to cross-check delta_h.
double hamiltonian_energy(const PointState &point, const Coefficients &velocity,
                          const KLPrior &prior);

/// v ~ N(0, C), I ~ U{1..L_max}, accept with 1 ^ exp(-dH).
Transition hmc_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                    const LeapfrogStep &step, int leapfrog_max, ChainRng &rng);

/// xi ~ N(0, K(u)), u' = rho u + beta {xi + (sqrt(h)/2) g(u)}; ratio from the
/// reference densities lambda(w; u) at both ends.
Transition mmala_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                      double h, const BlockIndices &block, ChainRng &rng);

/// v ~ N(0, K(u)), I ~ U{1..L_max} leapfrogs driven by g, accept with
/// 1 ^ exp(-dH).
Transition mhmc_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                     const LeapfrogStep &step, int leapfrog_max,
                     const BlockIndices &block, ChainRng &rng);

/// Robbins-Monro step adaptation during burn-in.
struct AdaptSettings {
  bool enabled = true;
  double target = 0.65;
  double min_step = 1e-8;
  double max_step = 4.0;
  double decay = 0.6;
};

/// log step += t^{-decay} (accept_prob - target), clamped to the bounds.
double adapt_step(double step, double accept_prob, long t,
                  const AdaptSettings &settings);

} // namespace infmcmc
