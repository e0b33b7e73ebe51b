#include "infmcmc/chain.hpp"
#include "infmcmc/errors.hpp"

#include <chrono>
#include <cmath>

namespace infmcmc {

void SamplerConfig::validate(const KLPrior &prior) const {
  if (label.empty())
    throw ConfigError("name", "must not be empty");
  if (!(step > 0.0) || !std::isfinite(step))
    throw ConfigError("step", "must be a positive number");
  if (rho) {
    if (method != Method::pcn)
      throw ConfigError("rho", "only pcn takes rho");
    if (!(*rho >= 0.0 && *rho < 1.0))
      throw ConfigError("rho", "must lie in [0, 1)");
  }
  if (leapfrog_max < 1)
    throw ConfigError("leapfrog_max", "must be at least 1");
  if (block_size < 0 || block_size > prior.dim())
    throw ConfigError("block", "must lie in [0, prior dimension]");
  if (block_size > 0 && !uses_metric(method))
    throw ConfigError("block", "only mmala and mhmc use a metric block");
  if (burn_in < 0)
    throw ConfigError("burn_in", "must be non-negative");
  if (iterations <= burn_in)
    throw ConfigError("iterations", "must exceed burn_in");
  if (adapt.enabled) {
    if (!(adapt.target > 0.0 && adapt.target < 1.0))
      throw ConfigError("target_acceptance", "must lie in (0, 1)");
    if (!(adapt.min_step > 0.0 && adapt.min_step <= adapt.max_step))
      throw ConfigError("step_max", "need 0 < step_min <= step_max");
  }
  try {
    (void)prior.truncation_block(block_size);
  } catch (const std::invalid_argument &e) {
    throw ConfigError("block", e.what());
  }
}

Transition chain_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                      const SamplerConfig &config, double step,
                      const BlockIndices &block, ChainRng &rng) {
  switch (config.method) {
  case Method::pcn:
    return pcn_step(state, model, prior,
                    config.rho ? from_rho(*config.rho) : rho_of_h(step), rng);
  case Method::mala:
    return mala_step(state, model, prior, step, rng);
  case Method::hmc:
    return hmc_step(state, model, prior, LeapfrogStep::uniform(step),
                    config.leapfrog_max, rng);
  case Method::mmala:
    return mmala_step(state, model, prior, step, block, rng);
  case Method::mhmc:
    return mhmc_step(state, model, prior, LeapfrogStep::uniform(step),
                     config.leapfrog_max, block, rng);
  }
  throw std::logic_error("chain_step: unknown method");
}

ChainRecord run_chain(ForwardModel &model, const KLPrior &prior,
                      const SamplerConfig &config) {
  config.validate(prior);
  if (model.dim() != prior.dim())
    throw std::invalid_argument("run_chain: model and prior dimensions differ");

  ChainRng rng(config.seed);
  const BlockIndices block =
      uses_metric(config.method) ? prior.truncation_block(config.block_size)
                                 : BlockIndices{};
  model.reset_counts();

  const Coefficients start = config.init == InitKind::prior
                                 ? sample_prior(prior, rng)
                                 : Coefficients::Zero(prior.dim());
  PointState state =
      evaluate_point(model, prior, start, needs_for(config.method), block);

  const long kept = config.iterations - config.burn_in;
  ChainRecord rec;
  rec.label = config.label;
  rec.config = config;
  rec.samples.resize(kept, prior.dim());
  rec.misfit.reserve(kept);
  rec.accepted.reserve(kept);
  rec.accept_prob.reserve(kept);

  AdaptSettings adapt = config.adapt;
  if (config.rho)
    adapt.enabled = false;
  double step = config.step;

  using clock = std::chrono::steady_clock;
  clock::time_point timer_start = clock::now();
  for (long it = 0; it < config.iterations; ++it) {
    if (it == config.burn_in)
      timer_start = clock::now();
    const Transition t = chain_step(state, model, prior, config, step, block, rng);
    rec.leapfrog_total += t.leapfrog_steps;
    if (t.solver_failed)
      ++rec.solver_failures;
    if (it < config.burn_in) {
      step = adapt_step(step, t.accept_prob, it + 1, adapt);
      continue;
    }
    const long row = it - config.burn_in;
    rec.samples.row(row) = state.u.transpose();
    rec.misfit.push_back(state.potential);
    rec.accepted.push_back(t.accepted ? 1 : 0);
    rec.accept_prob.push_back(t.accept_prob);
  }
  rec.wall_seconds =
      std::chrono::duration<double>(clock::now() - timer_start).count();
  rec.solves = model.counts();
  rec.final_step = step;
  return rec;
}

} // namespace infmcmc
