#include "infmcmc/samplers.hpp"
#include "infmcmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace infmcmc {

std::string_view to_string(Method m) {
  switch (m) {
  case Method::pcn:
    return "pcn";
  case Method::mala:
    return "mala";
  case Method::hmc:
    return "hmc";
  case Method::mmala:
    return "mmala";
  case Method::mhmc:
    return "mhmc";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::pcn, Method::mala, Method::hmc, Method::mmala,
                   Method::mhmc}) {
    if (to_string(m) == name)
      return m;
  }
  return std::nullopt;
}

bool uses_gradient(Method m) { return m != Method::pcn; }
bool uses_metric(Method m) { return m == Method::mmala || m == Method::mhmc; }
bool is_hamiltonian(Method m) { return m == Method::hmc || m == Method::mhmc; }

Needs needs_for(Method m) {
  if (uses_metric(m))
    return Needs::geometry;
  return uses_gradient(m) ? Needs::gradient : Needs::potential;
}

CrankNicolson rho_of_h(double h) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw std::invalid_argument("step size h must be positive");
  const double denom = 1.0 + h / 4.0;
  return {(1.0 - h / 4.0) / denom, std::sqrt(h) / denom, h > 4.0};
}

CrankNicolson from_rho(double rho) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("pCN rho must lie in [0, 1)");
  return {rho, std::sqrt(1.0 - rho * rho), false};
}

LeapfrogStep LeapfrogStep::uniform(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw std::invalid_argument("leapfrog step must be positive");
  return {eps, std::cos(eps), std::sin(eps)};
}

LeapfrogStep step_map(double h) {
  const CrankNicolson cn = rho_of_h(h);
  return {std::sqrt(h), cn.rho, cn.beta};
}

PointState evaluate_point(ForwardModel &model, const KLPrior &prior,
                          const Coefficients &u, Needs needs,
                          const BlockIndices &block) {
  PointState out;
  out.u = u;
  switch (needs) {
  case Needs::potential:
    out.potential = model.evaluate(u, {}).potential;
    break;
  case Needs::gradient: {
    Evaluation ev = model.evaluate(u, {.gradient = true});
    out.potential = ev.potential;
    out.gradient = std::move(ev.gradient);
    break;
  }
  case Needs::geometry: {
    Evaluation ev =
        model.evaluate(u, {.gradient = true, .block = block, .fisher = true});
    out.potential = ev.potential;
    out.gradient = std::move(ev.gradient);
    out.metric.emplace(prior, block, std::move(ev.fisher));
    out.natural = natural_gradient(*out.metric, u, out.gradient);
    break;
  }
  }
  return out;
}

namespace {

/// <a, C^{-1} b>.
double prior_inner(const KLPrior &prior, const Coefficients &a,
                   const Coefficients &b) {
  return (a.array() * b.array() / prior.eigenvalues().array()).sum();
}

/// <a, C b>.
double prior_dual_inner(const KLPrior &prior, const Coefficients &a,
                        const Coefficients &b) {
  return (a.array() * b.array() * prior.eigenvalues().array()).sum();
}

/// Fills the accept/reject part of a transition; `next` is empty when the
/// proposal could not be evaluated.
void settle(Transition &t, PointState &state, std::optional<PointState> &next,
            double log_ratio, double log_u) {
  if (!next || std::isnan(log_ratio)) {
    t.solver_failed = true;
    t.log_accept_ratio = -std::numeric_limits<double>::infinity();
    t.accept_prob = 0.0;
    t.accepted = false;
    return;
  }
  t.log_accept_ratio = log_ratio;
  t.accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  t.accepted = log_u < log_ratio;
  if (t.accepted)
    state = std::move(*next);
}

void check_state(const PointState &state, const KLPrior &prior, Needs needs) {
  if (state.u.size() != prior.dim())
    throw std::invalid_argument("sampler: state dimension mismatch");
  if (needs != Needs::potential && state.gradient.size() != prior.dim())
    throw std::invalid_argument("sampler: state lacks a cached gradient");
  if (needs == Needs::geometry && !state.metric)
    throw std::invalid_argument("sampler: state lacks a cached metric");
}

} // namespace

Transition pcn_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                    const CrankNicolson &cn, ChainRng &rng) {
  check_state(state, prior, Needs::potential);
  const SolveCounts before = model.counts();
  const Coefficients xi = prior.std_devs().cwiseProduct(rng.normals(prior.dim()));
  Transition t;
  t.proposed = cn.rho * state.u + cn.beta * xi;

  std::optional<PointState> next;
  try {
    next = evaluate_point(model, prior, t.proposed, Needs::potential);
  } catch (const SolverFailure &) {
  }
  const double log_u = std::log(rng.uniform());
  const double log_ratio = next ? state.potential - next->potential : 0.0;
  settle(t, state, next, log_ratio, log_u);
  t.solves = model.counts() - before;
  return t;
}

Transition mala_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                     double h, ChainRng &rng) {
  check_state(state, prior, Needs::gradient);
  const CrankNicolson cn = rho_of_h(h);
  const double root_h = std::sqrt(h);
  const SolveCounts before = model.counts();

  const Coefficients xi = prior.std_devs().cwiseProduct(rng.normals(prior.dim()));
  const Coefficients drift = prior.eigenvalues().cwiseProduct(state.gradient);
  const Coefficients v = xi - (root_h / 2.0) * drift;
  Transition t;
  t.proposed = cn.rho * state.u + cn.beta * v;

  std::optional<PointState> next;
  try {
    next = evaluate_point(model, prior, t.proposed, Needs::gradient);
  } catch (const SolverFailure &) {
  }
  const double log_u = std::log(rng.uniform());

  double log_ratio = 0.0;
  if (next) {
    // log kappa(a, b) without the normalising constant.
    auto log_kappa = [&](const PointState &a, const Coefficients &b) {
      const Coefficients w = (b - cn.rho * a.u) / cn.beta;
      return -a.potential -
             (h / 8.0) * prior_dual_inner(prior, a.gradient, a.gradient) -
             (root_h / 2.0) * a.gradient.dot(w);
    };
    log_ratio = log_kappa(*next, state.u) - log_kappa(state, next->u);
  }
  settle(t, state, next, log_ratio, log_u);
  t.solves = model.counts() - before;
  return t;
}

Phase hmc_leapfrog(const Phase &start, ForwardModel &model, const KLPrior &prior,
                   const LeapfrogStep &step) {
  const PointState &p = start.point;
  const double half = step.kick / 2.0;
  const Coefficients v_minus =
      start.velocity - half * prior.eigenvalues().cwiseProduct(p.gradient);
  const Coefficients u_new = step.cos_rot * p.u + step.sin_rot * v_minus;
  const Coefficients v_plus = -step.sin_rot * p.u + step.cos_rot * v_minus;

  Phase out;
  out.point = evaluate_point(model, prior, u_new, Needs::gradient);
  out.velocity =
      v_plus - half * prior.eigenvalues().cwiseProduct(out.point.gradient);
  return out;
}

Phase mhmc_leapfrog(const Phase &start, ForwardModel &model, const KLPrior &prior,
                    const LeapfrogStep &step, const BlockIndices &block) {
  const PointState &p = start.point;
  const double half = step.kick / 2.0;
  const Coefficients v_minus = start.velocity + half * p.natural.values;
  const Coefficients u_new = step.cos_rot * p.u + step.sin_rot * v_minus;
  const Coefficients v_plus = -step.sin_rot * p.u + step.cos_rot * v_minus;

  Phase out;
  out.point = evaluate_point(model, prior, u_new, Needs::geometry, block);
  out.velocity = v_plus + half * out.point.natural.values;
  return out;
}

Trajectory hmc_trajectory(const PointState &start, const Coefficients &velocity,
                          int steps, ForwardModel &model, const KLPrior &prior,
                          const LeapfrogStep &step) {
  if (steps < 1)
    throw std::invalid_argument("trajectory needs at least one step");
  Phase cur{start, velocity};
  double pair_sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    Phase next = hmc_leapfrog(cur, model, prior, step);
    pair_sum += cur.velocity.dot(cur.point.gradient) +
                next.velocity.dot(next.point.gradient);
    cur = std::move(next);
  }
  const double k = step.kick;
  Trajectory out;
  out.delta_h =
      cur.point.potential - start.potential -
      (k * k / 8.0) *
          (prior_dual_inner(prior, cur.point.gradient, cur.point.gradient) -
           prior_dual_inner(prior, start.gradient, start.gradient)) -
      (k / 2.0) * pair_sum;
  out.end = std::move(cur);
  return out;
}

Trajectory mhmc_trajectory(const PointState &start, const Coefficients &velocity,
                           int steps, ForwardModel &model, const KLPrior &prior,
                           const LeapfrogStep &step, const BlockIndices &block) {
  if (steps < 1)
    throw std::invalid_argument("trajectory needs at least one step");
  if (!start.metric)
    throw std::invalid_argument("trajectory start lacks a metric");
  Phase cur{start, velocity};
  double pair_sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    Phase next = mhmc_leapfrog(cur, model, prior, step, block);
    pair_sum += prior_inner(prior, cur.point.natural.values, cur.velocity) +
                prior_inner(prior, next.point.natural.values, next.velocity);
    cur = std::move(next);
  }
  const double k = step.kick;
  const SplitMetric &m0 = *start.metric;
  const SplitMetric &m1 = *cur.point.metric;
  const Coefficients &g0 = start.natural.values;
  const Coefficients &g1 = cur.point.natural.values;
  Trajectory out;
  out.delta_h = cur.point.potential - start.potential +
                0.5 * m1.excess_quadratic(cur.velocity) -
                0.5 * m0.excess_quadratic(velocity) - m1.half_logdet_ck() +
                m0.half_logdet_ck() -
                (k * k / 8.0) *
                    (prior_inner(prior, g1, g1) - prior_inner(prior, g0, g0)) +
                (k / 2.0) * pair_sum;
  out.end = std::move(cur);
  return out;
}

double hamiltonian_energy(const PointState &point, const Coefficients &velocity,
                          const KLPrior &prior) {
  double kinetic = 0.0;
  double logdet = 0.0;
  if (point.metric) {
    kinetic = point.metric->precision_inner(velocity, velocity);
    logdet = point.metric->half_logdet_ck();
  } else {
    kinetic = prior_inner(prior, velocity, velocity);
  }
  return point.potential + 0.5 * prior_inner(prior, point.u, point.u) +
         0.5 * kinetic - logdet;
}

Transition hmc_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                    const LeapfrogStep &step, int leapfrog_max, ChainRng &rng) {
  check_state(state, prior, Needs::gradient);
  if (leapfrog_max < 1)
    throw std::invalid_argument("hmc: leapfrog_max must be >= 1");
  const SolveCounts before = model.counts();
  const Coefficients v = prior.std_devs().cwiseProduct(rng.normals(prior.dim()));
  const int steps = rng.uniform_count(leapfrog_max);

  Transition t;
  t.leapfrog_steps = steps;
  std::optional<PointState> next;
  double log_ratio = 0.0;
  try {
    Trajectory traj = hmc_trajectory(state, v, steps, model, prior, step);
    log_ratio = -traj.delta_h;
    next = std::move(traj.end.point);
  } catch (const SolverFailure &) {
  }
  const double log_u = std::log(rng.uniform());
  t.proposed = next ? next->u : Coefficients();
  settle(t, state, next, log_ratio, log_u);
  t.solves = model.counts() - before;
  return t;
}

Transition mmala_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                      double h, const BlockIndices &block, ChainRng &rng) {
  check_state(state, prior, Needs::geometry);
  const CrankNicolson cn = rho_of_h(h);
  const double root_h = std::sqrt(h);
  const SolveCounts before = model.counts();

  const Coefficients xi = metric_sample(*state.metric, rng);
  const Coefficients v = xi + (root_h / 2.0) * state.natural.values;
  Transition t;
  t.proposed = cn.rho * state.u + cn.beta * v;

  std::optional<PointState> next;
  try {
    next = evaluate_point(model, prior, t.proposed, Needs::geometry, block);
  } catch (const SolverFailure &) {
  } catch (const MetricFailure &) {
  }
  const double log_u = std::log(rng.uniform());

  double log_ratio = 0.0;
  if (next) {
    const Coefficients w_fwd = (next->u - cn.rho * state.u) / cn.beta;
    const Coefficients w_bwd = (state.u - cn.rho * next->u) / cn.beta;
    const double fwd = -state.potential +
                       lambda_log(*state.metric, state.natural, w_fwd, h);
    const double bwd =
        -next->potential + lambda_log(*next->metric, next->natural, w_bwd, h);
    log_ratio = bwd - fwd;
  }
  settle(t, state, next, log_ratio, log_u);
  t.solves = model.counts() - before;
  return t;
}

Transition mhmc_step(PointState &state, ForwardModel &model, const KLPrior &prior,
                     const LeapfrogStep &step, int leapfrog_max,
                     const BlockIndices &block, ChainRng &rng) {
  check_state(state, prior, Needs::geometry);
  if (leapfrog_max < 1)
    throw std::invalid_argument("mhmc: leapfrog_max must be >= 1");
  const SolveCounts before = model.counts();
  const Coefficients v = metric_sample(*state.metric, rng);
  const int steps = rng.uniform_count(leapfrog_max);

  Transition t;
  t.leapfrog_steps = steps;
  std::optional<PointState> next;
  double log_ratio = 0.0;
  try {
    Trajectory traj =
        mhmc_trajectory(state, v, steps, model, prior, step, block);
    log_ratio = -traj.delta_h;
    next = std::move(traj.end.point);
  } catch (const SolverFailure &) {
  } catch (const MetricFailure &) {
  }
  const double log_u = std::log(rng.uniform());
  t.proposed = next ? next->u : Coefficients();
  settle(t, state, next, log_ratio, log_u);
  t.solves = model.counts() - before;
  return t;
}

double adapt_step(double step, double accept_prob, long t,
                  const AdaptSettings &settings) {
  if (!settings.enabled)
    return step;
  if (t < 1)
    throw std::invalid_argument("adapt_step: iteration index starts at 1");
  const double gain = std::pow(static_cast<double>(t), -settings.decay);
  const double next = std::exp(std::log(step) + gain * (accept_prob - settings.target));
  return std::clamp(next, settings.min_step, settings.max_step);
}

} // namespace infmcmc
