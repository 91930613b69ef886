#include "mdmargin/optimize.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>

#include "mdmargin/errors.hpp"
#include "mdmargin/rng.hpp"

namespace mdmargin {

void RunConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("RunConfig: eta must be finite and > 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("RunConfig: lambda must be finite and >= 0");
  }
  if (steps < 1) throw std::invalid_argument("RunConfig: steps must be >= 1");
  if (!(w0_scale >= 0.0)) throw std::invalid_argument("RunConfig: w0_scale must be >= 0");
  if (!(loss_floor > 0.0)) throw std::invalid_argument("RunConfig: loss_floor must be > 0");
  if (record_every < 1) throw std::invalid_argument("RunConfig: record_every must be >= 1");
  if (warm_start_steps < 0) {
    throw std::invalid_argument("RunConfig: warm_start_steps must be >= 0");
  }
}

OptimizerRun OptimizerRun::init(const RunConfig& config, Eigen::Index dim) {
  config.validate();
  Vector w0 = Vector::Zero(dim);
  if (config.w0_scale > 0.0) {
    Pcg32 rng(config.seed);
    for (Eigen::Index j = 0; j < dim; ++j) {
      w0[j] = config.w0_scale * rng.next_gaussian();
    }
  }
  return from_w0(config, std::move(w0));
}

OptimizerRun OptimizerRun::from_w0(const RunConfig& config, Vector w0) {
  config.validate();
  if (config.pot.beta < config.pot.p && w0.isZero(0.0)) {
    throw std::invalid_argument(
        "OptimizerRun: w0 = 0 is not a valid start when beta < p (singular mirror map)");
  }
  OptimizerRun run{config, std::move(w0), {}, 0};
  run.mirror_state = grad_psi(run.w, config.pot);
  return run;
}

namespace {

inline double signed_pow(double v, double e) {
  if (e == 1.0) return v;
  const double a = std::pow(std::abs(v), e);
  return v < 0.0 ? -a : a;
}

void check_grad(const Vector& g, long long t) {
  if (!g.allFinite()) {
    throw std::runtime_error("optimizer: non-finite loss gradient at step " + std::to_string(t));
  }
}

void check_state(const Vector& w, long long t) {
  if (!w.allFinite()) {
    throw std::runtime_error("optimizer: non-finite weight state at step " + std::to_string(t));
  }
}

// Coordinate inverse of the mirror map, valid only for beta == p.
void pull_back_separable(OptimizerRun& run) {
  const double e = 1.0 / (run.config.pot.p - 1.0);
  for (Eigen::Index j = 0; j < run.w.size(); ++j) {
    run.w[j] = signed_pow(run.mirror_state[j], e);
  }
}

// Production pull-back: coordinate path when separable, closed form else.
void pull_back(OptimizerRun& run) {
  if (run.config.pot.is_separable()) {
    pull_back_separable(run);
  } else {
    run.w = inv_grad_psi(run.mirror_state, run.config.pot);
  }
}

double normalized_multiplier(const RunConfig& config, long long t, double loss) {
  const double denom = std::sqrt(1.0 + config.lambda * static_cast<double>(t)) *
                       std::max(loss, config.loss_floor);
  return config.eta / denom;
}

}  // namespace

void md_step(OptimizerRun& run, const Dataset& data) {
  if (run.config.step_kind != StepKind::fixed) {
    throw std::invalid_argument("md_step: requires step_kind == fixed");
  }
  const LossEval eval = loss_value_and_grad(run.w, data, run.config.spec);
  check_grad(eval.grad, run.t);
  run.mirror_state.noalias() -= run.config.eta * eval.grad;
  run.w = inv_grad_psi(run.mirror_state, run.config.pot);
  check_state(run.w, run.t);
  ++run.t;
}

void pgd_step(OptimizerRun& run, const Dataset& data) {
  if (!run.config.pot.is_separable()) {
    throw std::invalid_argument("pgd_step: requires beta == p");
  }
  if (run.config.step_kind != StepKind::fixed) {
    throw std::invalid_argument("pgd_step: requires step_kind == fixed");
  }
  const LossEval eval = loss_value_and_grad(run.w, data, run.config.spec);
  check_grad(eval.grad, run.t);
  run.mirror_state.noalias() -= run.config.eta * eval.grad;
  pull_back_separable(run);
  check_state(run.w, run.t);
  ++run.t;
}

void nmd_step(OptimizerRun& run, const Dataset& data) {
  if (run.config.step_kind != StepKind::normalized) {
    throw std::invalid_argument("nmd_step: requires step_kind == normalized");
  }
  const LossEval eval = loss_value_and_grad(run.w, data, run.config.spec);
  check_grad(eval.grad, run.t);
  const double mult = normalized_multiplier(run.config, run.t, eval.value);
  run.mirror_state.noalias() -= mult * eval.grad;
  pull_back(run);
  check_state(run.w, run.t);
  ++run.t;
}

namespace {

// Smallest Hessian eigenvalue of psi over sampled unit-sphere points.
// The exact radial scaling law lets the caller move the estimate to any
// norm level: lambda_min(H(w)) = ||w||_2^(beta-2) lambda_min(H(w/||w||_2)).
double sphere_min_eigenvalue(const Potential& pot, Eigen::Index dim, int samples) {
  Pcg32 rng(0x5eedULL);
  double min_eig = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vector u(dim);
    for (Eigen::Index j = 0; j < dim; ++j) u[j] = rng.next_gaussian();
    u /= u.norm();
    double S = 0.0;
    Vector g(dim), diag(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double a = std::abs(u[j]);
      S += std::pow(a, pot.p);
      g[j] = signed_pow(u[j], pot.p - 1.0);
      diag[j] = std::pow(a, pot.p - 2.0);
    }
    const double c = (pot.beta / pot.p) * std::pow(S, pot.beta / pot.p - 2.0);
    Matrix h = (c * (pot.beta - pot.p)) * (g * g.transpose());
    h.diagonal().array() += (c * (pot.p - 1.0) * S) * diag.array();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  return std::max(min_eig, 0.0);
}

}  // namespace

double max_safe_eta(const Dataset& data, const Potential& pot, const LossSpec& spec,
                    const Vector& w0) {
  if (spec.kind != LossKind::exponential && spec.kind != LossKind::logistic) {
    throw std::invalid_argument("max_safe_eta: defined for exponential/logistic losses");
  }
  const double c = data_bound_C(data, pot);
  const double l0 = loss_value(w0, data, spec);
  const double base = c * c * l0;
  if (pot.p == 2.0 && pot.beta == 2.0) {
    return 1.0 / base;  // psi is exactly 1-strongly convex
  }
  if (pot.beta > 2.0) {
    // Strong-convexity bound of the augmented potential
    // psi' = (eps/2)||.||_2^2 + psi.
    constexpr double kAugmentEps = 1e-3;
    return kAugmentEps / base;
  }
  const double m = sphere_min_eigenvalue(pot, w0.size(), 64);
  if (pot.beta == 2.0) {
    return m / base;
  }
  // beta < 2: the Hessian floor decays like ||w||^(beta-2); allow the norm
  // to grow to 4x its starting level before the loss decay takes over.
  const double horizon = 4.0 * std::max(1.0, w0.norm());
  return m * std::pow(horizon, pot.beta - 2.0) / base;
}

namespace {

struct StepOutcome {
  LossEval eval;      // evaluation at the new state
  double multiplier;  // applied to grad L
};

}  // namespace

Trace run_trajectory(const RunConfig& config, const Dataset& data,
                     const std::optional<Vector>& target) {
  return run_trajectory_full(config, data, target).trace;
}

TrajectoryResult run_trajectory_full(const RunConfig& config, const Dataset& data,
                                     const std::optional<Vector>& target) {
  config.validate();
  if (target) {
    if (target->size() != data.dim()) {
      throw std::invalid_argument("run_trajectory: target dimension mismatch");
    }
    const double tn = psi_norm(*target, config.pot);
    if (std::abs(tn - 1.0) > 1e-9) {
      throw std::invalid_argument("run_trajectory: target must have unit psi-norm");
    }
  }

  OptimizerRun run = OptimizerRun::init(config, data.dim());
  LossEval eval = loss_value_and_grad(run.w, data, config.spec);

  // Optional warm start for normalized runs: fixed steps until the loss
  // meets the 1/(2n) small-loss hypothesis or the budget runs out. Happens
  // before t = 0 and is never recorded.
  if (config.step_kind == StepKind::normalized && config.warm_start_steps > 0) {
    const double threshold = 1.0 / (2.0 * static_cast<double>(data.n()));
    for (long long k = 0; k < config.warm_start_steps && eval.value > threshold; ++k) {
      check_grad(eval.grad, -1);
      run.mirror_state.noalias() -= config.eta * eval.grad;
      pull_back(run);
      check_state(run.w, -1);
      eval = loss_value_and_grad(run.w, data, config.spec);
    }
  }

  Trace trace;
  const auto multiplier_at = [&](long long t, double loss) {
    return config.step_kind == StepKind::fixed ? config.eta
                                               : normalized_multiplier(config, t, loss);
  };
  const auto record = [&]() {
    TraceRow row;
    row.t = run.t;
    row.loss = eval.value;
    row.psi_norm_w = psi_norm(run.w, config.pot);
    row.margin_w = eval.min_margin;
    row.eta_effective = multiplier_at(run.t, eval.value);
    if (target && row.psi_norm_w > 0.0) {
      const Vector dir = run.w / row.psi_norm_w;
      row.bregman_gap = std::max(0.0, bregman(*target, dir, config.pot));
    }
    trace.push_back(row);
  };

  record();  // t = 0

  Vector saved_mirror, saved_w;
  for (long long t = 0; t < config.steps; ++t) {
    check_grad(eval.grad, run.t);
    const double mult = multiplier_at(run.t, eval.value);
    const bool fixed = config.step_kind == StepKind::fixed;
    if (fixed) {
      saved_mirror = run.mirror_state;
      saved_w = run.w;
    }
    run.mirror_state.noalias() -= mult * eval.grad;
    pull_back(run);
    check_state(run.w, run.t);
    LossEval next = loss_value_and_grad(run.w, data, config.spec);

    if (fixed && next.value > eval.value + 1e-12) {
      if (config.monotonicity == MonotonicityPolicy::halve) {
        // Retry this one step with repeatedly halved eta until the loss is
        // monotone again; the mirror flow decreases the loss, so a small
        // enough step always exists. Subsequent steps use the full eta.
        std::cerr << "run_trajectory: loss increased at step " << run.t
                  << ", retrying with halved eta\n";
        double retry = 0.5 * mult;
        for (int halvings = 0; halvings < 60 && next.value > eval.value + 1e-12;
             ++halvings, retry *= 0.5) {
          run.mirror_state = saved_mirror;
          run.mirror_state.noalias() -= retry * eval.grad;
          pull_back(run);
          check_state(run.w, run.t);
          next = loss_value_and_grad(run.w, data, config.spec);
        }
      }
      if (next.value > eval.value + 1e-12) {
        throw monotonicity_error("run_trajectory: loss increased from " +
                                 std::to_string(eval.value) + " to " + std::to_string(next.value) +
                                 " at step " + std::to_string(run.t) +
                                 "; eta exceeds the safe range");
      }
    }

    eval = next;
    ++run.t;
    if (run.t % config.record_every == 0 || run.t == config.steps) {
      record();
    }
  }
  return TrajectoryResult{std::move(trace), std::move(run.w)};
}

}  // namespace mdmargin
