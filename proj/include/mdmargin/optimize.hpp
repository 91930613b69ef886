#pragma once

#include <cstdint>
#include <optional>

#include "mdmargin/loss.hpp"
#include "mdmargin/potential.hpp"
#include "mdmargin/trace.hpp"

namespace mdmargin {

enum class StepKind { fixed, normalized };
enum class MonotonicityPolicy { abort, halve };

struct RunConfig {
  Potential pot{2.0, 2.0};
  LossSpec spec{};
  StepKind step_kind = StepKind::fixed;
  double eta = 1e-3;       // fixed step, or base step eta0 when normalized
  double lambda = 1.0;     // normalized schedule scale in 1/sqrt(1 + lambda t)
  long long steps = 1000;
  std::uint64_t seed = 1;
  double w0_scale = 1.0;   // std-dev of the Gaussian init; 0 starts at the origin
  double loss_floor = 1e-5;  // normalization guard: divide by max(L, loss_floor)
  long long record_every = 100;
  MonotonicityPolicy monotonicity = MonotonicityPolicy::abort;
  long long warm_start_steps = 0;  // optional fixed-step prefix for normalized runs

  void validate() const;
};

/// Evolving state of one trajectory. mirror_state caches grad_psi(w) between
/// steps; the update rules work on it and materialize w once per step.
struct OptimizerRun {
  RunConfig config;
  Vector w;
  Vector mirror_state;
  long long t = 0;

  /// Gaussian w0 drawn from the config seed. Rejects the all-zero start when
  /// the mirror map is singular there (beta < p).
  static OptimizerRun init(const RunConfig& config, Eigen::Index dim);
  static OptimizerRun from_w0(const RunConfig& config, Vector w0);
};

/// Fixed-step mirror descent: mirror_state -= eta * grad L(w); w is pulled
/// back through the inverse mirror map. requires step_kind == fixed.
void md_step(OptimizerRun& run, const Dataset& data);

/// Coordinate-separable update for beta == p, operating on the mirror state
/// per coordinate with no norm computation. Rejected when beta != p.
void pgd_step(OptimizerRun& run, const Dataset& data);

/// Normalized step: effective multiplier eta0 / (sqrt(1 + lambda t) *
/// max(L(w), loss_floor)). lambda = 1 is the eta0/sqrt(t+1) schedule.
void nmd_step(OptimizerRun& run, const Dataset& data);

/// Step-size bound that keeps psi - eta L convex at the start (exponential /
/// logistic losses only). Exact 1/(C^2 L(w0)) in the Euclidean case;
/// otherwise a sampled spectral estimate, see the implementation notes.
double max_safe_eta(const Dataset& data, const Potential& pot, const LossSpec& spec,
                    const Vector& w0);

struct TrajectoryResult {
  Trace trace;
  Vector final_w;
};

/// Run a full trajectory, recording every record_every steps plus the start
/// and final states. Fixed-step runs enforce monotone loss per the
/// configured policy. Deterministic for a fixed config.
Trace run_trajectory(const RunConfig& config, const Dataset& data,
                     const std::optional<Vector>& target = std::nullopt);

/// Same as run_trajectory but keeps the final weight vector.
TrajectoryResult run_trajectory_full(const RunConfig& config, const Dataset& data,
                                     const std::optional<Vector>& target = std::nullopt);

}  // namespace mdmargin
