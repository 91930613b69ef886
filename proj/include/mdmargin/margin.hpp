#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mdmargin/loss.hpp"
#include "mdmargin/potential.hpp"

namespace mdmargin {

/// Max-margin solution over the psi unit ball. `direction` has unit
/// psi-norm; margin_value is measured in those units. margin_lp is the same
/// optimum stated for the lp unit ball (margin_value * p^(-1/beta)).
/// solver_gap upper-bounds the suboptimality via a dual feasible point.
struct MaxMarginResult {
  Vector direction;
  double margin_value = 0.0;
  double margin_lp = 0.0;
  double solver_gap = 0.0;
};

struct MaxMarginOptions {
  double tau_start = 1.0;
  double tau_end = 1e-6;
  double tau_factor = 0.5;
  int inner_iters = 500;
  double target_gap = 1e-6;
  std::uint64_t seed = 0xA11CEULL;
};

/// Smoothed max-min ascent: maximize -tau log sum exp(-y_i <x_i, w> / tau)
/// over the psi unit sphere, annealing tau geometrically. The certificate is
/// the dual norm of the softmax-weighted data combination, which always
/// upper-bounds the optimal margin. Throws infeasible_error when no positive
/// margin exists.
MaxMarginResult max_margin(const Dataset& data, const Potential& pot,
                           const MaxMarginOptions& opts = {});

/// Brute-force sweep over `resolution` angles, radially scaled to the psi
/// unit sphere. d == 2 only. Non-separable data is reported through a
/// non-positive margin_value rather than an error. solver_gap bounds the
/// discretization error from the largest consecutive chord.
MaxMarginResult grid_oracle_2d(const Dataset& data, const Potential& pot, long long resolution);

struct PathPoint {
  double budget = 0.0;
  Vector minimizer;
  double loss_at = 0.0;
  double fw_gap = 0.0;     // Frank-Wolfe duality gap at termination
  long long iterations = 0;
};

struct PathOptions {
  double gap_tol = 1e-8;
  long long max_iters = 100'000;
};

/// Constrained minimizers argmin {L(w) : ||w||_psi <= B} for each budget,
/// by Frank-Wolfe with exact line search. The linear minimization oracle
/// over the lp ball is closed form: v_j proportional to -sgn(g_j)|g_j|^(q-1).
std::vector<PathPoint> regularization_path(const Dataset& data, const Potential& pot,
                                           const LossSpec& spec,
                                           const std::vector<double>& budgets,
                                           const PathOptions& opts = {});

/// w / gamma(w); requires a positive margin.
Vector rescale_to_unit_margin(const Vector& w, const Dataset& data);

/// Rescale each classifier to unit margin and report its l_q norm for every
/// q in report_norms (q may be 1 or +infinity). Rows follow the input order.
Matrix classifier_norm_table(const std::vector<std::pair<double, Vector>>& classifiers,
                             const Dataset& data, const std::vector<double>& report_norms);

}  // namespace mdmargin
