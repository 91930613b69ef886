#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdmargin/optimize.hpp"
#include "mdmargin/potential.hpp"
#include "mdmargin/trace.hpp"

namespace mdmargin {

/// Every tolerance used by the identity suite and the property tests, in one
/// place.
struct SuiteTolerances {
  double euler = 1e-10;
  double bregman_homogeneity = 1e-9;
  double parallel_gradient = 1e-10;
  double mirror_roundtrip = 1e-10;
  double norm_axioms = 1e-10;
  double gradient_fd = 1e-5;
  double gradient_fd_step = 1e-6;
  double hessian_scaling = 1e-4;
  double hessian_fd_step = 1e-5;
  double lemma1_identity = 1e-8;
  double dual_sandwich = 1e-9;
  double cross_term = 1e-9;
  double monotone_loss_slack = 1e-12;
  double pgd_md_agreement = 1e-12;
  double maxmargin_gap = 1e-6;
  double frank_wolfe_gap = 1e-8;
  double gap_clamp = 1e-300;
};

inline constexpr SuiteTolerances kTol{};

/// D_psi(target, w / ||w||_psi), clamped at zero. target must have unit
/// psi-norm; w must be nonzero.
double bregman_gap(const Vector& w, const Vector& target, const Potential& pot);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long long t_min = 0;
  long long t_max = 0;
};

struct NormGrowthReport {
  RateFit fit;
  double final_ratio = 0.0;   // ||w_T||_psi / log T  (or / sqrt(T))
  double upper_limit = 0.0;   // (1 + margin) * gamma_hat^{-1} beta/(beta-1)
  bool upper_ok = false;
  double final_norm = 0.0;
  double lower_bound = 0.0;   // (1/C)(log T - beta log log T) - slack
  double slack = 0.0;
  bool lower_ok = false;
};

/// Fit the psi-norm column against log t (fixed) or sqrt t (normalized) on
/// the trace tail, and evaluate the two-sided growth bounds. The lower-bound
/// slack is the largest early-window shortfall against the ideal curve,
/// standing in for its O(1) constant.
NormGrowthReport fit_norm_growth(const Trace& trace, StepKind mode, const Potential& pot,
                                 double gamma_hat, double data_c,
                                 double burn_in_fraction = 0.5,
                                 double upper_margin = 0.10);

/// Fit log(bregman_gap) against log log t (fixed) or log t (normalized) on
/// the trace tail. Gaps are clamped at kTol.gap_clamp before the log.
RateFit fit_convergence_rate(const Trace& trace, StepKind mode, double burn_in_fraction = 0.5);

struct IdentityCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int trials = 0;
  bool pass = false;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool all_pass() const;
};

/// Run every numerical identity and inequality from the potential/loss
/// modules on seeded random instances: the mirror-descent step identity
/// (both forms), the Euler identity, Bregman homogeneity, the
/// parallel-gradient inequality, mirror-map round trips, norm axioms,
/// finite-difference gradient and Hessian-scaling checks, the dual-norm
/// sandwich, and the large-radius cross-term inequality.
IdentityReport identity_suite(std::uint64_t seed, int trials = 1000);

}  // namespace mdmargin
