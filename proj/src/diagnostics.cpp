#include "mdmargin/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdmargin/margin.hpp"
#include "mdmargin/rng.hpp"

namespace mdmargin {

double bregman_gap(const Vector& w, const Vector& target, const Potential& pot) {
  const double nw = psi_norm(w, pot);
  if (nw == 0.0) {
    throw std::invalid_argument("bregman_gap: zero input vector");
  }
  if (std::abs(psi_norm(target, pot) - 1.0) > 1e-9) {
    throw std::invalid_argument("bregman_gap: target must have unit psi-norm");
  }
  return std::max(0.0, bregman(target, w / nw, pot));
}

namespace {

RateFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys,
                      long long t_min, long long t_max) {
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  fit.t_min = t_min;
  fit.t_max = t_max;
  return fit;
}

std::size_t tail_start(std::size_t size, double burn_in_fraction) {
  const auto start = static_cast<std::size_t>(burn_in_fraction * static_cast<double>(size));
  return std::min(start, size - 1);
}

}  // namespace

NormGrowthReport fit_norm_growth(const Trace& trace, StepKind mode, const Potential& pot,
                                 double gamma_hat, double data_c, double burn_in_fraction,
                                 double upper_margin) {
  if (trace.size() < 100) {
    throw std::invalid_argument("fit_norm_growth: trace too short (< 100 recorded rows)");
  }
  const std::size_t start = tail_start(trace.size(), burn_in_fraction);
  std::vector<double> xs, ys;
  for (std::size_t i = start; i < trace.size(); ++i) {
    const auto& row = trace[i];
    if (row.t < 1) continue;
    xs.push_back(mode == StepKind::fixed ? std::log(static_cast<double>(row.t))
                                         : std::sqrt(static_cast<double>(row.t)));
    ys.push_back(row.psi_norm_w);
  }
  if (xs.size() < 2) {
    throw std::invalid_argument("fit_norm_growth: not enough tail rows");
  }

  NormGrowthReport report;
  report.fit = least_squares(xs, ys, trace[start].t, trace.back().t);

  const auto& last = trace.back();
  const double big_t = static_cast<double>(last.t);
  const double denom = mode == StepKind::fixed ? std::log(big_t) : std::sqrt(big_t);
  report.final_norm = last.psi_norm_w;
  report.final_ratio = last.psi_norm_w / denom;
  report.upper_limit = (1.0 + upper_margin) * (pot.beta / (pot.beta - 1.0)) / gamma_hat;
  report.upper_ok = report.final_ratio <= report.upper_limit;

  // Lower bound applies to the fixed schedule (log t growth). Calibrate the
  // O(1) constant as the largest shortfall over the pre-burn-in window.
  const auto ideal = [&](double t) { return (std::log(t) - pot.beta * std::log(std::log(t))) / data_c; };
  double slack = 0.0;
  for (std::size_t i = 0; i < start; ++i) {
    if (trace[i].t < 3) continue;
    slack = std::max(slack, ideal(static_cast<double>(trace[i].t)) - trace[i].psi_norm_w);
  }
  report.slack = slack;
  if (mode == StepKind::fixed) {
    report.lower_bound = ideal(big_t) - slack;
    report.lower_ok = report.final_norm >= report.lower_bound;
  } else {
    report.lower_bound = -std::numeric_limits<double>::infinity();
    report.lower_ok = true;
  }
  return report;
}

RateFit fit_convergence_rate(const Trace& trace, StepKind mode, double burn_in_fraction) {
  if (trace.size() < 100) {
    throw std::invalid_argument("fit_convergence_rate: trace too short (< 100 recorded rows)");
  }
  const std::size_t start = tail_start(trace.size(), burn_in_fraction);
  std::vector<double> xs, ys;
  for (std::size_t i = start; i < trace.size(); ++i) {
    const auto& row = trace[i];
    if (!row.bregman_gap.has_value()) {
      throw std::invalid_argument("fit_convergence_rate: trace has no bregman_gap column");
    }
    if (row.t < 2) continue;
    const double t = static_cast<double>(row.t);
    xs.push_back(mode == StepKind::fixed ? std::log(std::log(t)) : std::log(t));
    ys.push_back(std::log(std::max(*row.bregman_gap, kTol.gap_clamp)));
  }
  if (xs.size() < 2) {
    throw std::invalid_argument("fit_convergence_rate: not enough tail rows");
  }
  return least_squares(xs, ys, trace[start].t, trace.back().t);
}

// ---------------------------------------------------------------------------
// Identity suite
// ---------------------------------------------------------------------------

namespace {

struct Checker {
  IdentityCheck check;
  void observe(double err) {
    check.max_error = std::max(check.max_error, err);
    ++check.trials;
  }
  IdentityCheck finish(double tol) {
    check.tolerance = tol;
    check.pass = check.max_error <= tol;
    return check;
  }
};

Potential random_potential(Pcg32& rng) {
  return Potential(rng.next_uniform(1.1, 10.0), rng.next_uniform(1.1, 10.0));
}

Vector random_vector(Pcg32& rng, Eigen::Index dim, double scale = 1.0) {
  Vector w(dim);
  for (Eigen::Index j = 0; j < dim; ++j) w[j] = scale * rng.next_gaussian();
  return w;
}

// Entries bounded away from zero, for derivative checks near coordinate
// hyperplanes where the Hessian degenerates.
Vector random_vector_offaxis(Pcg32& rng, Eigen::Index dim) {
  Vector w(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double g = rng.next_gaussian();
    const double mag = 0.15 + std::abs(g);
    w[j] = rng.next_u32() & 1u ? mag : -mag;
  }
  return w;
}

Eigen::Index random_dim(Pcg32& rng) { return 2 + static_cast<Eigen::Index>(rng.next_below(4)); }

// Small separable instance: points with a guaranteed positive margin along a
// hidden direction.
Dataset random_separable(Pcg32& rng, Eigen::Index dim, int n) {
  Vector u = random_vector(rng, dim);
  u /= u.norm();
  Matrix x(n, dim);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    Vector xi = random_vector(rng, dim);
    const double m = u.dot(xi);
    if (std::abs(m) < 0.2) xi += (m >= 0.0 ? 0.3 : -0.3) * u;
    x.row(i) = xi.transpose();
    y[i] = u.dot(xi) >= 0.0 ? 1.0 : -1.0;
  }
  return Dataset(std::move(x), std::move(y));
}

double rel_err(double got, double want) {
  return std::abs(got - want) / (1.0 + std::abs(want));
}

}  // namespace

bool IdentityReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

IdentityReport identity_suite(std::uint64_t seed, int trials) {
  IdentityReport report;
  Pcg32 rng(seed);

  // Euler identity: <grad psi(w), w> = beta psi(w).
  {
    Checker c{{"euler_identity"}};
    for (int t = 0; t < trials; ++t) {
      const Potential pot = random_potential(rng);
      const Vector w = random_vector(rng, random_dim(rng));
      const double lhs = grad_psi(w, pot).dot(w);
      const double rhs = pot.beta * psi_value(w, pot);
      c.observe(std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
    report.checks.push_back(c.finish(kTol.euler));
  }

  // Bregman homogeneity: D(cx, cy) = |c|^beta D(x, y).
  {
    Checker c{{"bregman_homogeneity"}};
    for (int t = 0; t < trials; ++t) {
      const Potential pot = random_potential(rng);
      const Eigen::Index dim = random_dim(rng);
      const Vector x = random_vector(rng, dim);
      const Vector y = random_vector(rng, dim);
      double scalar = rng.next_uniform(-5.0, 5.0);
      if (std::abs(scalar) < 1e-3) scalar = scalar < 0.0 ? -1e-3 : 1e-3;
      const double lhs = bregman(scalar * x, scalar * y, pot);
      const double rhs = std::pow(std::abs(scalar), pot.beta) * bregman(x, y, pot);
      c.observe(std::abs(lhs - rhs) / (std::abs(rhs) + 1e-12));
    }
    report.checks.push_back(c.finish(kTol.bregman_homogeneity));
  }

  // Parallel gradient: |<grad psi(w), v>| <= |<grad psi(w), w>| whenever
  // ||v||_psi = ||w||_psi.
  {
    Checker c{{"parallel_gradient"}};
    for (int t = 0; t < trials; ++t) {
      const Potential pot = random_potential(rng);
      const Eigen::Index dim = random_dim(rng);
      const Vector w = random_vector(rng, dim);
      Vector v = random_vector(rng, dim);
      v *= psi_norm(w, pot) / psi_norm(v, pot);
      const Vector g = grad_psi(w, pot);
      const double bound = std::abs(g.dot(w));
      c.observe(std::max(0.0, (std::abs(g.dot(v)) - bound) / (bound + 1e-300)));
    }
    report.checks.push_back(c.finish(kTol.parallel_gradient));
  }

  // Mirror-map round trip.
  {
    Checker c{{"mirror_roundtrip"}};
    for (int t = 0; t < trials; ++t) {
      const Potential pot = random_potential(rng);
      const Vector w = random_vector(rng, random_dim(rng));
      const Vector back = inv_grad_psi(grad_psi(w, pot), pot);
      c.observe((back - w).norm() / w.norm());
    }
    report.checks.push_back(c.finish(kTol.mirror_roundtrip));
  }

  // Norm axioms for the psi-norm: absolute homogeneity and triangle.
  {
    Checker c{{"norm_axioms"}};
    for (int t = 0; t < trials; ++t) {
      const Potential pot = random_potential(rng);
      const Eigen::Index dim = random_dim(rng);
      const Vector x = random_vector(rng, dim);
      const Vector y = random_vector(rng, dim);
      const double scalar = rng.next_uniform(-5.0, 5.0);
      const double homo = rel_err(psi_norm(scalar * x, pot), std::abs(scalar) * psi_norm(x, pot));
      const double tri = std::max(
          0.0, (psi_norm(x + y, pot) - psi_norm(x, pot) - psi_norm(y, pot)) /
                   (psi_norm(x, pot) + psi_norm(y, pot) + 1e-300));
      c.observe(std::max(homo, tri));
    }
    report.checks.push_back(c.finish(kTol.norm_axioms));
  }

  // Gradient vs central finite differences of psi, away from the axes.
  // Errors are measured relative to the gradient's scale: the difference
  // quotient's own rounding noise is eps * psi / h, which dwarfs individual
  // small coordinates when psi is large.
  {
    Checker c{{"gradient_fd"}};
    const double h = kTol.gradient_fd_step;
    for (int t = 0; t < trials; ++t) {
      const Potential pot = random_potential(rng);
      const Eigen::Index dim = random_dim(rng);
      const Vector w = random_vector_offaxis(rng, dim);
      const Vector g = grad_psi(w, pot);
      const double scale = 1.0 + g.cwiseAbs().maxCoeff();
      for (Eigen::Index j = 0; j < dim; ++j) {
        Vector wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        const double fd = (psi_value(wp, pot) - psi_value(wm, pot)) / (2.0 * h);
        c.observe(std::abs(fd - g[j]) / scale);
      }
    }
    report.checks.push_back(c.finish(kTol.gradient_fd));
  }

  // Hessian operator-norm scaling: ||H(w)|| = ||w||_2^(beta-2) ||H(w/||w||_2)||.
  {
    Checker c{{"hessian_scaling"}};
    const double h = kTol.hessian_fd_step;
    const int reps = std::max(50, trials / 10);
    const auto fd_hessian_norm = [&](const Vector& w, const Potential& pot) {
      const Eigen::Index d = w.size();
      Matrix hess(d, d);
      for (Eigen::Index j = 0; j < d; ++j) {
        Vector wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        hess.col(j) = (grad_psi(wp, pot) - grad_psi(wm, pot)) / (2.0 * h);
      }
      hess = 0.5 * (hess + hess.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Matrix> eig(hess, Eigen::EigenvaluesOnly);
      return eig.eigenvalues().cwiseAbs().maxCoeff();
    };
    for (int t = 0; t < reps; ++t) {
      const Potential pot = random_potential(rng);
      const Eigen::Index dim = random_dim(rng);
      Vector w = random_vector_offaxis(rng, dim);
      w *= rng.next_uniform(0.8, 3.0);
      const double lhs = fd_hessian_norm(w, pot);
      const double n2 = w.norm();
      const double rhs = std::pow(n2, pot.beta - 2.0) * fd_hessian_norm(w / n2, pot);
      c.observe(std::abs(lhs - rhs) / std::abs(rhs));
    }
    report.checks.push_back(c.finish(kTol.hessian_scaling));
  }

  // Mirror-descent step identity, both forms, on random instances.
  {
    Checker c1{{"md_identity_form1"}};
    Checker c2{{"md_identity_form2"}};
    const LossSpec spec{LossKind::exponential, Reduction::mean};
    for (int t = 0; t < trials; ++t) {
      const Potential pot = random_potential(rng);
      const Eigen::Index dim = random_dim(rng);
      const Dataset data = random_separable(rng, dim, 4);
      const Vector w = random_vector(rng, dim);
      const Vector wt = random_vector(rng, dim);
      const double c_bound = data_bound_C(data, pot);
      const double eta = 0.1 / (c_bound * c_bound * loss_value(wt, data, spec));

      const LossEval at_wt = loss_value_and_grad(wt, data, spec);
      const Vector wt1 = inv_grad_psi(grad_psi(wt, pot) - eta * at_wt.grad, pot);
      const double l_w = loss_value(w, data, spec);
      const double l_wt1 = loss_value(wt1, data, spec);

      // D_{psi - eta L}(wt1, wt)
      const double d_mix = (psi_value(wt1, pot) - eta * l_wt1) -
                           (psi_value(wt, pot) - eta * at_wt.value) -
                           (grad_psi(wt, pot) - eta * at_wt.grad).dot(wt1 - wt);
      const double d_l = l_w - at_wt.value - at_wt.grad.dot(w - wt);

      const double lhs = bregman(w, wt, pot);
      const double rhs1 = bregman(w, wt1, pot) + d_mix + eta * d_l - eta * l_w + eta * l_wt1;
      const double rhs2 = bregman(w, wt1, pot) + d_mix - eta * at_wt.grad.dot(w - wt) -
                          eta * at_wt.value + eta * l_wt1;
      c1.observe(rel_err(rhs1, lhs));
      c2.observe(rel_err(rhs2, lhs));
    }
    report.checks.push_back(c1.finish(kTol.lemma1_identity));
    report.checks.push_back(c2.finish(kTol.lemma1_identity));
  }

  // Coordinate-wise and mirror-form updates agree whenever beta == p.
  {
    Checker c{{"pgd_md_agreement"}};
    const LossSpec spec{LossKind::exponential, Reduction::mean};
    for (int t = 0; t < trials; ++t) {
      const Eigen::Index dim = random_dim(rng);
      const Dataset data = random_separable(rng, dim, 4);
      RunConfig config;
      config.pot = Potential::separable(rng.next_uniform(1.1, 10.0));
      config.spec = spec;
      config.eta = rng.next_uniform(1e-4, 1e-2);
      const Vector w0 = random_vector(rng, dim);
      OptimizerRun a = OptimizerRun::from_w0(config, w0);
      OptimizerRun b = OptimizerRun::from_w0(config, w0);
      md_step(a, data);
      pgd_step(b, data);
      c.observe((a.w - b.w).norm() / (1.0 + b.w.norm()));
    }
    report.checks.push_back(c.finish(kTol.pgd_md_agreement));
  }

  // Dual-norm sandwich for the exponential loss with sum reduction:
  // gamma_hat L(w) <= ||grad L(w)||_{psi,*} <= C L(w). The certified lower
  // bound uses the solver margin minus its gap.
  {
    Checker c{{"dual_norm_sandwich"}};
    const LossSpec spec{LossKind::exponential, Reduction::sum};
    const int n_datasets = 5;
    for (int ds = 0; ds < n_datasets; ++ds) {
      const Potential pot = random_potential(rng);
      const Eigen::Index dim = 2;
      const Dataset data = random_separable(rng, dim, 6);
      const MaxMarginResult mm = max_margin(data, pot);
      const double gamma_lo = mm.margin_value - mm.solver_gap;
      const double c_bound = data_bound_C(data, pot);
      for (int t = 0; t < trials / n_datasets; ++t) {
        const Vector w = random_vector(rng, dim, 2.0);
        const LossEval eval = loss_value_and_grad(w, data, spec);
        const double dn = dual_norm(eval.grad, pot);
        const double lower_violation =
            std::max(0.0, (gamma_lo * eval.value - dn) / (gamma_lo * eval.value + 1e-300));
        const double upper_violation =
            std::max(0.0, (dn - c_bound * eval.value) / (c_bound * eval.value + 1e-300));
        c.observe(std::max(lower_violation, upper_violation));
      }
    }
    report.checks.push_back(c.finish(kTol.dual_sandwich));
  }

  // Large-radius cross-term inequality:
  // <grad L(w), w> >= (1+alpha) ||w||_psi <grad L(w), u_hat> once the scaled
  // max-margin point takes over in loss.
  {
    Checker c{{"cross_term_inequality"}};
    const LossSpec spec{LossKind::exponential, Reduction::mean};
    const double alpha = 0.5;
    const int n_datasets = 5;
    for (int ds = 0; ds < n_datasets; ++ds) {
      const Potential pot = random_potential(rng);
      const Dataset data = random_separable(rng, 2, 6);
      const MaxMarginResult mm = max_margin(data, pot);
      for (int t = 0; t < trials / n_datasets; ++t) {
        Vector dir = random_vector(rng, 2);
        dir /= psi_norm(dir, pot);
        // Scan scales for the loss-comparison radius r_alpha, then test the
        // inequality at that scale and beyond.
        double scale = 1.0;
        bool beyond = false;
        for (int k = 0; k < 60; ++k) {
          const Vector w = scale * dir;
          const double nw = psi_norm(w, pot);
          if (std::abs(margin(w, data)) > 500.0 ||
              (1.0 + alpha) * nw * mm.margin_value > 500.0) {
            break;  // exp() range exhausted
          }
          if (!beyond) {
            beyond = loss_value((1.0 + alpha) * nw * mm.direction, data, spec) <=
                     loss_value(w, data, spec);
          }
          if (beyond) {
            const Vector g = loss_grad(w, data, spec);
            const double lhs = g.dot(w);
            const double rhs = (1.0 + alpha) * nw * g.dot(mm.direction);
            c.observe(std::max(0.0, (rhs - lhs) / (std::abs(lhs) + 1e-300)));
          }
          scale *= 1.6;
        }
      }
    }
    report.checks.push_back(c.finish(kTol.cross_term));
  }

  return report;
}

}  // namespace mdmargin
