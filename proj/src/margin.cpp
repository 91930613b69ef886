#include "mdmargin/margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mdmargin/errors.hpp"
#include "mdmargin/rng.hpp"

namespace mdmargin {

namespace {

double max_row_norm2(const Matrix& rows) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    m = std::max(m, rows.row(i).norm());
  }
  return m;
}

}  // namespace

namespace {

// Holder aligner: the psi-sphere point maximizing <v, w>, i.e. the w where
// <v, w> = ||v||_{psi,*}. Closed form through the lq -> lp conjugate map.
Vector holder_align(const Vector& v, const Potential& pot) {
  const double q = pot.conjugate();
  const double mv = v.cwiseAbs().maxCoeff();
  Vector u(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double t = std::pow(std::abs(v[j]) / mv, q - 1.0);
    u[j] = v[j] < 0.0 ? -t : t;
  }
  return u / psi_norm(u, pot);
}

// phi(mu) = ||A^T mu||_{psi,*} and its gradient over the simplex weights.
struct DualEval {
  double value = 0.0;
  Vector grad;
};

DualEval dual_eval(const Matrix& a, const Vector& mu, const Potential& pot) {
  const Vector v = a.transpose() * mu;
  DualEval out;
  out.value = dual_norm(v, pot);
  const double q = pot.conjugate();
  const double scale = std::pow(pot.p, 1.0 / pot.beta);
  Vector dv(v.size());
  if (out.value == 0.0) {
    out.grad = Vector::Zero(mu.size());
    return out;
  }
  const double nq = lp_norm(v, q);
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double t = std::pow(std::abs(v[j]) / nq, q - 1.0);
    dv[j] = scale * (v[j] < 0.0 ? -t : t);
  }
  out.grad = a * dv;
  return out;
}

// Away-step Frank-Wolfe for min phi(mu) over the simplex. The dual optimum
// sits on a low-dimensional face, where plain FW zig-zags; away steps keep
// the convergence linear.
void refine_dual(const Matrix& a, const Potential& pot, Vector& mu, int iters, double fw_tol) {
  const Eigen::Index n = mu.size();
  for (int it = 0; it < iters; ++it) {
    const DualEval eval = dual_eval(a, mu, pot);
    Eigen::Index fw_idx = 0;
    eval.grad.minCoeff(&fw_idx);
    Eigen::Index away_idx = 0;
    double away_val = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mu[i] > 0.0 && eval.grad[i] > away_val) {
        away_val = eval.grad[i];
        away_idx = i;
      }
    }
    const double fw_gap = eval.grad.dot(mu) - eval.grad[fw_idx];
    if (fw_gap <= fw_tol) return;
    const double away_gap = away_val - eval.grad.dot(mu);

    Vector dir;
    double gamma_max = 1.0;
    if (fw_gap >= away_gap) {
      dir = -mu;
      dir[fw_idx] += 1.0;
    } else {
      dir = mu;
      dir[away_idx] -= 1.0;
      const double m_a = mu[away_idx];
      gamma_max = m_a >= 1.0 ? 1e30 : m_a / (1.0 - m_a);
    }

    // Exact line search on the convex 1-D slice via derivative bisection.
    const Vector v0 = a.transpose() * mu;
    const Vector vd = a.transpose() * dir;
    const double q = pot.conjugate();
    const auto dphi = [&](double g) {
      const Vector v = v0 + g * vd;
      const double nq = lp_norm(v, q);
      if (nq == 0.0) return 0.0;
      double d = 0.0;
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        const double t = std::pow(std::abs(v[j]) / nq, q - 1.0);
        d += (v[j] < 0.0 ? -t : t) * vd[j];
      }
      return d;
    };
    double lo = 0.0, hi = gamma_max;
    if (dphi(hi) <= 0.0) {
      lo = hi;
    } else {
      for (int b = 0; b < 70; ++b) {
        const double mid = 0.5 * (lo + hi);
        (dphi(mid) <= 0.0 ? lo : hi) = mid;
      }
    }
    const double gamma = lo;
    if (gamma <= 0.0) return;  // numerically stalled
    mu += gamma * dir;
    // Clean tiny negatives from the away update.
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = std::max(mu[i], 0.0);
    const double s = mu.sum();
    if (s > 0.0) mu /= s;
  }
}

}  // namespace

MaxMarginResult max_margin(const Dataset& data, const Potential& pot,
                           const MaxMarginOptions& opts) {
  const Matrix& a = data.signed_inputs();
  const Eigen::Index n = data.n();
  const double row2 = max_row_norm2(a);
  if (row2 == 0.0) {
    throw infeasible_error("max_margin: all data points are zero");
  }
  double c_dual = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    c_dual = std::max(c_dual, dual_norm(a.row(i).transpose(), pot));
  }

  Pcg32 rng(opts.seed);
  Vector w(data.dim());
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = rng.next_gaussian();
  w /= psi_norm(w, pot);

  double best_margin = -std::numeric_limits<double>::infinity();
  Vector best_w = w;
  double best_dual = std::numeric_limits<double>::infinity();
  Vector rho(n);
  Vector best_rho = Vector::Constant(n, 1.0 / static_cast<double>(n));

  // Phase 1: smoothed ascent over the psi sphere with an annealed softmax.
  // The step is taken in the mirror domain so that the sphere-constrained
  // stationary points are exactly where the softmax combination aligns with
  // grad psi(w).
  const auto run_level = [&](double tau) {
    const double alpha = tau * pot.beta / (c_dual * c_dual);
    for (int k = 0; k < opts.inner_iters; ++k) {
      const Vector m = a * w;
      const double m_min = m.minCoeff();
      if (m_min > best_margin) {
        best_margin = m_min;
        best_w = w;
      }
      // Softmax of -m/tau, shifted by the minimum margin for stability.
      double z = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        rho[i] = std::exp((m_min - m[i]) / tau);
        z += rho[i];
      }
      rho /= z;
      const Vector g = a.transpose() * rho;
      // Any simplex point certifies: gamma_hat <= ||sum rho_i a_i||_{psi,*}.
      const double dual_candidate = dual_norm(g, pot);
      if (dual_candidate < best_dual) {
        best_dual = dual_candidate;
        best_rho = rho;
      }
      Vector mirror = grad_psi(w, pot) + alpha * g;
      w = inv_grad_psi(mirror, pot);
      const double nw = psi_norm(w, pot);
      if (nw > 0.0 && w.allFinite()) {
        w /= nw;
      } else {
        for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = rng.next_gaussian();
        w /= psi_norm(w, pot);
      }
    }
  };

  for (double tau = opts.tau_start; tau >= opts.tau_end; tau *= opts.tau_factor) {
    run_level(tau);
  }

  // Phase 2: close the certificate. Refine the dual weights directly, pull
  // the aligned primal back from them, and polish the primal with
  // Polyak-stepped mirror subgradient ascent on the true margin (the dual
  // bound supplies the optimum estimate the Polyak step needs).
  Vector mu = best_rho;
  for (int round = 0; round < 40 && best_dual - best_margin > opts.target_gap; ++round) {
    refine_dual(a, pot, mu, 400, 0.01 * opts.target_gap);
    const DualEval eval = dual_eval(a, mu, pot);
    if (eval.value < best_dual) best_dual = eval.value;
    const Vector v = a.transpose() * mu;
    if (lp_norm(v, pot.conjugate()) > 0.0) {
      const Vector aligned = holder_align(v, pot);
      const double m_aligned = margin(aligned, data);
      if (m_aligned > best_margin) {
        best_margin = m_aligned;
        best_w = aligned;
      }
    }

    // Primal polish: exact line searches of the true min-margin along the
    // worst-row direction projected onto the sphere tangent plane. Monotone
    // by construction; robust where the mirror metric degenerates.
    Vector wp = best_w;
    const auto margin_at = [&](const Vector& cand) {
      return (a * cand).minCoeff() / psi_norm(cand, pot);
    };
    for (int k = 0; k < 100; ++k) {
      const Vector m = a * wp;
      Eigen::Index worst = 0;
      m.minCoeff(&worst);
      const Vector g = a.row(worst).transpose();
      const Vector normal = grad_psi(wp, pot);
      const Vector d = g - (normal.dot(g) / normal.squaredNorm()) * normal;
      if (!(d.norm() > 0.0)) break;
      // Geometric step scan followed by a ternary refinement between the
      // best step's neighbors.
      double eta_best = 0.0;
      double f_best = margin_at(wp);
      double eta = 1e-13 / d.norm();
      double eta_lo = 0.0, eta_hi = 0.0;
      double eta_prev = 0.0;
      for (int s = 0; s < 55; ++s, eta *= 2.0) {
        const double f = margin_at(wp + eta * d);
        if (f > f_best) {
          f_best = f;
          eta_lo = eta_prev;
          eta_best = eta;
          eta_hi = eta * 2.0;
        }
        eta_prev = eta;
      }
      if (eta_best > 0.0) {
        double lo = eta_lo, hi = eta_hi;
        for (int b = 0; b < 60; ++b) {
          const double m1 = lo + (hi - lo) / 3.0;
          const double m2 = hi - (hi - lo) / 3.0;
          if (margin_at(wp + m1 * d) < margin_at(wp + m2 * d)) {
            lo = m1;
          } else {
            hi = m2;
          }
        }
        eta = 0.5 * (lo + hi);
        const double f = margin_at(wp + eta * d);
        if (f > f_best) {
          f_best = f;
          eta_best = eta;
        }
        wp = (wp + eta_best * d) / psi_norm(wp + eta_best * d, pot);
        if (f_best > best_margin) {
          best_margin = f_best;
          best_w = wp;
        }
      } else {
        break;  // no improving step along this direction
      }
    }
  }

  if (!(best_margin > 0.0)) {
    throw infeasible_error("max_margin: data is not linearly separable (best margin " +
                           std::to_string(best_margin) + ")");
  }

  MaxMarginResult out;
  out.direction = best_w / psi_norm(best_w, pot);
  out.margin_value = margin(out.direction, data);
  out.margin_lp = out.margin_value * std::pow(pot.p, -1.0 / pot.beta);
  out.solver_gap = std::max(0.0, best_dual - out.margin_value);
  return out;
}

MaxMarginResult grid_oracle_2d(const Dataset& data, const Potential& pot, long long resolution) {
  if (data.dim() != 2) {
    throw std::invalid_argument("grid_oracle_2d: requires d == 2");
  }
  if (resolution < 8) {
    throw std::invalid_argument("grid_oracle_2d: resolution too small");
  }
  const Matrix& a = data.signed_inputs();
  const Eigen::Index n = data.n();
  std::vector<double> ax(static_cast<std::size_t>(n)), ay(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    ax[static_cast<std::size_t>(i)] = a(i, 0);
    ay[static_cast<std::size_t>(i)] = a(i, 1);
  }

  const double two_pi = 2.0 * 3.14159265358979323846;
  const double p = pot.p;
  const double psi_scale = std::pow(p, -1.0 / pot.beta);
  const bool euclidean = (p == 2.0);

  double best_margin = -std::numeric_limits<double>::infinity();
  double best_theta = 0.0;
  double chord_max = 0.0;
  double vx_prev = 0.0, vy_prev = 0.0, vx_first = 0.0, vy_first = 0.0;

  for (long long k = 0; k < resolution; ++k) {
    const double theta = two_pi * static_cast<double>(k) / static_cast<double>(resolution);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // Radial scale onto the psi unit sphere.
    const double np = euclidean
                          ? 1.0
                          : std::pow(std::pow(std::abs(c), p) + std::pow(std::abs(s), p), 1.0 / p);
    const double r = 1.0 / (psi_scale * np);
    double mu = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ax.size(); ++i) {
      mu = std::min(mu, ax[i] * c + ay[i] * s);
    }
    const double m = mu * r;
    if (m > best_margin) {
      best_margin = m;
      best_theta = theta;
    }
    const double vx = c * r, vy = s * r;
    if (k > 0) {
      chord_max = std::max(chord_max, std::hypot(vx - vx_prev, vy - vy_prev));
    } else {
      vx_first = vx;
      vy_first = vy;
    }
    vx_prev = vx;
    vy_prev = vy;
  }
  chord_max = std::max(chord_max, std::hypot(vx_first - vx_prev, vy_first - vy_prev));

  Vector u(2);
  u << std::cos(best_theta), std::sin(best_theta);
  MaxMarginResult out;
  out.direction = u / psi_norm(u, pot);
  out.margin_value = margin(out.direction, data);
  out.margin_lp = out.margin_value * std::pow(pot.p, -1.0 / pot.beta);
  // The optimum sits within one grid cell; the margin is Lipschitz in the
  // sphere point with constant max_i ||x_i||_2.
  out.solver_gap = max_row_norm2(a) * chord_max;
  return out;
}

namespace {

// argmin <g, v> over the lp ball of radius r_p, closed form via the
// conjugate exponent.
Vector lp_ball_lmo(const Vector& g, double r_p, double p) {
  const double q = p / (p - 1.0);
  const double mg = g.cwiseAbs().maxCoeff();
  Vector t(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    t[j] = std::pow(std::abs(g[j]) / mg, q - 1.0);
  }
  const double tn = lp_norm(t, p);
  Vector v(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    v[j] = -r_p * (g[j] < 0.0 ? -t[j] : t[j]) / tn;
  }
  return v;
}

// Exact line search for L((1-gamma) w + gamma v) on [0, 1]: bisection on the
// convex 1-D derivative using interpolated per-example scores.
double segment_line_search(const Dataset& data, const LossSpec& spec, const Vector& sw,
                           const Vector& sv) {
  const auto dphi = [&](double gamma) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double y = data.labels()[i];
      const double score = (1.0 - gamma) * sw[i] + gamma * sv[i];
      const double ds = sv[i] - sw[i];
      const double m = y * score;
      switch (spec.kind) {
        case LossKind::exponential:
          d += -std::exp(-m) * y * ds;
          break;
        case LossKind::logistic: {
          const double s =
              m > 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
          d += -s * y * ds;
          break;
        }
        case LossKind::square:
          d += 2.0 * (score - y) * ds;
          break;
        case LossKind::hinge:
          if (1.0 - m > 0.0) d += -y * ds;
          break;
      }
    }
    return d;
  };
  if (dphi(1.0) <= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dphi(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<PathPoint> regularization_path(const Dataset& data, const Potential& pot,
                                           const LossSpec& spec,
                                           const std::vector<double>& budgets,
                                           const PathOptions& opts) {
  if (budgets.empty()) {
    throw std::invalid_argument("regularization_path: no budgets given");
  }
  for (std::size_t k = 0; k < budgets.size(); ++k) {
    if (!(budgets[k] > 0.0) || !std::isfinite(budgets[k])) {
      throw std::invalid_argument("regularization_path: budgets must be positive");
    }
    if (k > 0 && !(budgets[k] > budgets[k - 1])) {
      throw std::invalid_argument("regularization_path: budgets must be strictly increasing");
    }
  }

  std::vector<PathPoint> path;
  path.reserve(budgets.size());
  Vector w = Vector::Zero(data.dim());  // feasible for every budget; warm-started across budgets

  for (const double b : budgets) {
    const double r_p = b * std::pow(pot.p, 1.0 / pot.beta);
    double gap = std::numeric_limits<double>::infinity();
    long long iters = 0;
    while (iters < opts.max_iters) {
      const LossEval eval = loss_value_and_grad(w, data, spec);
      if (eval.grad.cwiseAbs().maxCoeff() == 0.0) {
        gap = 0.0;
        break;
      }
      const Vector v = lp_ball_lmo(eval.grad, r_p, pot.p);
      gap = eval.grad.dot(w - v);
      // Once the loss itself drops below the absolute tolerance the gap test
      // is vacuous; tighten relative to the running loss so the minimizer's
      // direction keeps converging on strictly-monotone losses.
      const double stop = std::min(opts.gap_tol, 1e-12 * eval.value);
      if (gap <= stop) break;
      const Vector sw = data.inputs() * w;
      const Vector sv = data.inputs() * v;
      const double gamma = segment_line_search(data, spec, sw, sv);
      w += gamma * (v - w);
      ++iters;
    }
    path.push_back(PathPoint{b, w, loss_value(w, data, spec), gap, iters});
  }
  return path;
}

Vector rescale_to_unit_margin(const Vector& w, const Dataset& data) {
  const double g = margin(w, data);
  if (!(g > 0.0)) {
    throw std::invalid_argument("rescale_to_unit_margin: margin is not positive (" +
                                std::to_string(g) + ")");
  }
  return w / g;
}

Matrix classifier_norm_table(const std::vector<std::pair<double, Vector>>& classifiers,
                             const Dataset& data, const std::vector<double>& report_norms) {
  if (classifiers.empty() || report_norms.empty()) {
    throw std::invalid_argument("classifier_norm_table: empty input");
  }
  for (const double q : report_norms) {
    if (!(q >= 1.0)) {
      throw std::invalid_argument("classifier_norm_table: report norms must be >= 1");
    }
  }
  Matrix table(static_cast<Eigen::Index>(classifiers.size()),
               static_cast<Eigen::Index>(report_norms.size()));
  for (std::size_t i = 0; i < classifiers.size(); ++i) {
    const Vector scaled = rescale_to_unit_margin(classifiers[i].second, data);
    for (std::size_t j = 0; j < report_norms.size(); ++j) {
      table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          lp_norm(scaled, report_norms[j]);
    }
  }
  return table;
}

}  // namespace mdmargin
