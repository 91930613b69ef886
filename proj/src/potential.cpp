#include "mdmargin/potential.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdmargin/errors.hpp"

namespace mdmargin {

Potential::Potential(double p_, double beta_) : p(p_), beta(beta_) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("Potential: p must be finite and > 1, got " + std::to_string(p_));
  }
  if (!(beta > 1.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("Potential: beta must be finite and > 1, got " +
                                std::to_string(beta_));
  }
}

double lp_norm(const Vector& w, double r) {
  if (w.size() == 0) return 0.0;
  const double m = w.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  if (std::isinf(r)) return m;
  if (r == 1.0) return w.cwiseAbs().sum();
  if (r == 2.0) return w.norm();
  double s = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    s += std::pow(std::abs(w[j]) / m, r);
  }
  return m * std::pow(s, 1.0 / r);
}

double psi_value(const Vector& w, const Potential& pot) {
  const double n = lp_norm(w, pot.p);
  return std::pow(n, pot.beta) / pot.p;
}

double psi_norm(const Vector& w, const Potential& pot) {
  return std::pow(pot.p, -1.0 / pot.beta) * lp_norm(w, pot.p);
}

namespace {

// |v|^e * sgn(v) with the exponent-1 case kept exact.
inline double signed_pow(double v, double e) {
  if (e == 1.0) return v;
  const double a = std::pow(std::abs(v), e);
  return v < 0.0 ? -a : a;
}

}  // namespace

Vector grad_psi(const Vector& w, const Potential& pot) {
  Vector g(w.size());
  if (pot.is_separable()) {
    // (beta/p) ||w||^(beta-p) == 1: purely coordinate-wise.
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      g[j] = signed_pow(w[j], pot.p - 1.0);
    }
    return g;
  }
  const double n = lp_norm(w, pot.p);
  if (n == 0.0) {
    if (pot.beta < pot.p) {
      throw singular_origin_error("grad_psi: undefined at the origin for beta < p");
    }
    g.setZero();
    return g;
  }
  const double pref = (pot.beta / pot.p) * std::pow(n, pot.beta - pot.p);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    g[j] = pref * signed_pow(w[j], pot.p - 1.0);
  }
  return g;
}

Vector inv_grad_psi(const Vector& z, const Potential& pot) {
  Vector w(z.size());
  const double q = pot.conjugate();
  const double nz = lp_norm(z, q);
  if (nz == 0.0) {
    w.setZero();
    return w;
  }
  // Recovered primal p-norm, then the per-coordinate inversion.
  const double r = std::pow((pot.p / pot.beta) * nz, 1.0 / (pot.beta - 1.0));
  const double scale = (pot.p / pot.beta) * std::pow(r, pot.p - pot.beta);
  const double e = 1.0 / (pot.p - 1.0);
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    w[j] = signed_pow(scale * z[j], e);
  }
  return w;
}

double bregman(const Vector& x, const Vector& y, const Potential& pot) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("bregman: dimension mismatch");
  }
  const Vector gy = grad_psi(y, pot);
  return psi_value(x, pot) - psi_value(y, pot) - gy.dot(x - y);
}

double dual_norm(const Vector& x, const Potential& pot) {
  return std::pow(pot.p, 1.0 / pot.beta) * lp_norm(x, pot.conjugate());
}

}  // namespace mdmargin
