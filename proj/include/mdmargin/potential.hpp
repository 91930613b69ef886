#pragma once

#include <Eigen/Core>

namespace mdmargin {

using Vector = Eigen::VectorXd;

/// Homogeneous potential psi(w) = (1/p) * ||w||_p^beta.
///
/// The pair (p, beta) fixes the whole geometry: the induced norm
/// ||w||_psi = psi(w)^(1/beta) = p^(-1/beta) * ||w||_p, its dual, the mirror
/// map grad psi and its inverse, and the Bregman divergence. beta = p gives
/// the coordinate-separable potential whose mirror update never touches the
/// norm; p = beta = 2 reduces everything to plain Euclidean geometry.
struct Potential {
  double p;
  double beta;

  Potential(double p_, double beta_);

  /// Coordinate-separable member of the family, psi = (1/p) ||.||_p^p.
  static Potential separable(double p_) { return Potential(p_, p_); }

  /// Hoelder conjugate q = p / (p - 1).
  double conjugate() const { return p / (p - 1.0); }

  bool is_separable() const { return p == beta; }
};

/// ||w||_r for r >= 1, computed with max-scaling so large r does not
/// overflow. r may be +infinity (max norm).
double lp_norm(const Vector& w, double r);

/// psi(w) = (1/p) ||w||_p^beta. Nonnegative, zero only at the origin.
double psi_value(const Vector& w, const Potential& pot);

/// ||w||_psi = psi(w)^(1/beta) = p^(-1/beta) ||w||_p. A genuine norm for
/// p, beta > 1; psi(w / ||w||_psi) = 1 for w != 0.
double psi_norm(const Vector& w, const Potential& pot);

/// Mirror map: grad psi(w)_j = (beta/p) ||w||_p^(beta-p) |w_j|^(p-1) sgn(w_j).
/// Satisfies the Euler identity <grad psi(w), w> = beta * psi(w).
///
/// Throws singular_origin_error at w = 0 when beta < p (the prefactor
/// ||w||_p^(beta-p) diverges there).
Vector grad_psi(const Vector& w, const Potential& pot);

/// Inverse mirror map, closed form. With q = p/(p-1) the p-norm of the
/// primal point is recovered as r = ((p/beta) ||z||_q)^(1/(beta-1)); then
/// w_j = sgn(z_j) ((p/beta) r^(p-beta) |z_j|)^(1/(p-1)). Fixes the origin.
Vector inv_grad_psi(const Vector& z, const Potential& pot);

/// Bregman divergence D_psi(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>.
/// Nonnegative, zero iff x == y, and beta-absolutely homogeneous:
/// D(cx, cy) = |c|^beta D(x, y).
double bregman(const Vector& x, const Vector& y, const Potential& pot);

/// Dual norm of ||.||_psi: sup over the psi unit ball of <x, .>, equal to
/// p^(1/beta) ||x||_q with q = p/(p-1).
double dual_norm(const Vector& x, const Potential& pot);

}  // namespace mdmargin
