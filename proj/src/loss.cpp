#include "mdmargin/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mdmargin {

Dataset::Dataset(Matrix inputs, Vector labels)
    : inputs_(std::move(inputs)), labels_(std::move(labels)) {
  if (inputs_.rows() < 1 || inputs_.cols() < 1) {
    throw std::invalid_argument("Dataset: need n >= 1 points of dimension d >= 1");
  }
  if (labels_.size() != inputs_.rows()) {
    throw std::invalid_argument("Dataset: label count does not match row count");
  }
  if (!inputs_.allFinite()) {
    throw std::invalid_argument("Dataset: non-finite input entry");
  }
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      throw std::invalid_argument("Dataset: label at row " + std::to_string(i) +
                                  " is not +1 or -1");
    }
  }
  signed_inputs_ = labels_.asDiagonal() * inputs_;
}

namespace {

void check_dim(const Vector& w, const Dataset& data, const char* who) {
  if (w.size() != data.dim()) {
    throw std::invalid_argument(std::string(who) + ": weight dimension " +
                                std::to_string(w.size()) + " != data dimension " +
                                std::to_string(data.dim()));
  }
}

// log(1 + exp(-m)) without overflow for very negative m.
inline double logistic_loss(double m) {
  if (m > 0.0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

}  // namespace

LossEval loss_value_and_grad(const Vector& w, const Dataset& data, const LossSpec& spec) {
  check_dim(w, data, "loss");
  const Eigen::Index n = data.n();
  LossEval out;
  out.grad = Vector::Zero(data.dim());

  // Per-example scores; margins are the label-signed scores.
  const Vector scores = data.inputs() * w;
  double value = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  // coeff[i] = d loss_i / d score_i; grad = X^T coeff.
  Vector coeff(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = data.labels()[i];
    const double m = y * scores[i];
    min_margin = std::min(min_margin, m);
    switch (spec.kind) {
      case LossKind::exponential: {
        const double e = std::exp(-m);
        value += e;
        coeff[i] = -e * y;
        break;
      }
      case LossKind::logistic: {
        value += logistic_loss(m);
        // sigmoid(-m) = 1 / (1 + exp(m))
        const double s = m > 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
        coeff[i] = -s * y;
        break;
      }
      case LossKind::square: {
        const double r = scores[i] - y;
        value += r * r;
        coeff[i] = 2.0 * r;
        break;
      }
      case LossKind::hinge: {
        const double z = 1.0 - m;
        // The kink z == 0 counts as inactive: zero contribution.
        if (z > 0.0) {
          value += z;
          coeff[i] = -y;
        } else {
          coeff[i] = 0.0;
        }
        break;
      }
    }
  }

  out.grad = data.inputs().transpose() * coeff;
  out.value = value;
  if (spec.reduction == Reduction::mean) {
    out.value /= static_cast<double>(n);
    out.grad /= static_cast<double>(n);
  }
  out.min_margin = min_margin;
  return out;
}

double loss_value(const Vector& w, const Dataset& data, const LossSpec& spec) {
  return loss_value_and_grad(w, data, spec).value;
}

Vector loss_grad(const Vector& w, const Dataset& data, const LossSpec& spec) {
  return loss_value_and_grad(w, data, spec).grad;
}

double margin(const Vector& w, const Dataset& data) {
  check_dim(w, data, "margin");
  const Vector scores = data.inputs() * w;
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    m = std::min(m, data.labels()[i] * scores[i]);
  }
  return m;
}

double data_bound_C(const Dataset& data, const Potential& pot) {
  double c = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Vector x = data.inputs().row(i).transpose();
    c = std::max(c, std::max(x.norm(), dual_norm(x, pot)));
  }
  return c;
}

}  // namespace mdmargin
