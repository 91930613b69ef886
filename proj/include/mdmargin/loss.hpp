#pragma once

#include <Eigen/Core>

#include "mdmargin/potential.hpp"

namespace mdmargin {

using Matrix = Eigen::MatrixXd;

enum class LossKind { exponential, logistic, square, hinge };
enum class Reduction { sum, mean };

struct LossSpec {
  LossKind kind = LossKind::exponential;
  Reduction reduction = Reduction::mean;
};

/// Immutable classification dataset: rows of `inputs` are the points x_i,
/// `labels` holds the matching +-1 labels.
class Dataset {
 public:
  Dataset(Matrix inputs, Vector labels);

  const Matrix& inputs() const { return inputs_; }
  const Vector& labels() const { return labels_; }
  Eigen::Index n() const { return inputs_.rows(); }
  Eigen::Index dim() const { return inputs_.cols(); }

  /// Rows scaled by their labels, i.e. the points of the absorbed-label
  /// problem where every example carries a +1 label.
  const Matrix& signed_inputs() const { return signed_inputs_; }

 private:
  Matrix inputs_;
  Vector labels_;
  Matrix signed_inputs_;
};

struct LossEval {
  double value = 0.0;
  Vector grad;
  double min_margin = 0.0;  // min_i y_i <x_i, w>, free by-product
};

double loss_value(const Vector& w, const Dataset& data, const LossSpec& spec);
Vector loss_grad(const Vector& w, const Dataset& data, const LossSpec& spec);

/// Value, gradient and margin in one pass over the data.
LossEval loss_value_and_grad(const Vector& w, const Dataset& data, const LossSpec& spec);

/// gamma(w) = min_i y_i <x_i, w>. Positive iff w separates with slack.
double margin(const Vector& w, const Dataset& data);

/// Data bound C = max_i max(||x_i||_2, ||x_i||_{psi,*}), the constant in the
/// step-size and norm-growth bounds.
double data_bound_C(const Dataset& data, const Potential& pot);

}  // namespace mdmargin
