#pragma once

#include <stdexcept>
#include <string>

namespace mdmargin {

/// The mirror map gradient is undefined at the origin when beta < p.
class singular_origin_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by solvers that require linearly separable data.
class infeasible_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-step loss increased beyond tolerance; the step size is too large.
class monotonicity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdmargin
