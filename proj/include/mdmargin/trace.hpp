#pragma once

#include <optional>
#include <vector>

namespace mdmargin {

/// One recorded diagnostic row of a trajectory. eta_effective is the full
/// multiplier applied to the loss gradient when stepping *from* this state
/// (for normalized runs that includes the 1/L factor). bregman_gap is
/// D_psi(target, w_t / ||w_t||_psi) and present only when a target was given.
struct TraceRow {
  long long t = 0;
  double loss = 0.0;
  double psi_norm_w = 0.0;
  double margin_w = 0.0;
  double eta_effective = 0.0;
  std::optional<double> bregman_gap;
};

using Trace = std::vector<TraceRow>;

}  // namespace mdmargin
