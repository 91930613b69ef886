#pragma once

#include <cstdint>
#include <string>

#include "mdmargin/loss.hpp"

namespace mdmargin {

struct GeneratorSpec {
  enum class Kind { planar2d, sparse_highdim, custom_file };
  Kind kind = Kind::planar2d;
  std::uint64_t seed = 1;
  std::string path;           // custom_file only
  bool resign_for_plot = false;  // planar2d only
};

/// 15 points in R^2: three fixed anchors (1/6,1/2), (1/2,1/6), (1/3,1/3)
/// followed by 12 samples from N((1/2,1/2), 0.15 I). Labels are absorbed to
/// +1. With resign_for_plot, each point is flipped to (-x_i, -1) with
/// probability 1/2 -- cosmetic only, the learning problem is unchanged.
Dataset gen_planar2d(std::uint64_t seed, bool resign_for_plot = false);

/// 15 sparse points in R^100: per point the support size is uniform on
/// {1..10}, support indices drawn without replacement, nonzero entries
/// i.i.d. U(-2, 4), labels +1. Separability is verified post hoc; degenerate
/// draws are retried with an incremented sub-seed (at most 10 times, logged).
Dataset gen_sparse_highdim(std::uint64_t seed);

Dataset make_dataset(const GeneratorSpec& spec);

/// Comma-separated text, header `y,x1,...,xd`, label first, 17 significant
/// digits per value so the decimal round trip is exact.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mdmargin
