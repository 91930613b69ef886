#include "mdmargin/data.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mdmargin/errors.hpp"
#include "mdmargin/rng.hpp"

namespace mdmargin {

namespace {

constexpr int kPlanarPoints = 15;
constexpr int kHighdimPoints = 15;
constexpr int kHighdimDim = 100;
constexpr int kHighdimMaxSupport = 10;
constexpr int kRedrawAttempts = 10;

// Perceptron-based separability probe on the absorbed (+1-label) problem.
// Convergence proves separability; running out of budget counts as
// degenerate for redraw purposes.
bool is_separable(const Matrix& rows, long long max_updates = 1'000'000) {
  Vector w = Vector::Zero(rows.cols());
  long long updates = 0;
  bool clean = false;
  while (!clean && updates < max_updates) {
    clean = true;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      if (rows.row(i).dot(w) <= 0.0) {
        w += rows.row(i).transpose();
        ++updates;
        clean = false;
      }
    }
  }
  return clean;
}

}  // namespace

Dataset gen_planar2d(std::uint64_t seed, bool resign_for_plot) {
  Matrix x(kPlanarPoints, 2);
  x.row(0) << 1.0 / 6.0, 1.0 / 2.0;
  x.row(1) << 1.0 / 2.0, 1.0 / 6.0;
  x.row(2) << 1.0 / 3.0, 1.0 / 3.0;

  Pcg32 rng(seed);
  // 0.15 is the per-coordinate standard deviation; the anchors then carry
  // the max margin for almost every seed, which is the point of the set.
  const double sd = 0.15;
  for (int i = 3; i < kPlanarPoints; ++i) {
    x(i, 0) = 0.5 + sd * rng.next_gaussian();
    x(i, 1) = 0.5 + sd * rng.next_gaussian();
  }

  Vector y = Vector::Ones(kPlanarPoints);
  if (resign_for_plot) {
    for (int i = 0; i < kPlanarPoints; ++i) {
      if (rng.next_u32() & 1u) {
        x.row(i) = -x.row(i);
        y[i] = -1.0;
      }
    }
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset gen_sparse_highdim(std::uint64_t seed) {
  for (int attempt = 0; attempt < kRedrawAttempts; ++attempt) {
    // Incremented sub-seed selects a disjoint stream per retry.
    Pcg32 rng(seed, 0x14057b7ef767814fULL + static_cast<std::uint64_t>(attempt));
    Matrix x = Matrix::Zero(kHighdimPoints, kHighdimDim);
    std::array<int, kHighdimDim> idx{};
    for (int i = 0; i < kHighdimPoints; ++i) {
      const int support = 1 + static_cast<int>(rng.next_below(kHighdimMaxSupport));
      std::iota(idx.begin(), idx.end(), 0);
      // Partial Fisher-Yates: first `support` entries are a sample without
      // replacement.
      for (int k = 0; k < support; ++k) {
        const int j = k + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(kHighdimDim - k)));
        std::swap(idx[k], idx[j]);
        x(i, idx[k]) = rng.next_uniform(-2.0, 4.0);
      }
    }
    if (is_separable(x)) {
      return Dataset(std::move(x), Vector::Ones(kHighdimPoints));
    }
    std::cerr << "gen_sparse_highdim: seed " << seed << " attempt " << attempt
              << " produced non-separable data, redrawing\n";
  }
  throw infeasible_error("gen_sparse_highdim: no separable draw after " +
                         std::to_string(kRedrawAttempts) + " attempts");
}

Dataset make_dataset(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::planar2d:
      return gen_planar2d(spec.seed, spec.resign_for_plot);
    case GeneratorSpec::Kind::sparse_highdim:
      return gen_sparse_highdim(spec.seed);
    case GeneratorSpec::Kind::custom_file:
      return load_dataset(spec.path);
  }
  throw std::invalid_argument("make_dataset: unknown generator kind");
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out << "y";
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << ",x" << (j + 1);
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", data.labels()[i]);
    out << buf;
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.inputs()(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& field, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0')) {
    throw std::runtime_error("load_dataset: malformed value '" + field + "' on line " +
                             std::to_string(line_no));
  }
  return v;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_dataset: empty file " + path);
  }
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "y") {
    throw std::runtime_error("load_dataset: bad header in " + path +
                             " (expected y,x1,...,xd)");
  }
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;
  if (d < 1) throw std::runtime_error("load_dataset: header declares no feature columns");

  std::vector<double> labels;
  std::vector<double> values;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (static_cast<Eigen::Index>(fields.size()) != d + 1) {
      throw std::runtime_error("load_dataset: line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(d + 1));
    }
    const double y = parse_number(fields[0], line_no);
    if (y != 1.0 && y != -1.0) {
      throw std::runtime_error("load_dataset: label on line " + std::to_string(line_no) +
                               " is not +1 or -1");
    }
    labels.push_back(y);
    for (Eigen::Index j = 0; j < d; ++j) {
      values.push_back(parse_number(fields[static_cast<std::size_t>(j) + 1], line_no));
    }
  }
  if (labels.empty()) {
    throw std::runtime_error("load_dataset: no data rows in " + path);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  Matrix x(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = values[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) +
                       static_cast<std::size_t>(j)];
    }
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace mdmargin
