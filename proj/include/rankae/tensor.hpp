#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankae/rng.hpp"

namespace rankae {

/// Row-major dense matrix. All heavy math in this project runs on plain
/// contiguous arrays; the scalar type is a template parameter so the same
/// code serves single-precision training and double-precision gradient
/// checking.
template <class S>
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<S> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(std::size_t(r) * c, S(0)) {
    if (r < 0 || c < 0) throw std::invalid_argument("negative matrix shape");
  }

  S* row(int i) { return data.data() + std::size_t(i) * cols; }
  const S* row(int i) const { return data.data() + std::size_t(i) * cols; }

  S& at(int i, int j) { return data[std::size_t(i) * cols + j]; }
  S at(int i, int j) const { return data[std::size_t(i) * cols + j]; }

  std::size_t size() const { return data.size(); }

  void set_zero() { std::fill(data.begin(), data.end(), S(0)); }
};

inline void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
  }
}

#ifndef NDEBUG
template <class S>
void debug_check_finite(std::span<const S> v) {
  for (S x : v) assert(std::isfinite(double(x)) && "non-finite tensor entry");
}
#else
template <class S>
void debug_check_finite(std::span<const S>) {}
#endif

/// Glorot-style uniform init: entries in +-sqrt(6 / (rows + cols)).
template <class S>
DenseMatrix<S> init_params(Rng& rng, int rows, int cols) {
  DenseMatrix<S> m(rows, cols);
  const double bound = std::sqrt(6.0 / (double(rows) + double(cols)));
  for (auto& x : m.data) x = S(rng.uniform(-bound, bound));
  return m;
}

}  // namespace rankae
