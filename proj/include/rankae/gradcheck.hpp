#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "rankae/rng.hpp"

namespace rankae {

/// Central-difference gradient check.
///
/// `eval` recomputes the loss at the current parameter values and fills the
/// analytic gradients (overwriting, not accumulating). `params` and `grads`
/// are parallel lists of array views. When the total parameter count exceeds
/// `max_coords`, a random subset of coordinates is checked (at least 200 by
/// default, per the verification contract).
///
/// Returns max over checked coordinates of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
template <class S>
double finite_diff_gradcheck(const std::function<S()>& eval,
                             std::span<const std::span<S>> params,
                             std::span<const std::span<const S>> grads,
                             double epsilon, Rng& rng, int max_coords = 200) {
  if (epsilon <= 0) throw std::invalid_argument("gradcheck: epsilon must be > 0");
  if (params.size() != grads.size())
    throw std::invalid_argument("gradcheck: params/grads slot mismatch");

  const S base_loss = eval();
  if (!std::isfinite(double(base_loss)))
    throw std::runtime_error("gradcheck: non-finite loss");

  // Snapshot the analytic gradient before we start perturbing.
  std::vector<std::vector<S>> analytic;
  std::size_t total = 0;
  for (std::size_t s = 0; s < grads.size(); ++s) {
    analytic.emplace_back(grads[s].begin(), grads[s].end());
    total += grads[s].size();
  }

  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t(0));
  if (total > std::size_t(max_coords)) {
    shuffle(coords, rng);
    coords.resize(std::size_t(max_coords));
  }

  double worst = 0.0;
  for (std::size_t flat : coords) {
    std::size_t s = 0, i = flat;
    while (i >= params[s].size()) {
      i -= params[s].size();
      ++s;
    }
    const S saved = params[s][i];
    params[s][i] = saved + S(epsilon);
    const double up = double(eval());
    params[s][i] = saved - S(epsilon);
    const double down = double(eval());
    params[s][i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::runtime_error("gradcheck: non-finite loss during perturbation");
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = double(analytic[s][i]);
    const double rel =
        std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  eval();  // restore cached state for the caller
  return worst;
}

}  // namespace rankae
