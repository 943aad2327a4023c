#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "rankae/dataset.hpp"
#include "rankae/tensor.hpp"

namespace rankae {

enum class LossKind { rank, bce };

/// Margin ranking loss over label scores, computed in O(L).
///
/// With P the positive label set, N its complement, p* the lowest-scored
/// positive and n* the highest-scored negative (ties resolved to the lowest
/// index):
///
///   loss = sum_{n in N} (m + s_n - s_{p*})_+  +  sum_{p in P} (m + s_{n*} - s_p)_+
///
/// The max over the opposite set inside each hinge is attained at the
/// extreme score because (.)_+ is monotone, which is what collapses the
/// pairwise sum to two linear passes. Each strictly active hinge term
/// (argument > 0) contributes +1 to its negative-side score and -1 to its
/// positive-side score, so the subgradient entries always sum to zero.
/// When P or N is empty both sums are zero.
///
/// `grad` is overwritten. Returns the loss.
template <class S>
S rank_loss(const LabelSet& y, std::span<const S> scores, S margin,
            std::span<S> grad) {
  if (!(margin >= S(0) && margin <= S(1)))
    throw std::invalid_argument("rank_loss: margin must be in [0,1]");
  check_lengths(scores.size(), grad.size(), "rank_loss grad");
  const int num_labels = int(scores.size());
  if (num_labels < 1) throw std::invalid_argument("rank_loss: L must be >= 1");

  std::fill(grad.begin(), grad.end(), S(0));
  if (y.empty() || y.size() == num_labels) return S(0);

  // One pass to find the extreme positive and negative scores.
  int min_pos = -1, max_neg = -1;
  {
    std::size_t yi = 0;
    for (int l = 0; l < num_labels; ++l) {
      const bool positive = yi < y.ids.size() && y.ids[yi] == l;
      if (positive) {
        ++yi;
        if (min_pos < 0 || scores[l] < scores[min_pos]) min_pos = l;
      } else {
        if (max_neg < 0 || scores[l] > scores[max_neg]) max_neg = l;
      }
    }
  }

  double loss = 0.0;
  const S s_min_pos = scores[min_pos];
  const S s_max_neg = scores[max_neg];
  std::size_t yi = 0;
  for (int l = 0; l < num_labels; ++l) {
    const bool positive = yi < y.ids.size() && y.ids[yi] == l;
    if (positive) {
      ++yi;
      const S t = margin + s_max_neg - scores[l];
      if (t > S(0)) {
        loss += double(t);
        grad[max_neg] += S(1);
        grad[l] -= S(1);
      }
    } else {
      const S t = margin + scores[l] - s_min_pos;
      if (t > S(0)) {
        loss += double(t);
        grad[l] += S(1);
        grad[min_pos] -= S(1);
      }
    }
  }
  return S(loss);
}

/// Literal pairwise evaluation of the same objective, quadratic in L.
/// Test oracle for rank_loss; kept free of any shared code with it.
template <class S>
S rank_loss_bruteforce(const LabelSet& y, std::span<const S> scores, S margin) {
  const int num_labels = int(scores.size());
  std::vector<int> pos, neg;
  for (int l = 0; l < num_labels; ++l)
    (y.contains(l) ? pos : neg).push_back(l);
  if (pos.empty() || neg.empty()) return S(0);

  double loss = 0.0;
  for (int n : neg) {
    double best = 0.0;
    for (int p : pos)
      best = std::max(best, std::max(0.0, double(margin) + double(scores[n]) -
                                              double(scores[p])));
    loss += best;
  }
  for (int p : pos) {
    double best = 0.0;
    for (int n : neg)
      best = std::max(best, std::max(0.0, double(margin) + double(scores[n]) -
                                              double(scores[p])));
    loss += best;
  }
  return S(loss);
}

/// Mean binary cross-entropy over all L labels, the ablation loss. Scores
/// are clamped to [1e-7, 1 - 1e-7] before the logs; the gradient is
/// evaluated at the clamped value and passed through.
template <class S>
S bce_loss(const LabelSet& y, std::span<const S> scores, std::span<S> grad) {
  check_lengths(scores.size(), grad.size(), "bce_loss grad");
  const int num_labels = int(scores.size());
  if (num_labels < 1) throw std::invalid_argument("bce_loss: L must be >= 1");

  constexpr double kEps = 1e-7;
  double loss = 0.0;
  const double inv_l = 1.0 / double(num_labels);
  std::size_t yi = 0;
  for (int l = 0; l < num_labels; ++l) {
    const double s =
        std::clamp(double(scores[l]), kEps, 1.0 - kEps);
    const bool positive = yi < y.ids.size() && y.ids[yi] == l;
    if (positive) {
      ++yi;
      loss -= std::log(s);
      grad[l] = S(-inv_l / s);
    } else {
      loss -= std::log(1.0 - s);
      grad[l] = S(inv_l / (1.0 - s));
    }
  }
  return S(loss * inv_l);
}

}  // namespace rankae
