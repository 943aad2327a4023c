#pragma once

#include <span>
#include <vector>

#include "rankae/dataset.hpp"
#include "rankae/model.hpp"
#include "rankae/parallel.hpp"

namespace rankae {

struct MetricsReport {
  std::vector<int> ks;
  std::vector<double> p_at_k;
  std::vector<double> ndcg_at_k;
  long n_instances = 0;
};

/// Indices of the k largest scores, descending; equal scores rank the lower
/// index first.
std::vector<int> rank_top_k(std::span<const float> scores, int k);

/// (1/k) * |top-k(scores) ∩ y|. The denominator is always k, even when the
/// instance has fewer than k positive labels.
double precision_at_k(const LabelSet& y, std::span<const float> scores, int k);

/// DCG over the top-k ranking with gain 1/log2(position+1), normalized by
/// the ideal DCG over min(k, |y|) positions. Instances with no positive
/// labels score 0.
double ndcg_at_k(const LabelSet& y, std::span<const float> scores, int k);

/// Mean P@k and nDCG@k over a test set, for each k in `ks`.
MetricsReport evaluate(const ModelParams<float>& params, const Dataset& test,
                       std::span<const int> ks, ThreadPool& pool);

}  // namespace rankae
