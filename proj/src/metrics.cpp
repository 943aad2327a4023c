#include "rankae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rankae {

std::vector<int> rank_top_k(std::span<const float> scores, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (std::size_t(k) > scores.size())
    throw std::invalid_argument("k exceeds the number of labels");
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

double precision_at_k(const LabelSet& y, std::span<const float> scores, int k) {
  const std::vector<int> top = rank_top_k(scores, k);
  int hits = 0;
  for (int label : top)
    if (y.contains(label)) ++hits;
  return double(hits) / double(k);
}

double ndcg_at_k(const LabelSet& y, std::span<const float> scores, int k) {
  if (y.empty()) {
    rank_top_k(scores, k);  // still validates k
    return 0.0;
  }
  const std::vector<int> top = rank_top_k(scores, k);
  double dcg = 0.0;
  for (int pos = 0; pos < k; ++pos)
    if (y.contains(top[pos])) dcg += 1.0 / std::log2(double(pos + 2));
  double ideal = 0.0;
  const int ideal_len = std::min(k, y.size());
  for (int pos = 0; pos < ideal_len; ++pos)
    ideal += 1.0 / std::log2(double(pos + 2));
  return dcg / ideal;
}

MetricsReport evaluate(const ModelParams<float>& params, const Dataset& test,
                       std::span<const int> ks, ThreadPool& pool) {
  if (test.instances.empty())
    throw std::invalid_argument("evaluate: empty test set");
  for (int k : ks)
    if (k < 1 || k > test.num_labels)
      throw std::invalid_argument("evaluate: k out of range");
  if (test.num_features != params.cfg.num_features ||
      test.num_labels != params.cfg.num_labels)
    throw std::invalid_argument("evaluate: dataset dimensions do not match model");

  const int workers = pool.size();
  const std::size_t nk = ks.size();
  std::vector<std::vector<double>> p_sum(workers, std::vector<double>(nk, 0));
  std::vector<std::vector<double>> n_sum(workers, std::vector<double>(nk, 0));

  pool.for_blocks(test.num_instances(), [&](int w, long begin, long end) {
    ModelWorkspace<float> ws;
    ws.resize(params.cfg);
    for (long i = begin; i < end; ++i) {
      const Instance& inst = test.instances[i];
      score_instance(inst.features, params, ws);
      const std::span<const float> scores(ws.scores);
      for (std::size_t j = 0; j < nk; ++j) {
        p_sum[w][j] += precision_at_k(inst.labels, scores, ks[j]);
        n_sum[w][j] += ndcg_at_k(inst.labels, scores, ks[j]);
      }
    }
  });

  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.n_instances = test.num_instances();
  report.p_at_k.assign(nk, 0);
  report.ndcg_at_k.assign(nk, 0);
  for (int w = 0; w < workers; ++w) {
    for (std::size_t j = 0; j < nk; ++j) {
      report.p_at_k[j] += p_sum[w][j];
      report.ndcg_at_k[j] += n_sum[w][j];
    }
  }
  for (std::size_t j = 0; j < nk; ++j) {
    report.p_at_k[j] /= double(report.n_instances);
    report.ndcg_at_k[j] /= double(report.n_instances);
  }
  return report;
}

}  // namespace rankae
