#pragma once

// Helpers shared between the model unit tests and the acceptance suite:
// the toy model shape used for gradient checking, detection of points
// where the objective is non-differentiable, and view collection for the
// finite-difference harness.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rankae/model.hpp"
#include "rankae/rng.hpp"

namespace rankae::testing {

inline ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.num_features = 6;
  cfg.embed_dim = 4;
  cfg.reduction = 2;
  cfg.latent_dim = 3;
  cfg.hidden_dim = 4;
  cfg.num_labels = 5;
  cfg.margin = 0.37;
  cfg.lambda = 0.8;
  return cfg;
}

inline Instance toy_instance(Rng& rng, const ModelConfig& cfg) {
  Instance inst;
  for (int f = 0; f < cfg.num_features; ++f)
    if (rng.next_double() < 0.6) {
      inst.features.index.push_back(f);
      inst.features.value.push_back(float(rng.uniform(0.2, 1.5)));
    }
  for (int l = 0; l < cfg.num_labels; ++l)
    if (rng.next_double() < 0.4) inst.labels.ids.push_back(l);
  return inst;
}

inline void collect_views(ModelParams<double>& p, ModelGrads<double>& g,
                          std::vector<std::span<double>>& params,
                          std::vector<std::span<const double>>& grads) {
  p.for_each_array([&](const char*, std::vector<double>& data) {
    params.push_back(std::span<double>(data));
  });
  g.for_each_array([&](const char*, std::vector<double>& data) {
    grads.push_back(std::span<const double>(data));
  });
}

/// True when any rank-loss hinge argument or ReLU pre-activation of the
/// current forward pass sits within `tol` of zero (where the objective is
/// not differentiable), or when the extreme-score labels are nearly tied.
/// Gradient checks reject such parameter draws.
inline bool near_kink(const Instance& inst, const ModelParams<double>& p,
                      double tol) {
  ModelWorkspace<double> ws;
  ws.resize(p.cfg);
  feature_embed(inst.features, p, ws);
  label_encode(inst.labels, p, ws);
  label_decode(std::span<const double>(ws.y_h), p, ws);

  for (double a : ws.enc_act1)
    if (a != 0.0 && std::abs(a) < tol) return true;
  for (double a : ws.dec_act1)
    if (a != 0.0 && std::abs(a) < tol) return true;
  if (!p.cfg.no_attention)
    for (double h : ws.attn.hidden)
      if (h != 0.0 && std::abs(h) < tol) return true;

  const auto& y = inst.labels;
  if (y.empty() || y.size() == p.cfg.num_labels) return false;
  double min_pos = 2, second_min_pos = 2, max_neg = -2, second_max_neg = -2;
  for (int l = 0; l < p.cfg.num_labels; ++l) {
    const double s = ws.scores[l];
    if (y.contains(l)) {
      if (s < min_pos) {
        second_min_pos = min_pos;
        min_pos = s;
      } else
        second_min_pos = std::min(second_min_pos, s);
    } else {
      if (s > max_neg) {
        second_max_neg = max_neg;
        max_neg = s;
      } else
        second_max_neg = std::max(second_max_neg, s);
    }
  }
  if (second_min_pos < 1.5 && second_min_pos - min_pos < tol) return true;
  if (second_max_neg > -1.5 && max_neg - second_max_neg < tol) return true;
  for (int l = 0; l < p.cfg.num_labels; ++l) {
    const double s = ws.scores[l];
    const double arg = y.contains(l) ? p.cfg.margin + max_neg - s
                                     : p.cfg.margin + s - min_pos;
    if (std::abs(arg) < tol) return true;
  }
  return false;
}

}  // namespace rankae::testing
