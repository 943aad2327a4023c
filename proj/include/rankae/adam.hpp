#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "rankae/tensor.hpp"

namespace rankae {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with decoupled weight decay. One state instance covers a fixed list
/// of parameter arrays; `step` counts optimizer steps, incremented once per
/// adam_step call regardless of how many arrays the call updates.
template <class S>
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<std::vector<S>> m;
  std::vector<std::vector<S>> v;

  explicit AdamState(AdamConfig c = {}) : cfg(c) {}

  /// Registers one parameter array; returns its slot id.
  int add_slot(std::size_t n) {
    m.emplace_back(n, S(0));
    v.emplace_back(n, S(0));
    return int(m.size()) - 1;
  }
};

template <class S>
struct ParamGradView {
  std::span<S> params;
  std::span<const S> grads;
};

/// Bias-corrected Adam update over all registered slots. Weight decay is
/// applied as params *= (1 - lr * wd) before the Adam delta.
template <class S>
void adam_step(AdamState<S>& state, std::span<const ParamGradView<S>> views) {
  if (views.size() != state.m.size())
    throw std::invalid_argument("adam_step: slot count mismatch");
  ++state.step;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, double(state.step));
  const double corr2 = 1.0 - std::pow(b2, double(state.step));
  const S lr = S(state.cfg.lr);
  const S eps = S(state.cfg.eps);
  const S decay = S(1.0 - state.cfg.lr * state.cfg.weight_decay);
  for (std::size_t slot = 0; slot < views.size(); ++slot) {
    auto p = views[slot].params;
    auto g = views[slot].grads;
    check_lengths(p.size(), state.m[slot].size(), "adam_step params");
    check_lengths(g.size(), state.m[slot].size(), "adam_step grads");
    S* ms = state.m[slot].data();
    S* vs = state.v[slot].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= decay;
      ms[i] = S(b1) * ms[i] + S(1.0 - b1) * g[i];
      vs[i] = S(b2) * vs[i] + S(1.0 - b2) * g[i] * g[i];
      const S mhat = S(double(ms[i]) / corr1);
      const S vhat = S(double(vs[i]) / corr2);
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

/// Single-array convenience used by the unit tests.
template <class S>
void adam_step(AdamState<S>& state, std::span<S> params, std::span<const S> grads) {
  ParamGradView<S> view{params, grads};
  adam_step(state, std::span<const ParamGradView<S>>(&view, 1));
}

}  // namespace rankae
