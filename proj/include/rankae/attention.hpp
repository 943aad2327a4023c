#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rankae/dataset.hpp"
#include "rankae/layers.hpp"
#include "rankae/tensor.hpp"

namespace rankae {

/// Excitation network of the channel attention: two bias-free linear maps
/// with a ReLU in between, shared across all word positions.
/// f1 is (C/r x C), f2 is (C x C/r).
template <class S>
struct AttentionParams {
  DenseMatrix<S> f1;
  DenseMatrix<S> f2;

  int embed_dim() const { return f2.rows; }
  int reduced_dim() const { return f1.rows; }

  void init(Rng& rng, int embed_dim, int reduction) {
    if (reduction < 1 || embed_dim % reduction != 0)
      throw std::invalid_argument("reduction ratio must divide embedding size");
    const int reduced = embed_dim / reduction;
    f1 = init_params<S>(rng, reduced, embed_dim);
    f2 = init_params<S>(rng, embed_dim, reduced);
  }
};

template <class S>
struct AttentionGrads {
  DenseMatrix<S> f1;
  DenseMatrix<S> f2;

  void match(const AttentionParams<S>& p) {
    f1 = DenseMatrix<S>(p.f1.rows, p.f1.cols);
    f2 = DenseMatrix<S>(p.f2.rows, p.f2.cols);
  }
  void set_zero() {
    f1.set_zero();
    f2.set_zero();
  }
};

/// Per-instance forward cache. Row j of each buffer corresponds to the j-th
/// nonzero feature of the instance, in index order. Buffers are reused
/// across instances by one worker.
template <class S>
struct AttentionWorkspace {
  int n_active = 0;
  int embed_dim = 0;
  int reduced_dim = 0;
  std::vector<int> active;     // feature ids
  std::vector<S> spatial;      // feature values (the spatial weights)
  std::vector<S> weighted;     // n x C, V' = (v_j * e_j)
  std::vector<S> hidden;       // n x C/r, relu(F1 v'_j)
  std::vector<S> attn;         // n x C, A

  S* weighted_row(int j) { return weighted.data() + std::size_t(j) * embed_dim; }
  const S* weighted_row(int j) const {
    return weighted.data() + std::size_t(j) * embed_dim;
  }
  S* hidden_row(int j) { return hidden.data() + std::size_t(j) * reduced_dim; }
  S* attn_row(int j) { return attn.data() + std::size_t(j) * embed_dim; }
  const S* attn_row(int j) const {
    return attn.data() + std::size_t(j) * embed_dim;
  }
};

/// Gathers the embedding rows of the instance's nonzero features and scales
/// each by its feature value. Parameter-free; only active features are
/// touched, so the cost is O(nnz * C) regardless of V.
template <class S>
void spatial_weight(const SparseVector& x, const DenseMatrix<S>& embedding,
                    AttentionWorkspace<S>& ws) {
  const int n = x.nnz();
  const int c = embedding.cols;
  ws.n_active = n;
  ws.embed_dim = c;
  ws.active.assign(x.index.begin(), x.index.end());
  ws.spatial.resize(n);
  ws.weighted.resize(std::size_t(n) * c);
  for (int j = 0; j < n; ++j) {
    const int feature = x.index[j];
    if (feature < 0 || feature >= embedding.rows)
      throw std::invalid_argument("spatial_weight: feature index out of range");
    const S v = S(x.value[j]);
    ws.spatial[j] = v;
    const S* e = embedding.row(feature);
    S* out = ws.weighted_row(j);
    for (int k = 0; k < c; ++k) out[k] = v * e[k];
  }
}

/// a_j = sigmoid(F2 relu(F1 v'_j)), computed independently per active row.
template <class S>
void channel_attention(AttentionWorkspace<S>& ws, const AttentionParams<S>& p) {
  const int c = p.embed_dim();
  const int red = p.reduced_dim();
  if (ws.embed_dim != c)
    throw std::invalid_argument("channel_attention: embedding size mismatch");
  ws.reduced_dim = red;
  ws.hidden.resize(std::size_t(ws.n_active) * red);
  ws.attn.resize(std::size_t(ws.n_active) * c);
  std::vector<S> pre(c);
  for (int j = 0; j < ws.n_active; ++j) {
    const S* v = ws.weighted_row(j);
    S* hid = ws.hidden_row(j);
    for (int i = 0; i < red; ++i) {
      const S* w = p.f1.row(i);
      S acc = 0;
      for (int k = 0; k < c; ++k) acc += w[k] * v[k];
      hid[i] = acc > S(0) ? acc : S(0);
    }
    S* a = ws.attn_row(j);
    for (int i = 0; i < c; ++i) {
      const S* w = p.f2.row(i);
      S acc = 0;
      for (int k = 0; k < red; ++k) acc += w[k] * hid[k];
      a[i] = sigmoid_scalar(acc);
    }
  }
}

/// x' = mean over active rows of V' o A. Zero-feature instances pool to the
/// zero vector.
template <class S>
void rescale_and_pool(const AttentionWorkspace<S>& ws, std::span<S> out) {
  check_lengths(out.size(), std::size_t(ws.embed_dim), "rescale_and_pool out");
  std::fill(out.begin(), out.end(), S(0));
  if (ws.n_active == 0) return;
  for (int j = 0; j < ws.n_active; ++j) {
    const S* v = ws.weighted_row(j);
    const S* a = ws.attn_row(j);
    for (int k = 0; k < ws.embed_dim; ++k) out[k] += v[k] * a[k];
  }
  const S inv = S(1) / S(ws.n_active);
  for (auto& x : out) x *= inv;
}

/// Ablation path: pool V' directly, skipping the channel attention.
template <class S>
void pool_direct(const AttentionWorkspace<S>& ws, std::span<S> out) {
  check_lengths(out.size(), std::size_t(ws.embed_dim), "pool_direct out");
  std::fill(out.begin(), out.end(), S(0));
  if (ws.n_active == 0) return;
  for (int j = 0; j < ws.n_active; ++j) {
    const S* v = ws.weighted_row(j);
    for (int k = 0; k < ws.embed_dim; ++k) out[k] += v[k];
  }
  const S inv = S(1) / S(ws.n_active);
  for (auto& x : out) x *= inv;
}

/// Total attention weight per active feature, sorted descending; equal
/// masses order by lower feature index. Used for the visualization export.
template <class S>
std::vector<std::pair<int, double>> attention_mass(
    const AttentionWorkspace<S>& ws) {
  std::vector<std::pair<int, double>> mass;
  mass.reserve(ws.n_active);
  for (int j = 0; j < ws.n_active; ++j) {
    const S* a = ws.attn_row(j);
    double sum = 0;
    for (int k = 0; k < ws.embed_dim; ++k) sum += double(a[k]);
    mass.emplace_back(ws.active[j], sum);
  }
  std::sort(mass.begin(), mass.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return mass;
}

/// Backward through pooling, the elementwise rescale, both excitation
/// layers and the embedding gather. Gradients for F1/F2 accumulate into
/// `grads`; per-row embedding gradients are handed to `add_embedding_grad`
/// as (feature_index, grad span of length C).
template <class S, class EmbeddingGradFn>
void attention_backward(std::span<const S> grad_pooled,
                        const AttentionWorkspace<S>& ws,
                        const AttentionParams<S>& p, AttentionGrads<S>& grads,
                        EmbeddingGradFn&& add_embedding_grad) {
  if (ws.n_active == 0) return;
  const int c = ws.embed_dim;
  const int red = ws.reduced_dim;
  if (ws.attn.size() != std::size_t(ws.n_active) * c)
    throw std::invalid_argument("attention_backward: missing forward cache");
  check_lengths(grad_pooled.size(), std::size_t(c), "attention_backward grad");

  const S inv = S(1) / S(ws.n_active);
  std::vector<S> grad_v(c), grad_t(c), grad_hidden(red), grad_u(red);
  for (int j = 0; j < ws.n_active; ++j) {
    const S* v = ws.weighted_row(j);
    const S* a = ws.attn_row(j);
    const S* hid = ws.hidden.data() + std::size_t(j) * red;

    // m_j = v'_j o a_j, x' = (1/n) sum m_j
    for (int k = 0; k < c; ++k) {
      const S gm = grad_pooled[k] * inv;
      grad_v[k] = gm * a[k];                          // direct product path
      grad_t[k] = gm * v[k] * a[k] * (S(1) - a[k]);   // through the sigmoid
    }

    // t_j = F2 r_j
    for (int i = 0; i < red; ++i) grad_hidden[i] = S(0);
    for (int i = 0; i < c; ++i) {
      const S g = grad_t[i];
      S* df2 = grads.f2.row(i);
      if (g == S(0)) continue;
      const S* w = p.f2.row(i);
      for (int k = 0; k < red; ++k) {
        df2[k] += g * hid[k];
        grad_hidden[k] += w[k] * g;
      }
    }

    // r_j = relu(u_j); strict subgradient, u_j > 0 iff r_j > 0
    for (int i = 0; i < red; ++i)
      grad_u[i] = hid[i] > S(0) ? grad_hidden[i] : S(0);

    // u_j = F1 v'_j
    for (int i = 0; i < red; ++i) {
      const S g = grad_u[i];
      S* df1 = grads.f1.row(i);
      if (g == S(0)) continue;
      const S* w = p.f1.row(i);
      for (int k = 0; k < c; ++k) {
        df1[k] += g * v[k];
        grad_v[k] += w[k] * g;
      }
    }

    // v'_j = v_j * e_{feature}; scale by the spatial weight
    const S vj = ws.spatial[j];
    for (int k = 0; k < c; ++k) grad_v[k] *= vj;
    add_embedding_grad(ws.active[j], std::span<const S>(grad_v));
  }
}

/// Backward of the no-attention path.
template <class S, class EmbeddingGradFn>
void pool_direct_backward(std::span<const S> grad_pooled,
                          const AttentionWorkspace<S>& ws,
                          EmbeddingGradFn&& add_embedding_grad) {
  if (ws.n_active == 0) return;
  const int c = ws.embed_dim;
  check_lengths(grad_pooled.size(), std::size_t(c), "pool_direct_backward grad");
  const S inv = S(1) / S(ws.n_active);
  std::vector<S> grad_row(c);
  for (int j = 0; j < ws.n_active; ++j) {
    const S vj = ws.spatial[j];
    for (int k = 0; k < c; ++k) grad_row[k] = grad_pooled[k] * inv * vj;
    add_embedding_grad(ws.active[j], std::span<const S>(grad_row));
  }
}

}  // namespace rankae
