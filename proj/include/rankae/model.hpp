#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rankae/adam.hpp"
#include "rankae/attention.hpp"
#include "rankae/dataset.hpp"
#include "rankae/layers.hpp"
#include "rankae/loss.hpp"
#include "rankae/parallel.hpp"
#include "rankae/rng.hpp"
#include "rankae/tensor.hpp"

namespace rankae {

struct ModelConfig {
  int num_features = 0;  // V, set from the training data
  int num_labels = 0;    // L, set from the training data
  int embed_dim = 100;   // C
  int latent_dim = 100;  // h; 200 works better when L is large
  int reduction = 4;     // r
  int hidden_dim = 0;    // g, encoder/decoder intermediate width; 0 = 2h
  double lambda = 1.0;   // balance between the latent and ranking losses
  double margin = 0.6;
  LossKind loss = LossKind::rank;
  int epochs = 100;
  int batch_size = 128;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  bool no_attention = false;
  bool deterministic = false;

  int effective_hidden() const {
    return hidden_dim > 0 ? hidden_dim : 2 * latent_dim;
  }

  void validate() const {
    if (num_features < 1) throw std::invalid_argument("config: V must be >= 1");
    if (num_labels < 1) throw std::invalid_argument("config: L must be >= 1");
    if (embed_dim < 1) throw std::invalid_argument("config: C must be >= 1");
    if (latent_dim < 1) throw std::invalid_argument("config: h must be >= 1");
    if (reduction < 1 || embed_dim % reduction != 0)
      throw std::invalid_argument("config: r must divide C");
    if (lambda < 0) throw std::invalid_argument("config: lambda must be >= 0");
    if (margin < 0 || margin > 1)
      throw std::invalid_argument("config: margin must be in [0,1]");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (batch_size < 1)
      throw std::invalid_argument("config: batch_size must be >= 1");
  }

  AdamConfig adam() const { return {lr, beta1, beta2, adam_eps, weight_decay}; }
};

/// First encoder layer. Its input is the binary label vector, so the weight
/// is stored input-major (L x g): the columns a label selects are then
/// contiguous rows, and both the forward sum and the backward update touch
/// only the rows of the present labels.
template <class S>
struct SparseInputLinear {
  DenseMatrix<S> weight;  // in x out
  std::vector<S> bias;    // out

  int in_dim() const { return weight.rows; }
  int out_dim() const { return weight.cols; }

  void init(Rng& rng, int in, int out) {
    weight = init_params<S>(rng, in, out);
    bias.assign(out, S(0));
  }
};

template <class S>
struct SparseInputGrads {
  DenseMatrix<S> weight;
  std::vector<S> bias;

  void match(const SparseInputLinear<S>& layer) {
    weight = DenseMatrix<S>(layer.weight.rows, layer.weight.cols);
    bias.assign(layer.bias.size(), S(0));
  }
  void set_zero() {
    weight.set_zero();
    std::fill(bias.begin(), bias.end(), S(0));
  }
};

/// All trainable arrays. The traversal order of for_each_array is the
/// canonical parameter order used by the optimizer state and the
/// checkpoint format; do not reorder.
template <class S>
struct ModelParams {
  ModelConfig cfg;
  DenseMatrix<S> embedding;        // V x C
  AttentionParams<S> attention;    // F1 (C/r x C), F2 (C x C/r)
  LinearLayer<S> feature_proj;     // h x C
  SparseInputLinear<S> encoder1;   // L x g
  LinearLayer<S> encoder2;         // h x g
  LinearLayer<S> decoder1;         // g x h
  LinearLayer<S> decoder2;         // L x g

  void init(Rng& rng) {
    cfg.validate();
    const int v = cfg.num_features, l = cfg.num_labels, c = cfg.embed_dim;
    const int h = cfg.latent_dim, g = cfg.effective_hidden();
    embedding = init_params<S>(rng, v, c);
    attention.init(rng, c, cfg.reduction);
    feature_proj.init(rng, h, c);
    encoder1.init(rng, l, g);
    encoder2.init(rng, h, g);
    decoder1.init(rng, g, h);
    decoder2.init(rng, l, g);
  }

  template <class Fn>
  void for_each_array(Fn&& fn) {
    fn("embedding", embedding.data);
    fn("attn_f1", attention.f1.data);
    fn("attn_f2", attention.f2.data);
    fn("feature_w", feature_proj.weight.data);
    fn("feature_b", feature_proj.bias);
    fn("enc1_w", encoder1.weight.data);
    fn("enc1_b", encoder1.bias);
    fn("enc2_w", encoder2.weight.data);
    fn("enc2_b", encoder2.bias);
    fn("dec1_w", decoder1.weight.data);
    fn("dec1_b", decoder1.bias);
    fn("dec2_w", decoder2.weight.data);
    fn("dec2_b", decoder2.bias);
  }
  template <class Fn>
  void for_each_array(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each_array(
        [&](const char* name, auto& data) { fn(name, std::as_const(data)); });
  }
};

/// Gradient buffers mirroring ModelParams. Each minibatch worker owns one;
/// buffers are reduced in worker order. The embedding gradient is dense but
/// tracks which rows were touched so zeroing stays O(active).
template <class S>
struct ModelGrads {
  DenseMatrix<S> embedding;
  std::vector<std::uint8_t> row_touched;
  std::vector<int> touched_rows;
  AttentionGrads<S> attention;
  LinearGrads<S> feature_proj;
  SparseInputGrads<S> encoder1;
  LinearGrads<S> encoder2, decoder1, decoder2;

  void match(const ModelParams<S>& p) {
    embedding = DenseMatrix<S>(p.embedding.rows, p.embedding.cols);
    row_touched.assign(p.embedding.rows, 0);
    touched_rows.clear();
    attention.match(p.attention);
    feature_proj.match(p.feature_proj);
    encoder1.match(p.encoder1);
    encoder2.match(p.encoder2);
    decoder1.match(p.decoder1);
    decoder2.match(p.decoder2);
  }

  void add_embedding_row(int row, std::span<const S> g) {
    if (!row_touched[row]) {
      row_touched[row] = 1;
      touched_rows.push_back(row);
    }
    S* dst = embedding.row(row);
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
  }

  void set_zero() {
    for (int row : touched_rows) {
      S* dst = embedding.row(row);
      std::fill(dst, dst + embedding.cols, S(0));
      row_touched[row] = 0;
    }
    touched_rows.clear();
    attention.set_zero();
    feature_proj.set_zero();
    encoder1.set_zero();
    encoder2.set_zero();
    decoder1.set_zero();
    decoder2.set_zero();
  }

  void add_from(const ModelGrads& other) {
    for (int row : other.touched_rows)
      add_embedding_row(row, std::span<const S>(other.embedding.row(row),
                                                std::size_t(embedding.cols)));
    auto add = [](std::vector<S>& a, const std::vector<S>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(attention.f1.data, other.attention.f1.data);
    add(attention.f2.data, other.attention.f2.data);
    add(feature_proj.weight.data, other.feature_proj.weight.data);
    add(feature_proj.bias, other.feature_proj.bias);
    add(encoder1.weight.data, other.encoder1.weight.data);
    add(encoder1.bias, other.encoder1.bias);
    add(encoder2.weight.data, other.encoder2.weight.data);
    add(encoder2.bias, other.encoder2.bias);
    add(decoder1.weight.data, other.decoder1.weight.data);
    add(decoder1.bias, other.decoder1.bias);
    add(decoder2.weight.data, other.decoder2.weight.data);
    add(decoder2.bias, other.decoder2.bias);
  }

  void scale(S factor) {
    for (int row : touched_rows) {
      S* dst = embedding.row(row);
      for (int k = 0; k < embedding.cols; ++k) dst[k] *= factor;
    }
    auto mul = [factor](std::vector<S>& a) {
      for (auto& x : a) x *= factor;
    };
    mul(attention.f1.data);
    mul(attention.f2.data);
    mul(feature_proj.weight.data);
    mul(feature_proj.bias);
    mul(encoder1.weight.data);
    mul(encoder1.bias);
    mul(encoder2.weight.data);
    mul(encoder2.bias);
    mul(decoder1.weight.data);
    mul(decoder1.bias);
    mul(decoder2.weight.data);
    mul(decoder2.bias);
  }

  template <class Fn>
  void for_each_array(Fn&& fn) {
    fn("embedding", embedding.data);
    fn("attn_f1", attention.f1.data);
    fn("attn_f2", attention.f2.data);
    fn("feature_w", feature_proj.weight.data);
    fn("feature_b", feature_proj.bias);
    fn("enc1_w", encoder1.weight.data);
    fn("enc1_b", encoder1.bias);
    fn("enc2_w", encoder2.weight.data);
    fn("enc2_b", encoder2.bias);
    fn("dec1_w", decoder1.weight.data);
    fn("dec1_b", decoder1.bias);
    fn("dec2_w", decoder2.weight.data);
    fn("dec2_b", decoder2.bias);
  }
};

/// Per-worker scratch for one instance's forward and backward pass.
template <class S>
struct ModelWorkspace {
  AttentionWorkspace<S> attn;
  std::vector<S> pooled;         // C, x'
  std::vector<S> x_h;            // h
  std::vector<S> enc_act1;       // g, post-ReLU
  std::vector<S> y_h;            // h
  std::vector<S> dec_act1;       // g, post-ReLU
  std::vector<S> logits;         // L
  std::vector<S> scores;         // L
  std::vector<S> mse_grad;       // h, d l_h / d x_h
  std::vector<S> grad_scores;    // L
  std::vector<S> grad_logits;    // L
  std::vector<S> grad_dec_act1;  // g
  std::vector<S> grad_dec_pre1;  // g
  std::vector<S> grad_yh;        // h
  std::vector<S> grad_xh;        // h
  std::vector<S> grad_enc_act1;  // g
  std::vector<S> grad_enc_pre1;  // g
  std::vector<S> grad_pooled;    // C

  void resize(const ModelConfig& cfg) {
    const int c = cfg.embed_dim, h = cfg.latent_dim;
    const int g = cfg.effective_hidden(), l = cfg.num_labels;
    pooled.resize(c);
    x_h.resize(h);
    enc_act1.resize(g);
    y_h.resize(h);
    dec_act1.resize(g);
    logits.resize(l);
    scores.resize(l);
    mse_grad.resize(h);
    grad_scores.resize(l);
    grad_logits.resize(l);
    grad_dec_act1.resize(g);
    grad_dec_pre1.resize(g);
    grad_yh.resize(h);
    grad_xh.resize(h);
    grad_enc_act1.resize(g);
    grad_enc_pre1.resize(g);
    grad_pooled.resize(c);
  }
};

/// F(x): spatial weighting, channel attention (unless disabled), average
/// pooling, then the C->h projection. Result in ws.x_h.
template <class S>
void feature_embed(const SparseVector& x, const ModelParams<S>& p,
                   ModelWorkspace<S>& ws) {
  spatial_weight(x, p.embedding, ws.attn);
  if (p.cfg.no_attention) {
    pool_direct(ws.attn, std::span<S>(ws.pooled));
  } else {
    channel_attention(ws.attn, p.attention);
    rescale_and_pool(ws.attn, std::span<S>(ws.pooled));
  }
  linear_forward(p.feature_proj, std::span<const S>(ws.pooled),
                 std::span<S>(ws.x_h));
}

/// E(y): sparse first layer (sum of the rows selected by the positive
/// labels plus bias), ReLU, then g->h. Result in ws.y_h.
template <class S>
void label_encode(const LabelSet& y, const ModelParams<S>& p,
                  ModelWorkspace<S>& ws) {
  const int g = p.encoder1.out_dim();
  std::copy(p.encoder1.bias.begin(), p.encoder1.bias.end(), ws.enc_act1.begin());
  for (int label : y.ids) {
    if (label < 0 || label >= p.encoder1.in_dim())
      throw std::invalid_argument("label_encode: label out of range");
    const S* row = p.encoder1.weight.row(label);
    for (int i = 0; i < g; ++i) ws.enc_act1[i] += row[i];
  }
  relu_forward(std::span<const S>(ws.enc_act1), std::span<S>(ws.enc_act1));
  linear_forward(p.encoder2, std::span<const S>(ws.enc_act1),
                 std::span<S>(ws.y_h));
}

/// D(z): h->g, ReLU, g->L, sigmoid. Result in ws.scores.
template <class S>
void label_decode(std::span<const S> z, const ModelParams<S>& p,
                  ModelWorkspace<S>& ws) {
  linear_forward(p.decoder1, z, std::span<S>(ws.dec_act1));
  relu_forward(std::span<const S>(ws.dec_act1), std::span<S>(ws.dec_act1));
  linear_forward(p.decoder2, std::span<const S>(ws.dec_act1),
                 std::span<S>(ws.logits));
  sigmoid_forward(std::span<const S>(ws.logits), std::span<S>(ws.scores));
}

/// Inference scoring: D(F(x)).
template <class S>
void score_instance(const SparseVector& x, const ModelParams<S>& p,
                    ModelWorkspace<S>& ws) {
  feature_embed(x, p, ws);
  label_decode(std::span<const S>(ws.x_h), p, ws);
}

struct InstanceLoss {
  double l_h = 0;
  double l_ae = 0;
  bool skipped = false;  // rank loss had an empty positive or negative set
};

/// One training example: x_h = F(x), y_h = E(y), y' = D(y_h); the
/// reconstruction is decoded from the label embedding while training.
/// loss = l_h(x_h, y_h) + lambda * l_ae(y, y'). Gradients accumulate into
/// `grads`. `lh_weight` scales the latent-alignment gradient only (its loss
/// value is always reported); it exists so tests can detach that term.
template <class S>
InstanceLoss instance_forward_backward(const Instance& inst,
                                       const ModelParams<S>& p,
                                       ModelGrads<S>& grads,
                                       ModelWorkspace<S>& ws,
                                       S lh_weight = S(1)) {
  const ModelConfig& cfg = p.cfg;
  feature_embed(inst.features, p, ws);
  label_encode(inst.labels, p, ws);
  label_decode(std::span<const S>(ws.y_h), p, ws);

  InstanceLoss out;
  out.l_h = double(mse_loss(std::span<const S>(ws.x_h), std::span<const S>(ws.y_h),
                            std::span<S>(ws.mse_grad)));
  if (cfg.loss == LossKind::rank) {
    out.l_ae = double(rank_loss(inst.labels, std::span<const S>(ws.scores),
                                S(cfg.margin), std::span<S>(ws.grad_scores)));
    out.skipped =
        inst.labels.empty() || inst.labels.size() == cfg.num_labels;
  } else {
    out.l_ae = double(bce_loss(inst.labels, std::span<const S>(ws.scores),
                               std::span<S>(ws.grad_scores)));
  }

  // Decoder chain, only when the ranking term actually contributes.
  if (cfg.lambda != 0.0) {
    const S lam = S(cfg.lambda);
    for (auto& g : ws.grad_scores) g *= lam;
    sigmoid_backward(std::span<const S>(ws.scores),
                     std::span<const S>(ws.grad_scores),
                     std::span<S>(ws.grad_logits));
    linear_backward(p.decoder2, grads.decoder2, std::span<const S>(ws.dec_act1),
                    std::span<const S>(ws.grad_logits),
                    std::span<S>(ws.grad_dec_act1));
    relu_backward(std::span<const S>(ws.dec_act1),
                  std::span<const S>(ws.grad_dec_act1),
                  std::span<S>(ws.grad_dec_pre1));
    linear_backward(p.decoder1, grads.decoder1, std::span<const S>(ws.y_h),
                    std::span<const S>(ws.grad_dec_pre1),
                    std::span<S>(ws.grad_yh));
  } else {
    std::fill(ws.grad_yh.begin(), ws.grad_yh.end(), S(0));
  }

  // l_h pulls x_h and y_h together; both sides receive its gradient.
  for (std::size_t i = 0; i < ws.grad_yh.size(); ++i)
    ws.grad_yh[i] -= lh_weight * ws.mse_grad[i];
  for (std::size_t i = 0; i < ws.grad_xh.size(); ++i)
    ws.grad_xh[i] = lh_weight * ws.mse_grad[i];

  // Encoder.
  linear_backward(p.encoder2, grads.encoder2, std::span<const S>(ws.enc_act1),
                  std::span<const S>(ws.grad_yh), std::span<S>(ws.grad_enc_act1));
  relu_backward(std::span<const S>(ws.enc_act1),
                std::span<const S>(ws.grad_enc_act1),
                std::span<S>(ws.grad_enc_pre1));
  for (int label : inst.labels.ids) {
    S* dw = grads.encoder1.weight.row(label);
    for (std::size_t i = 0; i < ws.grad_enc_pre1.size(); ++i)
      dw[i] += ws.grad_enc_pre1[i];
  }
  for (std::size_t i = 0; i < ws.grad_enc_pre1.size(); ++i)
    grads.encoder1.bias[i] += ws.grad_enc_pre1[i];

  // Feature path.
  linear_backward(p.feature_proj, grads.feature_proj,
                  std::span<const S>(ws.pooled), std::span<const S>(ws.grad_xh),
                  std::span<S>(ws.grad_pooled));
  auto add_row = [&grads](int row, std::span<const S> g) {
    grads.add_embedding_row(row, g);
  };
  if (cfg.no_attention) {
    pool_direct_backward(std::span<const S>(ws.grad_pooled), ws.attn, add_row);
  } else {
    attention_backward(std::span<const S>(ws.grad_pooled), ws.attn, p.attention,
                       grads.attention, add_row);
  }
  return out;
}

struct EpochStats {
  int epoch = 0;
  double mean_lh = 0;
  double mean_lae = 0;
  double total = 0;
  double val_p1 = 0;
  double seconds = 0;
  long skipped = 0;  // instances whose rank loss had empty P or N
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_p1 = 0;
};

/// epoch,l_h,l_ae,total,val_p1,seconds
void write_train_report_csv(std::ostream& out, const TrainReport& report);

/// Fraction of instances whose top-scored label is a true positive.
template <class S>
double validation_p1(const ModelParams<S>& p, const Dataset& data,
                     ThreadPool& pool) {
  if (data.instances.empty()) return 0.0;
  std::vector<long> correct(pool.size(), 0);
  pool.for_blocks(data.num_instances(), [&](int w, long begin, long end) {
    ModelWorkspace<S> ws;
    ws.resize(p.cfg);
    for (long i = begin; i < end; ++i) {
      const Instance& inst = data.instances[i];
      score_instance(inst.features, p, ws);
      int best = 0;
      for (int l = 1; l < p.cfg.num_labels; ++l)
        if (ws.scores[l] > ws.scores[best]) best = l;
      if (inst.labels.contains(best)) ++correct[w];
    }
  });
  long total = std::accumulate(correct.begin(), correct.end(), 0L);
  return double(total) / double(data.num_instances());
}

/// Minibatch training of the full objective. Per-instance losses are
/// averaged over the batch, one Adam step per batch. After every epoch the
/// validation P@1 is evaluated and the best-scoring parameters are kept;
/// those are what the function returns.
///
/// Instances within a batch fan out across the pool's workers; each worker
/// accumulates into its own gradient buffer and buffers are reduced in
/// worker order, so results are reproducible for a fixed thread count.
template <class S>
std::pair<ModelParams<S>, TrainReport> train(const Dataset& train_set,
                                             const Dataset& valid_set,
                                             const ModelConfig& cfg,
                                             ThreadPool& pool,
                                             const EmbeddingTable* pretrained = nullptr,
                                             std::ostream* log = nullptr,
                                             S lh_weight = S(1)) {
  cfg.validate();
  if (train_set.num_features != cfg.num_features ||
      train_set.num_labels != cfg.num_labels)
    throw std::invalid_argument("train: dataset dimensions do not match config");
  if (train_set.instances.empty())
    throw std::invalid_argument("train: empty training set");

  ModelParams<S> params;
  params.cfg = cfg;
  Rng rng(cfg.seed);
  params.init(rng);
  if (pretrained != nullptr) {
    if (pretrained->rows != cfg.num_features || pretrained->cols != cfg.embed_dim)
      throw std::invalid_argument("train: pretrained embedding shape mismatch");
    for (std::size_t i = 0; i < params.embedding.data.size(); ++i)
      params.embedding.data[i] = S(pretrained->data[i]);
  }

  AdamState<S> adam(cfg.adam());
  params.for_each_array(
      [&](const char*, const std::vector<S>& data) { adam.add_slot(data.size()); });

  const int workers = pool.size();
  std::vector<ModelGrads<S>> grads(workers);
  for (auto& g : grads) g.match(params);
  std::vector<ModelWorkspace<S>> workspaces(workers);
  for (auto& ws : workspaces) ws.resize(cfg);

  const int n = train_set.num_instances();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  ModelParams<S> best = params;
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    shuffle(order, rng);

    double sum_lh = 0, sum_lae = 0;
    long skipped = 0;
    int batch_index = 0;
    for (int start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const int batch_n = std::min(cfg.batch_size, n - start);
      std::vector<double> w_lh(workers, 0), w_lae(workers, 0);
      std::vector<long> w_skip(workers, 0);
      pool.for_blocks(batch_n, [&](int w, long begin, long end) {
        for (long i = begin; i < end; ++i) {
          const Instance& inst = train_set.instances[order[start + i]];
          InstanceLoss loss = instance_forward_backward(inst, params, grads[w],
                                                        workspaces[w], lh_weight);
          w_lh[w] += loss.l_h;
          w_lae[w] += loss.l_ae;
          if (loss.skipped) ++w_skip[w];
        }
      });
      double batch_lh = 0, batch_lae = 0;
      for (int w = 0; w < workers; ++w) {
        batch_lh += w_lh[w];
        batch_lae += w_lae[w];
        skipped += w_skip[w];
        if (w > 0) grads[0].add_from(grads[w]);
      }
      if (!std::isfinite(batch_lh) || !std::isfinite(batch_lae))
        throw std::runtime_error("non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      sum_lh += batch_lh;
      sum_lae += batch_lae;

      grads[0].scale(S(1) / S(batch_n));
      std::vector<ParamGradView<S>> views;
      views.reserve(13);
      params.for_each_array([&](const char*, std::vector<S>& data) {
        views.push_back({std::span<S>(data), std::span<const S>()});
      });
      std::size_t slot = 0;
      grads[0].for_each_array([&](const char*, std::vector<S>& data) {
        views[slot++].grads = std::span<const S>(data);
      });
      adam_step(adam, std::span<const ParamGradView<S>>(views));
      for (auto& g : grads) g.set_zero();
#ifndef NDEBUG
      params.for_each_array([](const char*, const std::vector<S>& data) {
        debug_check_finite(std::span<const S>(data));
      });
#endif
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_lh = sum_lh / double(n);
    stats.mean_lae = sum_lae / double(n);
    stats.total = stats.mean_lh + cfg.lambda * stats.mean_lae;
    stats.val_p1 = validation_p1(params, valid_set, pool);
    stats.skipped = skipped;
    stats.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - epoch_start)
                        .count();
    report.epochs.push_back(stats);

    const bool no_validation = valid_set.instances.empty();
    if (!have_best || stats.val_p1 > report.best_val_p1 || no_validation) {
      have_best = true;
      report.best_val_p1 = stats.val_p1;
      report.best_epoch = epoch;
      best = params;
    }

    if (log != nullptr) {
      (*log) << "epoch " << epoch << "  l_h " << stats.mean_lh << "  l_ae "
             << stats.mean_lae << "  total " << stats.total << "  val_p1 "
             << stats.val_p1;
      if (skipped > 0) (*log) << "  skipped " << skipped;
      (*log) << "  (" << stats.seconds << "s)\n";
    }
  }

  return {std::move(best), std::move(report)};
}

/// Top-k labels by decoded score, ties broken toward the lower label index.
template <class S>
std::vector<std::pair<int, S>> predict(const SparseVector& x,
                                       const ModelParams<S>& p, int k) {
  if (k < 1) throw std::invalid_argument("predict: k must be >= 1");
  if (k > p.cfg.num_labels)
    throw std::invalid_argument("predict: k exceeds the number of labels");
  ModelWorkspace<S> ws;
  ws.resize(p.cfg);
  score_instance(x, p, ws);

  std::vector<int> idx(p.cfg.num_labels);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (ws.scores[a] != ws.scores[b]) return ws.scores[a] > ws.scores[b];
    return a < b;
  });
  std::vector<std::pair<int, S>> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.emplace_back(idx[i], ws.scores[idx[i]]);
  return out;
}

}  // namespace rankae
