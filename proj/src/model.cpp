// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace phonmt {

// ---------------------------------------------------------------------------
// Configuration

void ModelConfig::validate() const {
  if (layers < 1) throw Error("config: layers must be >= 1");
  if (heads < 1 || model_dim < 1 || model_dim % heads != 0) {
    throw Error("config: model_dim (" + std::to_string(model_dim) + ") must be divisible by heads (" +
                std::to_string(heads) + ")");
  }
  if (ff_dim < 1) throw Error("config: ff_dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("config: dropout must lie in [0, 1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw Error("config: label_smoothing must lie in [0, 1)");
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error("config: beta must lie in [0, 1]");
  if (max_len < 1) throw Error("config: max_len must be >= 1");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw Error("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw Error("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error("config: bad number for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw Error("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "layers=" << layers << '\n'
     << "heads=" << heads << '\n'
     << "model_dim=" << model_dim << '\n'
     << "ff_dim=" << ff_dim << '\n'
     << "dropout=" << format_double(dropout) << '\n'
     << "label_smoothing=" << format_double(label_smoothing) << '\n'
     << "max_len=" << max_len << '\n'
     << "beta=" << format_double(beta) << '\n'
     << "char_level=" << (char_level ? 1 : 0) << '\n'
     << "scale_embeddings=" << (scale_embeddings ? 1 : 0) << '\n'
     << "seed=" << seed << '\n';
  return os.str();
}

bool ModelConfig::set(const std::string& key, const std::string& value) {
  if (key == "layers") layers = parse_size(key, value);
  else if (key == "heads") heads = parse_size(key, value);
  else if (key == "model_dim") model_dim = parse_size(key, value);
  else if (key == "ff_dim") ff_dim = parse_size(key, value);
  else if (key == "dropout") dropout = parse_double(key, value);
  else if (key == "label_smoothing") label_smoothing = parse_double(key, value);
  else if (key == "max_len") max_len = parse_size(key, value);
  else if (key == "beta") beta = parse_double(key, value);
  else if (key == "char_level") char_level = parse_bool(key, value);
  else if (key == "scale_embeddings") scale_embeddings = parse_bool(key, value);
  else if (key == "seed") seed = parse_u64(key, value);
  else return false;
  return true;
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  for (const auto& [k, v] : kv) c.set(k, v);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Shapes and initialization

namespace {

template <typename T>
Linear<T> shaped_linear(std::size_t in, std::size_t out) {
  return Linear<T>{Tensor<T>::matrix(in, out), Tensor<T>::vector(out)};
}

template <typename T>
LayerNorm<T> shaped_norm(std::size_t d) {
  return LayerNorm<T>{Tensor<T>({d}, T{1}), Tensor<T>::vector(d)};
}

template <typename T>
Attention<T> shaped_attention(std::size_t d) {
  return Attention<T>{shaped_linear<T>(d, d), Projection<T>{Tensor<T>::matrix(d, d)}, shaped_linear<T>(d, d),
                      shaped_linear<T>(d, d)};
}

template <typename T>
FeedForward<T> shaped_ff(std::size_t d, std::size_t ff) {
  return FeedForward<T>{shaped_linear<T>(d, ff), shaped_linear<T>(ff, d)};
}

bool is_bias_like(const std::string& name) { return name.ends_with(".bias"); }
bool is_gain(const std::string& name) { return name.ends_with(".gain"); }

constexpr double kLayerNormEps = 1e-5;

}  // namespace

template <typename T>
Weights<T> shaped_weights(const ModelConfig& config, std::size_t src_vocab, std::size_t tgt_vocab,
                          std::size_t syllables) {
  config.validate();
  if (src_vocab == 0 || tgt_vocab == 0) throw Error("model vocabularies must be nonempty");
  if (syllables == 0) throw Error("syllable inventory must contain <unk>");
  const std::size_t d = config.model_dim;
  Weights<T> w;
  w.source.word_table = Tensor<T>::matrix(src_vocab, d);
  w.source.pinyin_table = Tensor<T>::matrix(syllables, d);
  w.source.beta = config.beta;
  w.target_embed = Tensor<T>::matrix(tgt_vocab, d);
  for (std::size_t i = 0; i < config.layers; ++i) {
    w.encoder.push_back(EncoderLayer<T>{shaped_norm<T>(d), shaped_attention<T>(d), shaped_norm<T>(d),
                                        shaped_ff<T>(d, config.ff_dim)});
    w.decoder.push_back(DecoderLayer<T>{shaped_norm<T>(d), shaped_attention<T>(d), shaped_norm<T>(d),
                                        shaped_attention<T>(d), shaped_norm<T>(d), shaped_ff<T>(d, config.ff_dim)});
  }
  w.encoder_norm = shaped_norm<T>(d);
  w.decoder_norm = shaped_norm<T>(d);
  w.output = shaped_linear<T>(d, tgt_vocab);
  return w;
}

std::size_t parameter_count(const ModelConfig& config, std::size_t src_vocab, std::size_t tgt_vocab,
                            std::size_t syllables) {
  const std::size_t d = config.model_dim, f = config.ff_dim, l = config.layers;
  const std::size_t norm = 2 * d;
  const std::size_t attn = 4 * d * d + 3 * d;
  const std::size_t ff = d * f + f + f * d + d;
  return src_vocab * d + syllables * d + tgt_vocab * d + l * (2 * norm + attn + ff) + norm +
         l * (3 * norm + 2 * attn + ff) + norm + d * tgt_vocab + tgt_vocab;
}

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config, std::size_t src_vocab, std::size_t tgt_vocab,
                            std::size_t syllables)
    : Transformer(config, shaped_weights<T>(config, src_vocab, tgt_vocab, syllables)) {
  Rng rng(derive_seed(config.seed, 0x1D17));
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.model_dim));
  weights_.visit([&](const std::string& name, Tensor<T>& t) {
    if (is_gain(name)) {
      t.fill(T{1});
    } else if (is_bias_like(name)) {
      t.zero();
    } else {
      for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    }
  });
}

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config, Weights<T> weights)
    : config_(config), weights_(std::move(weights)) {
  config_.validate();
  weights_.source.beta = config_.beta;
  weights_.source.validate();
  const std::size_t d = config_.model_dim;
  if (weights_.source.width() != d || weights_.target_embed.cols() != d) throw Error("model width mismatch");
  if (weights_.encoder.size() != config_.layers || weights_.decoder.size() != config_.layers) {
    throw Error("model layer count mismatch");
  }
  const std::size_t rows = config_.max_len + 2;
  positions_ = Tensor<T>::matrix(rows, d);
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; i < d; i += 2) {
      const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      positions_(pos, i) = static_cast<T>(std::sin(angle));
      if (i + 1 < d) positions_(pos, i + 1) = static_cast<T>(std::cos(angle));
    }
  }
}

template <typename T>
std::size_t Transformer<T>::parameter_count() const {
  std::size_t n = 0;
  const_cast<Weights<T>&>(weights_).visit([&n](const std::string&, Tensor<T>& t) { n += t.size(); });
  return n;
}

template <typename T>
void Transformer<T>::set_beta(double beta) {
  config_.beta = beta;
  config_.validate();
  weights_.source.beta = beta;
}

template <typename T>
Weights<T> Transformer<T>::zero_grads() const {
  Weights<T> g = shaped_weights<T>(config_, src_vocab_size(), tgt_vocab_size(), syllable_count());
  g.zero();
  return g;
}

// ---------------------------------------------------------------------------
// Layer kernels

namespace {

template <typename T>
Tensor<T> linear_forward(const Linear<T>& l, const Tensor<T>& x) {
  Tensor<T> y;
  ops::matmul(x, l.weight, y);
  ops::add_row_vector(y, l.bias);
  return y;
}

template <typename T>
Tensor<T> linear_forward(const Projection<T>& l, const Tensor<T>& x) {
  Tensor<T> y;
  ops::matmul(x, l.weight, y);
  return y;
}

template <typename T>
void linear_backward(const Projection<T>& l, const Tensor<T>& x, const Tensor<T>& dy, Projection<T>* g, Tensor<T>* dx) {
  if (g) ops::matmul_tn_acc(x, dy, g->weight);
  if (dx) ops::matmul_nt_acc(dy, l.weight, *dx);
}

// Accumulates weight/bias gradients and, when dx is set, dx += dy * W^T.
template <typename T>
void linear_backward(const Linear<T>& l, const Tensor<T>& x, const Tensor<T>& dy, Linear<T>* g, Tensor<T>* dx) {
  if (g) {
    ops::matmul_tn_acc(x, dy, g->weight);
    ops::sum_rows_acc(dy, g->bias);
  }
  if (dx) ops::matmul_nt_acc(dy, l.weight, *dx);
}

template <typename T>
struct NormCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;
};

template <typename T>
Tensor<T> norm_forward(const LayerNorm<T>& ln, const Tensor<T>& x, NormCache<T>& c) {
  const std::size_t n = x.rows(), d = x.cols();
  Tensor<T> y = Tensor<T>::matrix(n, d);
  c.xhat = Tensor<T>::matrix(n, d);
  c.inv_std.assign(n, T{});
  for (std::size_t i = 0; i < n; ++i) {
    auto xr = x.row(i);
    T mean{};
    for (T v : xr) mean += v;
    mean /= static_cast<T>(d);
    T var{};
    for (T v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<T>(d);
    const T inv = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEps));
    c.inv_std[i] = inv;
    auto hr = c.xhat.row(i);
    auto yr = y.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      hr[j] = (xr[j] - mean) * inv;
      yr[j] = hr[j] * ln.gain[j] + ln.bias[j];
    }
  }
  return y;
}

template <typename T>
void norm_backward(const LayerNorm<T>& ln, const NormCache<T>& c, const Tensor<T>& dy, LayerNorm<T>* g,
                   Tensor<T>& dx) {
  const std::size_t n = dy.rows(), d = dy.cols();
  std::vector<T> dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto dyr = dy.row(i);
    auto hr = c.xhat.row(i);
    T mean_d{}, mean_dh{};
    for (std::size_t j = 0; j < d; ++j) {
      if (g) {
        g->gain[j] += dyr[j] * hr[j];
        g->bias[j] += dyr[j];
      }
      dxhat[j] = dyr[j] * ln.gain[j];
      mean_d += dxhat[j];
      mean_dh += dxhat[j] * hr[j];
    }
    mean_d /= static_cast<T>(d);
    mean_dh /= static_cast<T>(d);
    auto dxr = dx.row(i);
    for (std::size_t j = 0; j < d; ++j) dxr[j] += c.inv_std[i] * (dxhat[j] - mean_d - hr[j] * mean_dh);
  }
}

template <typename T>
struct AttnCache {
  Tensor<T> query_in, kv_in;
  Tensor<T> q, k, v;
  Tensor<T> probs;  // (heads * nq) x nk
  Tensor<T> context;
};

template <typename T>
Tensor<T> attn_forward(const Attention<T>& a, std::size_t heads, const Tensor<T>& query_in, const Tensor<T>& kv_in,
                       bool causal, AttnCache<T>& c) {
  const std::size_t nq = query_in.rows(), nk = kv_in.rows(), d = query_in.cols();
  const std::size_t dk = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));
  c.query_in = query_in;
  c.kv_in = kv_in;
  c.q = linear_forward(a.query, query_in);
  c.k = linear_forward(a.key, kv_in);
  c.v = linear_forward(a.value, kv_in);
  c.probs = Tensor<T>::matrix(heads * nq, nk);
  c.context = Tensor<T>::matrix(nq, d);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < nq; ++i) {
      auto p = c.probs.row(h * nq + i);
      const std::size_t visible = causal ? std::min(i + 1, nk) : nk;
      const T* qi = c.q.data() + i * d + off;
      for (std::size_t j = 0; j < visible; ++j) {
        const T* kj = c.k.data() + j * d + off;
        T s{};
        for (std::size_t t = 0; t < dk; ++t) s += qi[t] * kj[t];
        p[j] = s * scale;
      }
      ops::softmax_inplace(p.subspan(0, visible));
      T* ctx = c.context.data() + i * d + off;
      for (std::size_t j = 0; j < visible; ++j) {
        const T pj = p[j];
        const T* vj = c.v.data() + j * d + off;
        for (std::size_t t = 0; t < dk; ++t) ctx[t] += pj * vj[t];
      }
    }
  }
  return linear_forward(a.output, c.context);
}

// Accumulates into d_query_in and d_kv_in (which may alias for self-attention).
template <typename T>
void attn_backward(const Attention<T>& a, std::size_t heads, const AttnCache<T>& c, const Tensor<T>& dout,
                   Attention<T>* g, Tensor<T>& d_query_in, Tensor<T>& d_kv_in) {
  const std::size_t nq = c.query_in.rows(), nk = c.kv_in.rows(), d = c.query_in.cols();
  const std::size_t dk = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));

  Tensor<T> dctx = Tensor<T>::matrix(nq, d);
  linear_backward(a.output, c.context, dout, g ? &g->output : nullptr, &dctx);

  Tensor<T> dq = Tensor<T>::matrix(nq, d), dk_t = Tensor<T>::matrix(nk, d), dv = Tensor<T>::matrix(nk, d);
  std::vector<T> dp(nk);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < nq; ++i) {
      auto p = c.probs.row(h * nq + i);
      const T* dci = dctx.data() + i * d + off;
      T dot{};
      for (std::size_t j = 0; j < nk; ++j) {
        if (p[j] == T{0}) {
          dp[j] = T{0};
          continue;
        }
        const T* vj = c.v.data() + j * d + off;
        T* dvj = dv.data() + j * d + off;
        T s{};
        for (std::size_t t = 0; t < dk; ++t) {
          s += dci[t] * vj[t];
          dvj[t] += p[j] * dci[t];
        }
        dp[j] = s;
        dot += p[j] * s;
      }
      const T* qi = c.q.data() + i * d + off;
      T* dqi = dq.data() + i * d + off;
      for (std::size_t j = 0; j < nk; ++j) {
        if (p[j] == T{0}) continue;
        const T ds = p[j] * (dp[j] - dot) * scale;
        const T* kj = c.k.data() + j * d + off;
        T* dkj = dk_t.data() + j * d + off;
        for (std::size_t t = 0; t < dk; ++t) {
          dqi[t] += ds * kj[t];
          dkj[t] += ds * qi[t];
        }
      }
    }
  }
  linear_backward(a.query, c.query_in, dq, g ? &g->query : nullptr, &d_query_in);
  linear_backward(a.key, c.kv_in, dk_t, g ? &g->key : nullptr, &d_kv_in);
  linear_backward(a.value, c.kv_in, dv, g ? &g->value : nullptr, &d_kv_in);
}

// Exact GELU, x * Phi(x).
template <typename T>
T gelu(T x) {
  const double v = static_cast<double>(x);
  return static_cast<T>(0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)));
}

template <typename T>
T gelu_grad(T x) {
  const double v = static_cast<double>(x);
  const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * v * v) * 0.5 * M_2_SQRTPI * M_SQRT1_2;
  return static_cast<T>(cdf + v * pdf);
}

template <typename T>
struct FfCache {
  Tensor<T> input;
  Tensor<T> pre;   // pre-activation
  Tensor<T> act;   // gelu(pre)
};

template <typename T>
Tensor<T> ff_forward(const FeedForward<T>& f, const Tensor<T>& x, FfCache<T>& c) {
  c.input = x;
  c.pre = linear_forward(f.inner, x);
  c.act = c.pre;
  for (auto& v : c.act.values()) v = gelu(v);
  return linear_forward(f.outer, c.act);
}

template <typename T>
void ff_backward(const FeedForward<T>& f, const FfCache<T>& c, const Tensor<T>& dy, FeedForward<T>* g, Tensor<T>& dx) {
  Tensor<T> dact = Tensor<T>::matrix(c.act.rows(), c.act.cols());
  linear_backward(f.outer, c.act, dy, g ? &g->outer : nullptr, &dact);
  for (std::size_t i = 0; i < dact.size(); ++i) {
    dact[i] *= gelu_grad(c.pre[i]);
  }
  linear_backward(f.inner, c.input, dact, g ? &g->inner : nullptr, &dx);
}

template <typename T>
void apply_mask(Tensor<T>& x, const Tensor<T>& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask[i];
}

template <typename T>
Tensor<T> masked(const Tensor<T>& x, const Tensor<T>& mask) {
  Tensor<T> out = x;
  apply_mask(out, mask);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward/backward pass

template <typename T>
struct Transformer<T>::Pass {
  struct EncLayer {
    NormCache<T> self_norm;
    AttnCache<T> attn;
    Tensor<T> attn_mask;
    NormCache<T> ff_norm;
    FfCache<T> ff;
    Tensor<T> ff_mask;
  };
  struct DecLayer {
    NormCache<T> self_norm;
    AttnCache<T> self_attn;
    Tensor<T> self_mask;
    NormCache<T> cross_norm;
    AttnCache<T> cross_attn;
    Tensor<T> cross_mask;
    NormCache<T> ff_norm;
    FfCache<T> ff;
    Tensor<T> ff_mask;
  };

  explicit Pass(const Transformer& m, Rng* r = nullptr) : model(m), rng(r) {}

  const Transformer& model;
  Rng* rng = nullptr;

  Tensor<T> src_mask;
  std::vector<EncLayer> enc;
  NormCache<T> enc_norm;
  Tensor<T> memory;

  Tensor<T> tgt_mask;
  std::vector<DecLayer> dec;
  NormCache<T> dec_norm;
  Tensor<T> dec_out;  // normalized decoder output
  Tensor<T> logits;

  Tensor<T> mask_for(const Tensor<T>& x) {
    if (!rng || model.config_.dropout <= 0.0) return {};
    return dropout_mask<T>(x.dims(), model.config_.dropout, *rng);
  }

  T embed_scale() const {
    return model.config_.scale_embeddings ? static_cast<T>(std::sqrt(static_cast<double>(model.config_.model_dim)))
                                          : T{1};
  }

  void encode(const EncodedSentence& source) {
    const auto& w = model.weights_;
    const std::size_t heads = model.config_.heads;
    Tensor<T> x = embed_source_sequence(source, w.source);
    const T s = embed_scale();
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto r = x.row(i);
      auto pe = model.positions_.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] = r[j] * s + pe[j];
    }
    src_mask = mask_for(x);
    apply_mask(x, src_mask);

    enc.assign(w.encoder.size(), EncLayer{});
    for (std::size_t l = 0; l < w.encoder.size(); ++l) {
      const auto& layer = w.encoder[l];
      auto& c = enc[l];
      Tensor<T> h = norm_forward(layer.self_norm, x, c.self_norm);
      Tensor<T> a = attn_forward(layer.self_attn, heads, h, h, false, c.attn);
      c.attn_mask = mask_for(a);
      apply_mask(a, c.attn_mask);
      ops::add_inplace(x, a);
      h = norm_forward(layer.ff_norm, x, c.ff_norm);
      Tensor<T> f = ff_forward(layer.ff, h, c.ff);
      c.ff_mask = mask_for(f);
      apply_mask(f, c.ff_mask);
      ops::add_inplace(x, f);
    }
    memory = norm_forward(w.encoder_norm, x, enc_norm);
  }

  void decode(std::span<const TokenId> prefix) {
    const auto& w = model.weights_;
    const std::size_t heads = model.config_.heads;
    const std::size_t m = prefix.size(), d = model.config_.model_dim;
    Tensor<T> y = Tensor<T>::matrix(m, d);
    const T s = embed_scale();
    for (std::size_t i = 0; i < m; ++i) {
      auto e = w.target_embed.row(prefix[i]);
      auto pe = model.positions_.row(i);
      auto r = y.row(i);
      for (std::size_t j = 0; j < d; ++j) r[j] = e[j] * s + pe[j];
    }
    tgt_mask = mask_for(y);
    apply_mask(y, tgt_mask);

    dec.assign(w.decoder.size(), DecLayer{});
    for (std::size_t l = 0; l < w.decoder.size(); ++l) {
      const auto& layer = w.decoder[l];
      auto& c = dec[l];
      Tensor<T> h = norm_forward(layer.self_norm, y, c.self_norm);
      Tensor<T> a = attn_forward(layer.self_attn, heads, h, h, true, c.self_attn);
      c.self_mask = mask_for(a);
      apply_mask(a, c.self_mask);
      ops::add_inplace(y, a);
      h = norm_forward(layer.cross_norm, y, c.cross_norm);
      a = attn_forward(layer.cross_attn, heads, h, memory, false, c.cross_attn);
      c.cross_mask = mask_for(a);
      apply_mask(a, c.cross_mask);
      ops::add_inplace(y, a);
      h = norm_forward(layer.ff_norm, y, c.ff_norm);
      Tensor<T> f = ff_forward(layer.ff, h, c.ff);
      c.ff_mask = mask_for(f);
      apply_mask(f, c.ff_mask);
      ops::add_inplace(y, f);
    }
    dec_out = norm_forward(w.decoder_norm, y, dec_norm);
    logits = linear_forward(w.output, dec_out);
  }

  void backward(const EncodedSentence& source, std::span<const TokenId> prefix, const Tensor<T>& dlogits,
                Weights<T>& g) {
    const auto& w = model.weights_;
    const std::size_t heads = model.config_.heads;
    const std::size_t d = model.config_.model_dim;
    const T s = embed_scale();

    // Decoder.
    Tensor<T> ddec = Tensor<T>::matrix(dlogits.rows(), d);
    linear_backward(w.output, dec_out, dlogits, &g.output, &ddec);
    Tensor<T> dy = Tensor<T>::matrix(ddec.rows(), d);
    norm_backward(w.decoder_norm, dec_norm, ddec, &g.decoder_norm, dy);
    Tensor<T> dmemory = Tensor<T>::matrix(memory.rows(), d);

    for (std::size_t l = w.decoder.size(); l-- > 0;) {
      const auto& layer = w.decoder[l];
      auto& gl = g.decoder[l];
      auto& c = dec[l];
      // y = y2 + drop(ff(norm(y2)))
      Tensor<T> dh = Tensor<T>::matrix(dy.rows(), d);
      ff_backward(layer.ff, c.ff, masked(dy, c.ff_mask), &gl.ff, dh);
      norm_backward(layer.ff_norm, c.ff_norm, dh, &gl.ff_norm, dy);
      // y2 = y1 + drop(cross(norm(y1), memory))
      dh = Tensor<T>::matrix(dy.rows(), d);
      attn_backward(layer.cross_attn, heads, c.cross_attn, masked(dy, c.cross_mask), &gl.cross_attn, dh, dmemory);
      norm_backward(layer.cross_norm, c.cross_norm, dh, &gl.cross_norm, dy);
      // y1 = y0 + drop(self(norm(y0)))
      dh = Tensor<T>::matrix(dy.rows(), d);
      attn_backward(layer.self_attn, heads, c.self_attn, masked(dy, c.self_mask), &gl.self_attn, dh, dh);
      norm_backward(layer.self_norm, c.self_norm, dh, &gl.self_norm, dy);
    }
    apply_mask(dy, tgt_mask);
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      auto gr = g.target_embed.row(prefix[i]);
      auto r = dy.row(i);
      for (std::size_t j = 0; j < d; ++j) gr[j] += r[j] * s;
    }

    // Encoder.
    Tensor<T> dx = Tensor<T>::matrix(dmemory.rows(), d);
    norm_backward(w.encoder_norm, enc_norm, dmemory, &g.encoder_norm, dx);
    for (std::size_t l = w.encoder.size(); l-- > 0;) {
      const auto& layer = w.encoder[l];
      auto& gl = g.encoder[l];
      auto& c = enc[l];
      Tensor<T> dh = Tensor<T>::matrix(dx.rows(), d);
      ff_backward(layer.ff, c.ff, masked(dx, c.ff_mask), &gl.ff, dh);
      norm_backward(layer.ff_norm, c.ff_norm, dh, &gl.ff_norm, dx);
      dh = Tensor<T>::matrix(dx.rows(), d);
      attn_backward(layer.self_attn, heads, c.attn, masked(dx, c.attn_mask), &gl.self_attn, dh, dh);
      norm_backward(layer.self_norm, c.self_norm, dh, &gl.self_norm, dx);
    }
    apply_mask(dx, src_mask);
    for (auto& v : dx.values()) v *= s;
    joint_embed_backward(source, w.source, dx, g.source.word_table, g.source.pinyin_table);
  }
};

template <typename T>
void Transformer<T>::check_source(const EncodedSentence& source) const {
  if (source.token_ids.empty()) throw Error("empty source sentence");
  if (source.size() > config_.max_len) throw SentenceTooLong(source.size(), config_.max_len);
  for (auto id : source.token_ids) {
    if (id >= src_vocab_size()) throw Error("source token id out of range");
  }
}

template <typename T>
void Transformer<T>::check_target(std::span<const TokenId> ids) const {
  if (ids.empty()) throw Error("empty target prefix");
  if (ids.size() > config_.max_len + 1) throw SentenceTooLong(ids.size(), config_.max_len + 1);
  for (auto id : ids) {
    if (id >= tgt_vocab_size()) throw Error("target token id out of range");
  }
}

template <typename T>
Tensor<T> Transformer<T>::encode(const EncodedSentence& source) const {
  check_source(source);
  Pass pass(*this);
  pass.encode(source);
  return std::move(pass.memory);
}

template <typename T>
Tensor<T> Transformer<T>::decode_logits(const Tensor<T>& memory, std::span<const TokenId> target_prefix) const {
  check_target(target_prefix);
  Pass pass(*this);
  pass.memory = memory;
  pass.decode(target_prefix);
  return std::move(pass.logits);
}

template <typename T>
Tensor<T> Transformer<T>::forward(const EncodedSentence& source, std::span<const TokenId> target_prefix) const {
  check_source(source);
  check_target(target_prefix);
  Pass pass(*this);
  pass.encode(source);
  pass.decode(target_prefix);
  return std::move(pass.logits);
}

template <typename T>
double Transformer<T>::loss_and_grad(const EncodedSentence& source, std::span<const TokenId> target_in,
                                     std::span<const TokenId> target_out, double loss_scale, Weights<T>* grads,
                                     Rng* dropout_rng) const {
  if (target_in.size() != target_out.size()) throw Error("target input/output length mismatch");
  check_source(source);
  check_target(target_in);
  for (auto id : target_out) {
    if (id >= tgt_vocab_size()) throw Error("target token id out of range");
  }
  Pass pass(*this, dropout_rng);
  pass.encode(source);
  pass.decode(target_in);

  const std::size_t m = target_in.size(), v = tgt_vocab_size();
  Tensor<T> dlogits = Tensor<T>::matrix(m, v);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    auto row = pass.logits.row(j);
    auto lg = label_smoothed_ce<T>(std::span<const T>(row.data(), row.size()), target_out[j], config_.label_smoothing);
    total += lg.loss;
    auto dr = dlogits.row(j);
    for (std::size_t k = 0; k < v; ++k) dr[k] = static_cast<T>(lg.grad[k] * loss_scale);
  }
  if (grads) pass.backward(source, target_in, dlogits, *grads);
  return total * loss_scale;
}

template <typename T>
std::vector<TokenId> Transformer<T>::greedy_decode(const EncodedSentence& source, std::size_t max_len) const {
  const Tensor<T> memory = encode(source);
  const std::size_t limit = std::min(max_len, config_.max_len);
  std::vector<TokenId> prefix{Vocab::kBos};
  std::vector<TokenId> out;
  while (out.size() < limit) {
    const Tensor<T> logits = decode_logits(memory, prefix);
    auto last = logits.row(logits.rows() - 1);
    TokenId best = 0;
    for (std::size_t k = 1; k < last.size(); ++k) {
      if (last[k] > last[best]) best = static_cast<TokenId>(k);
    }
    if (best == Vocab::kEos) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

template <typename T>
TrainResult train(Transformer<T>& model, std::span<const TrainingExample> data, const TrainOptions& options,
                  const std::function<void(std::size_t, double)>& progress) {
  if (data.empty()) throw Error("train: empty corpus");
  if (options.batch_size < 1) throw Error("train: batch size must be >= 1");
  options.schedule.validate();
  for (const auto& ex : data) {
    if (ex.target.size() < 2) throw Error("train: target must contain <bos> and <eos>");
  }

  Rng order_rng(derive_seed(options.seed, 0x0BDE));
  Rng dropout_rng(derive_seed(options.seed, 0xD809));
  AdamState<T> adam;
  adam.options = options.adam;

  Weights<T> grads = model.zero_grads();
  auto param_list = model.weights().named_tensors();
  auto grad_list = grads.named_tensors();
  std::vector<Tensor<T>*> params;
  std::vector<const Tensor<T>*> grad_ptrs;
  for (std::size_t i = 0; i < param_list.size(); ++i) {
    params.push_back(param_list[i].second);
    grad_ptrs.push_back(grad_list[i].second);
  }

  // Length-bucketed batches: shuffle, sort windows of several batches by source
  // length, cut into batches, then shuffle the batch order.
  std::vector<std::vector<std::size_t>> batches;
  std::size_t next_batch = 0;
  auto refill = [&]() {
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    const std::size_t window = options.batch_size * 8;
    for (std::size_t start = 0; start < order.size(); start += window) {
      auto end = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + window));
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start), end, [&](std::size_t a, std::size_t b) {
        return data[a].source.size() < data[b].source.size();
      });
    }
    batches.clear();
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + options.batch_size)));
    }
    order_rng.shuffle(batches);
    next_batch = 0;
  };

  TrainResult result;
  result.loss_curve.reserve(options.steps);
  for (std::size_t step = 1; step <= options.steps; ++step) {
    if (next_batch >= batches.size()) refill();
    const auto& batch = batches[next_batch++];
    std::size_t tokens = 0;
    for (auto idx : batch) tokens += data[idx].target.size() - 1;

    grads.zero();
    double loss = 0.0;
    for (auto idx : batch) {
      const auto& ex = data[idx];
      std::span<const TokenId> tgt(ex.target);
      loss += model.loss_and_grad(ex.source, tgt.first(tgt.size() - 1), tgt.subspan(1),
                                  1.0 / static_cast<double>(tokens), &grads, &dropout_rng);
    }
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("training diverged at step " + std::to_string(step) + ": loss " + std::to_string(loss) +
                             ", lr " + std::to_string(noam_lr(step, options.schedule)));
    }
    if (options.freeze_pinyin) grads.source.pinyin_table.zero();
    adam_step<T>(params, grad_ptrs, adam, noam_lr(step, options.schedule));
    result.loss_curve.push_back(loss);
    if (progress) progress(step, loss);
  }
  return result;
}

template <typename T>
std::vector<ParamRef<T>> param_refs(Weights<T>& values, Weights<T>& grads) {
  auto v = values.named_tensors();
  auto g = grads.named_tensors();
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(ParamRef<T>{v[i].first, v[i].second, g[i].second});
  return out;
}

template Weights<float> shaped_weights(const ModelConfig&, std::size_t, std::size_t, std::size_t);
template Weights<double> shaped_weights(const ModelConfig&, std::size_t, std::size_t, std::size_t);
template class Transformer<float>;
template class Transformer<double>;
template TrainResult train(Transformer<float>&, std::span<const TrainingExample>, const TrainOptions&,
                           const std::function<void(std::size_t, double)>&);
template TrainResult train(Transformer<double>&, std::span<const TrainingExample>, const TrainOptions&,
                           const std::function<void(std::size_t, double)>&);
template std::vector<ParamRef<float>> param_refs(Weights<float>&, Weights<float>&);
template std::vector<ParamRef<double>> param_refs(Weights<double>&, Weights<double>&);

}  // namespace phonmt
