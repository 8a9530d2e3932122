#include "tinymyo/encoder.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "tinymyo/kernels.hpp"

namespace tinymyo {

std::int64_t BlockWeights::parameter_count() const {
  return static_cast<std::int64_t>(ln1_gamma.size()) + ln1_beta.size() + w_qkv.size() +
         b_qkv.size() + w_out.size() + b_out.size() + ln2_gamma.size() + ln2_beta.size() +
         w_fc1.size() + b_fc1.size() + w_fc2.size() + b_fc2.size();
}

void EncoderWeights::validate() const {
  cfg.validate();
  const std::size_t d = cfg.embed_dim;
  const std::size_t m = cfg.mlp_dim();
  if (tokenizer.w_proj.size() != d * cfg.patch_len || tokenizer.b_proj.size() != d ||
      tokenizer.mask_token.size() != d)
    throw ShapeError("weights: tokenizer shapes do not match config");
  if (blocks.size() != static_cast<std::size_t>(cfg.layers))
    throw ShapeError("weights: block count does not match config");
  for (const BlockWeights& b : blocks) {
    if (b.w_qkv.size() != 3 * d * d || b.b_qkv.size() != 3 * d || b.w_out.size() != d * d ||
        b.b_out.size() != d || b.w_fc1.size() != m * d || b.b_fc1.size() != m ||
        b.w_fc2.size() != d * m || b.b_fc2.size() != d || b.ln1_gamma.size() != d ||
        b.ln1_beta.size() != d || b.ln2_gamma.size() != d || b.ln2_beta.size() != d)
      throw ShapeError("weights: block shapes do not match config");
  }
  if (final_ln_gamma.size() != d || final_ln_beta.size() != d)
    throw ShapeError("weights: final layer norm shapes do not match config");
}

std::vector<float> layer_norm(const std::vector<float>& x, int rows, int dim,
                              const std::vector<float>& gamma,
                              const std::vector<float>& beta, float eps) {
  if (x.size() != static_cast<std::size_t>(rows) * dim ||
      gamma.size() != static_cast<std::size_t>(dim) || beta.size() != static_cast<std::size_t>(dim))
    throw ShapeError("layer_norm: shape mismatch");
  std::vector<float> y(x.size());
  kernels::layer_norm(x.data(), rows, dim, gamma.data(), beta.data(), eps, y.data());
  return y;
}

void apply_rope(std::vector<float>& q, std::vector<float>& k, int n, int head_dim,
                const std::vector<int>& positions, double base) {
  if (head_dim % 2 != 0) throw ShapeError("apply_rope: head dim must be even");
  kernels::rope_rows(q.data(), n, head_dim, positions.data(), base);
  kernels::rope_rows(k.data(), n, head_dim, positions.data(), base);
}

std::vector<int> rope_positions(const TokenSequence& seq, const ModelConfig& cfg) {
  std::vector<int> pos(seq.count);
  for (int k = 0; k < seq.count; ++k)
    pos[k] = cfg.rope_temporal_positions ? seq.patch_of[k] : k;
  return pos;
}

std::vector<float> mhsa(const std::vector<float>& x, int n, const ModelConfig& cfg,
                        const BlockWeights& w, AttentionMaskMode mask,
                        const std::vector<int>& positions) {
  const int d = cfg.embed_dim;
  const int h = cfg.heads;
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<float> qkv(static_cast<std::size_t>(n) * 3 * d);
  kernels::linear(x.data(), n, d, w.w_qkv.data(), w.b_qkv.data(), 3 * d, qkv.data());

  // split heads: q/k/v each [h][n x dh]
  std::vector<float> q(static_cast<std::size_t>(h) * n * dh);
  std::vector<float> k(q.size()), v(q.size());
  for (int t = 0; t < n; ++t) {
    const float* row = qkv.data() + static_cast<std::size_t>(t) * 3 * d;
    for (int hh = 0; hh < h; ++hh) {
      std::memcpy(&q[(static_cast<std::size_t>(hh) * n + t) * dh], row + hh * dh, sizeof(float) * dh);
      std::memcpy(&k[(static_cast<std::size_t>(hh) * n + t) * dh], row + d + hh * dh, sizeof(float) * dh);
      std::memcpy(&v[(static_cast<std::size_t>(hh) * n + t) * dh], row + 2 * d + hh * dh, sizeof(float) * dh);
    }
  }
  for (int hh = 0; hh < h; ++hh) {
    kernels::rope_rows(&q[static_cast<std::size_t>(hh) * n * dh], n, dh, positions.data(), cfg.rope_base);
    kernels::rope_rows(&k[static_cast<std::size_t>(hh) * n * dh], n, dh, positions.data(), cfg.rope_base);
  }

  std::vector<float> ctx(static_cast<std::size_t>(n) * d);
#pragma omp parallel for collapse(2) schedule(static)
  for (int hh = 0; hh < h; ++hh) {
    for (int i = 0; i < n; ++i) {
      const float* qi = &q[(static_cast<std::size_t>(hh) * n + i) * dh];
      const int limit = (mask == AttentionMaskMode::causal) ? i + 1 : n;
      std::vector<float> scores(limit);
      for (int j = 0; j < limit; ++j) {
        const float* kj = &k[(static_cast<std::size_t>(hh) * n + j) * dh];
        double dot = 0.0;
        for (int e = 0; e < dh; ++e) dot += static_cast<double>(qi[e]) * kj[e];
        scores[j] = static_cast<float>(dot * scale);
      }
      kernels::softmax_row(scores.data(), limit);
      float* out = &ctx[static_cast<std::size_t>(i) * d + hh * dh];
      for (int e = 0; e < dh; ++e) {
        double acc = 0.0;
        for (int j = 0; j < limit; ++j)
          acc += static_cast<double>(scores[j]) * v[(static_cast<std::size_t>(hh) * n + j) * dh + e];
        out[e] = static_cast<float>(acc);
      }
    }
  }

  std::vector<float> y(static_cast<std::size_t>(n) * d);
  kernels::linear(ctx.data(), n, d, w.w_out.data(), w.b_out.data(), d, y.data());
  return y;
}

namespace {

void check_finite(const std::vector<float>& x, int block_index) {
  for (float v : x)
    if (!std::isfinite(v))
      throw NumericError("encoder: non-finite value in block " + std::to_string(block_index));
}

}  // namespace

std::vector<float> encoder_forward(const TokenSequence& seq, const EncoderWeights& w,
                                   AttentionMaskMode mask) {
  w.validate();
  const int n = seq.count;
  const int d = w.cfg.embed_dim;
  if (seq.dim != d) throw ShapeError("encoder_forward: token dim does not match config");
  const int m = w.cfg.mlp_dim();
  const std::vector<int> positions = rope_positions(seq, w.cfg);

  std::vector<float> x = seq.embeddings;
  std::vector<float> hidden(static_cast<std::size_t>(n) * m);
  std::vector<float> tmp(static_cast<std::size_t>(n) * d);
  for (int b = 0; b < w.cfg.layers; ++b) {
    const BlockWeights& bw = w.blocks[b];
    std::vector<float> normed = layer_norm(x, n, d, bw.ln1_gamma, bw.ln1_beta);
    std::vector<float> attn = mhsa(normed, n, w.cfg, bw, mask, positions);
    kernels::add_inplace(x.data(), attn.data(), x.size());

    normed = layer_norm(x, n, d, bw.ln2_gamma, bw.ln2_beta);
    kernels::linear(normed.data(), n, d, bw.w_fc1.data(), bw.b_fc1.data(), m, hidden.data());
    kernels::gelu_exact(hidden.data(), hidden.size(), hidden.data());
    kernels::linear(hidden.data(), n, m, bw.w_fc2.data(), bw.b_fc2.data(), d, tmp.data());
    kernels::add_inplace(x.data(), tmp.data(), x.size());
    check_finite(x, b);
  }
  return layer_norm(x, n, d, w.final_ln_gamma, w.final_ln_beta);
}

ParamReport count_parameters(const EncoderWeights& w) {
  ParamReport r;
  r.tokenizer = static_cast<std::int64_t>(w.tokenizer.w_proj.size()) + w.tokenizer.b_proj.size();
  r.mask_token = static_cast<std::int64_t>(w.tokenizer.mask_token.size());
  r.per_block = w.blocks.empty() ? 0 : w.blocks.front().parameter_count();
  r.blocks_total = 0;
  for (const BlockWeights& b : w.blocks) r.blocks_total += b.parameter_count();
  r.final_ln = static_cast<std::int64_t>(w.final_ln_gamma.size()) + w.final_ln_beta.size();
  r.decoder = static_cast<std::int64_t>(w.cfg.patch_len) * w.cfg.embed_dim + w.cfg.patch_len;
  r.total = r.tokenizer + r.mask_token + r.blocks_total + r.final_ln + r.decoder;
  return r;
}

ParamReport count_parameters(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t d = cfg.embed_dim;
  const std::int64_t m = cfg.mlp_dim();
  ParamReport r;
  r.tokenizer = d * cfg.patch_len + d;
  r.mask_token = d;
  r.per_block = (3 * d * d + 3 * d) + (d * d + d) + (m * d + m) + (d * m + d) + 4 * d;
  r.blocks_total = r.per_block * cfg.layers;
  r.final_ln = 2 * d;
  r.decoder = cfg.patch_len * d + cfg.patch_len;
  r.total = r.tokenizer + r.mask_token + r.blocks_total + r.final_ln + r.decoder;
  return r;
}

namespace {

// Deterministic normal variates via Box-Muller over raw mt19937_64 draws.
// std::normal_distribution is implementation-defined and unusable here.
float gauss(std::mt19937_64& rng) {
  double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
  double u2 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                            std::cos(2.0 * 3.14159265358979323846 * u2));
}

std::vector<float> gauss_vec(std::mt19937_64& rng, std::size_t n, float stddev) {
  std::vector<float> v(n);
  for (float& x : v) x = gauss(rng) * stddev;
  return v;
}

}  // namespace

EncoderWeights random_encoder_weights(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg.embed_dim;
  const std::size_t m = cfg.mlp_dim();
  const float sd = 1.0f / std::sqrt(static_cast<float>(d));
  const float sm = 1.0f / std::sqrt(static_cast<float>(m));
  const float sl = 1.0f / std::sqrt(static_cast<float>(cfg.patch_len));

  EncoderWeights w;
  w.cfg = cfg;
  w.tokenizer.w_proj = gauss_vec(rng, d * cfg.patch_len, sl);
  w.tokenizer.b_proj = gauss_vec(rng, d, 0.02f);
  w.tokenizer.mask_token = gauss_vec(rng, d, 0.02f);
  w.blocks.resize(cfg.layers);
  for (BlockWeights& b : w.blocks) {
    b.ln1_gamma.assign(d, 1.0f);
    b.ln1_beta.assign(d, 0.0f);
    b.w_qkv = gauss_vec(rng, 3 * d * d, sd);
    b.b_qkv = gauss_vec(rng, 3 * d, 0.02f);
    b.w_out = gauss_vec(rng, d * d, sd);
    b.b_out = gauss_vec(rng, d, 0.02f);
    b.ln2_gamma.assign(d, 1.0f);
    b.ln2_beta.assign(d, 0.0f);
    b.w_fc1 = gauss_vec(rng, m * d, sd);
    b.b_fc1 = gauss_vec(rng, m, 0.02f);
    b.w_fc2 = gauss_vec(rng, d * m, sm);
    b.b_fc2 = gauss_vec(rng, d, 0.02f);
  }
  w.final_ln_gamma.assign(d, 1.0f);
  w.final_ln_beta.assign(d, 0.0f);
  return w;
}

}  // namespace tinymyo
