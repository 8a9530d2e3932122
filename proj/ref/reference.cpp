#include "reference.hpp"

#include <cmath>

#include "tinymyo/common.hpp"

namespace tinymyo::ref {

std::vector<float> linear(const std::vector<float>& x, int rows, int in_dim,
                          const std::vector<float>& w, const std::vector<float>& b,
                          int out_dim) {
  std::vector<float> y(static_cast<std::size_t>(rows) * out_dim);
  for (int r = 0; r < rows; ++r)
    for (int o = 0; o < out_dim; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (int k = 0; k < in_dim; ++k)
        acc += static_cast<double>(x[static_cast<std::size_t>(r) * in_dim + k]) *
               w[static_cast<std::size_t>(o) * in_dim + k];
      y[static_cast<std::size_t>(r) * out_dim + o] = static_cast<float>(acc);
    }
  return y;
}

std::vector<float> layer_norm(const std::vector<float>& x, int rows, int dim,
                              const std::vector<float>& gamma,
                              const std::vector<float>& beta, float eps) {
  std::vector<float> y(x.size());
  for (int r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int i = 0; i < dim; ++i) mean += x[static_cast<std::size_t>(r) * dim + i];
    mean /= dim;
    double var = 0.0;
    for (int i = 0; i < dim; ++i) {
      double d = x[static_cast<std::size_t>(r) * dim + i] - mean;
      var += d * d;
    }
    var /= dim;
    for (int i = 0; i < dim; ++i)
      y[static_cast<std::size_t>(r) * dim + i] = static_cast<float>(
          (x[static_cast<std::size_t>(r) * dim + i] - mean) / std::sqrt(var + eps) * gamma[i] +
          beta[i]);
  }
  return y;
}

std::vector<float> softmax(const std::vector<float>& row) {
  double mx = row[0];
  for (float v : row) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  std::vector<double> e(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    e[i] = std::exp(row[i] - mx);
    sum += e[i];
  }
  std::vector<float> y(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) y[i] = static_cast<float>(e[i] / sum);
  return y;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

namespace {

void rotate(std::vector<float>& rows, int n, int dim, const std::vector<int>& positions,
            double base) {
  for (int r = 0; r < n; ++r)
    for (int j = 0; 2 * j < dim; ++j) {
      double theta = positions[r] * std::pow(base, -2.0 * j / dim);
      double c = std::cos(theta), s = std::sin(theta);
      double e = rows[static_cast<std::size_t>(r) * dim + 2 * j];
      double o = rows[static_cast<std::size_t>(r) * dim + 2 * j + 1];
      rows[static_cast<std::size_t>(r) * dim + 2 * j] = static_cast<float>(e * c - o * s);
      rows[static_cast<std::size_t>(r) * dim + 2 * j + 1] = static_cast<float>(e * s + o * c);
    }
}

}  // namespace

std::vector<float> mhsa(const std::vector<float>& x, int n, const ModelConfig& cfg,
                        const BlockWeights& w, bool causal,
                        const std::vector<int>& positions) {
  const int d = cfg.embed_dim;
  const int h = cfg.heads;
  const int dh = d / h;

  std::vector<float> qkv = linear(x, n, d, w.w_qkv, w.b_qkv, 3 * d);
  std::vector<float> ctx(static_cast<std::size_t>(n) * d, 0.0f);
  for (int hh = 0; hh < h; ++hh) {
    std::vector<float> q(static_cast<std::size_t>(n) * dh), k(q.size()), v(q.size());
    for (int t = 0; t < n; ++t)
      for (int e = 0; e < dh; ++e) {
        q[static_cast<std::size_t>(t) * dh + e] = qkv[static_cast<std::size_t>(t) * 3 * d + hh * dh + e];
        k[static_cast<std::size_t>(t) * dh + e] = qkv[static_cast<std::size_t>(t) * 3 * d + d + hh * dh + e];
        v[static_cast<std::size_t>(t) * dh + e] = qkv[static_cast<std::size_t>(t) * 3 * d + 2 * d + hh * dh + e];
      }
    rotate(q, n, dh, positions, cfg.rope_base);
    rotate(k, n, dh, positions, cfg.rope_base);

    for (int i = 0; i < n; ++i) {
      std::vector<float> scores;
      const int limit = causal ? i + 1 : n;
      for (int j = 0; j < limit; ++j) {
        double dot = 0.0;
        for (int e = 0; e < dh; ++e)
          dot += static_cast<double>(q[static_cast<std::size_t>(i) * dh + e]) *
                 k[static_cast<std::size_t>(j) * dh + e];
        scores.push_back(static_cast<float>(dot / std::sqrt(static_cast<double>(dh))));
      }
      std::vector<float> p = softmax(scores);
      for (int e = 0; e < dh; ++e) {
        double acc = 0.0;
        for (int j = 0; j < limit; ++j)
          acc += static_cast<double>(p[j]) * v[static_cast<std::size_t>(j) * dh + e];
        ctx[static_cast<std::size_t>(i) * d + hh * dh + e] = static_cast<float>(acc);
      }
    }
  }
  return linear(ctx, n, d, w.w_out, w.b_out, d);
}

std::vector<float> encoder_forward(const TokenSequence& seq, const EncoderWeights& w,
                                   bool causal) {
  const int n = seq.count;
  const int d = w.cfg.embed_dim;
  const int m = w.cfg.mlp_dim();
  std::vector<int> positions(n);
  for (int k = 0; k < n; ++k)
    positions[k] = w.cfg.rope_temporal_positions ? seq.patch_of[k] : k;

  std::vector<float> x = seq.embeddings;
  for (int b = 0; b < w.cfg.layers; ++b) {
    const BlockWeights& bw = w.blocks[b];
    std::vector<float> attn = mhsa(layer_norm(x, n, d, bw.ln1_gamma, bw.ln1_beta, 1e-5f), n,
                                   w.cfg, bw, causal, positions);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += attn[i];

    std::vector<float> h =
        linear(layer_norm(x, n, d, bw.ln2_gamma, bw.ln2_beta, 1e-5f), n, d, bw.w_fc1, bw.b_fc1, m);
    for (float& v : h) v = static_cast<float>(gelu(v));
    std::vector<float> o = linear(h, n, m, bw.w_fc2, bw.b_fc2, d);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += o[i];
  }
  return layer_norm(x, n, d, w.final_ln_gamma, w.final_ln_beta, 1e-5f);
}

void int8_linear_requant(const std::int8_t* a, int rows, int in_dim, int za,
                         const std::int8_t* b_mat, int zb, int out_dim,
                         const std::int32_t* bias, std::int32_t multiplier,
                         int shift, int zout, std::int8_t* out) {
  for (int r = 0; r < rows; ++r)
    for (int o = 0; o < out_dim; ++o) {
      std::int64_t acc = 0;
      for (int k = 0; k < in_dim; ++k)
        acc += (static_cast<std::int32_t>(a[static_cast<std::size_t>(r) * in_dim + k]) - za) *
               (static_cast<std::int32_t>(b_mat[static_cast<std::size_t>(o) * in_dim + k]) - zb);
      if (bias) acc += bias[o];
      out[static_cast<std::size_t>(r) * out_dim + o] =
          saturate_i8(round_shift(acc * multiplier, shift) + zout);
    }
}

}  // namespace tinymyo::ref
