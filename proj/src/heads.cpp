#include "tinymyo/heads.hpp"

#include <cmath>

#include "tinymyo/kernels.hpp"

namespace tinymyo {

std::int64_t RegressionHead::parameter_count() const {
  return static_cast<std::int64_t>(pw_in_w.size()) + pw_in_b.size() + dw1_w.size() +
         dw1_b.size() + dw2_w.size() + dw2_b.size() + pw_out_w.size() + pw_out_b.size();
}

PatchGrid decode_patches(const std::vector<float>& h, const TokenSequence& meta,
                         const DecoderWeights& w) {
  const int d = meta.dim;
  const int l = static_cast<int>(w.b_dec.size());
  if (w.w_dec.size() != static_cast<std::size_t>(l) * d)
    throw ShapeError("decode_patches: decoder shapes disagree");
  if (h.size() != static_cast<std::size_t>(meta.count) * d)
    throw ShapeError("decode_patches: hidden state shape mismatch");
  int channels = 0, patches = 0;
  for (int k = 0; k < meta.count; ++k) {
    channels = std::max(channels, meta.channel_of[k] + 1);
    patches = std::max(patches, meta.patch_of[k] + 1);
  }
  PatchGrid g;
  g.channels = channels;
  g.patches_per_channel = patches;
  g.patch_len = l;
  g.values.resize(static_cast<std::size_t>(channels) * patches * l);
  kernels::linear(h.data(), meta.count, d, w.w_dec.data(), w.b_dec.data(), l, g.values.data());
  // token order is channel-major, matching the grid layout, so the linear
  // output lands directly in place
  return g;
}

double smooth_l1(double a, double b, double beta) {
  if (!(beta > 0.0)) throw ValidationError("smooth_l1: beta must be > 0");
  const double r = std::abs(a - b);
  return r < beta ? 0.5 * r * r / beta : r - 0.5 * beta;
}

LossReport masked_loss(const PatchGrid& target, const PatchGrid& recon,
                       const std::vector<std::uint8_t>& mask_flags, double beta) {
  if (target.values.size() != recon.values.size())
    throw ShapeError("masked_loss: grids differ in shape");
  const int n_p = target.patches_per_channel;
  const int l = target.patch_len;
  const std::size_t tokens = static_cast<std::size_t>(target.channels) * n_p;
  if (mask_flags.size() != tokens) throw ShapeError("masked_loss: flag count mismatch");

  double sum_masked = 0.0, sum_visible = 0.0;
  std::size_t n_masked = 0, n_visible = 0;
  for (std::size_t k = 0; k < tokens; ++k) {
    const float* t = target.values.data() + k * l;
    const float* r = recon.values.data() + k * l;
    double s = 0.0;
    for (int j = 0; j < l; ++j) s += smooth_l1(t[j], r[j], beta);
    if (mask_flags[k]) {
      sum_masked += s;
      n_masked += l;
    } else {
      sum_visible += s;
      n_visible += l;
    }
  }
  LossReport rep;
  rep.l_masked = n_masked ? sum_masked / n_masked : 0.0;
  rep.l_visible = n_visible ? sum_visible / n_visible : 0.0;
  rep.l_total = rep.l_masked + 0.1 * rep.l_visible;
  return rep;
}

FusedFeature fuse_and_pool(const std::vector<float>& h, const TokenSequence& meta) {
  const int d = meta.dim;
  int channels = 0, patches = 0;
  for (int k = 0; k < meta.count; ++k) {
    channels = std::max(channels, meta.channel_of[k] + 1);
    patches = std::max(patches, meta.patch_of[k] + 1);
  }
  if (meta.count != channels * patches)
    throw ShapeError("fuse_and_pool: token count is not channels * patches");
  FusedFeature f;
  f.vector.assign(static_cast<std::size_t>(channels) * d, 0.0f);
  std::vector<double> acc(f.vector.size(), 0.0);
  for (int k = 0; k < meta.count; ++k) {
    const int c = meta.channel_of[k];
    const float* t = h.data() + static_cast<std::size_t>(k) * d;
    double* slot = acc.data() + static_cast<std::size_t>(c) * d;
    for (int e = 0; e < d; ++e) slot[e] += t[e];
  }
  for (std::size_t i = 0; i < acc.size(); ++i)
    f.vector[i] = static_cast<float>(acc[i] / patches);
  return f;
}

std::vector<float> classify(const FusedFeature& f, const ClassifierHead& head) {
  const int in = static_cast<int>(f.vector.size());
  if (head.w.size() != static_cast<std::size_t>(head.classes) * in ||
      head.b.size() != static_cast<std::size_t>(head.classes))
    throw ShapeError("classify: head shapes disagree with feature");
  std::vector<float> logits(head.classes);
  kernels::linear(f.vector.data(), 1, in, head.w.data(), head.b.data(), head.classes,
                  logits.data());
  return logits;
}

std::vector<float> fuse_per_patch(const std::vector<float>& h, const TokenSequence& meta) {
  const int d = meta.dim;
  int channels = 0, patches = 0;
  for (int k = 0; k < meta.count; ++k) {
    channels = std::max(channels, meta.channel_of[k] + 1);
    patches = std::max(patches, meta.patch_of[k] + 1);
  }
  std::vector<float> out(static_cast<std::size_t>(patches) * channels * d);
  for (int k = 0; k < meta.count; ++k) {
    const int c = meta.channel_of[k];
    const int p = meta.patch_of[k];
    std::copy_n(h.data() + static_cast<std::size_t>(k) * d, d,
                out.data() + (static_cast<std::size_t>(p) * channels + c) * d);
  }
  return out;
}

WindowedResult windowed_inference(const signal::WaveformRecord& stream, int win_ms,
                                  int stride_ms, const EncoderWeights& model,
                                  const ClassifierHead& head) {
  stream.validate();
  const int win = static_cast<int>(round_half_away(win_ms * stream.fs / 1000.0));
  const int stride = static_cast<int>(round_half_away(stride_ms * stream.fs / 1000.0));
  WindowedResult res;
  if (stream.frames < win) return res;
  if (win != model.cfg.timesteps)
    throw ShapeError("windowed_inference: window sample count does not match model timesteps");

  const int count = (stream.frames - win) / stride + 1;
  for (int k = 0; k < count; ++k) {
    signal::WaveformRecord w;
    w.frames = win;
    w.channels = stream.channels;
    w.fs = stream.fs;
    const std::size_t begin = static_cast<std::size_t>(k) * stride * stream.channels;
    w.samples.assign(stream.samples.begin() + begin,
                     stream.samples.begin() + begin + static_cast<std::size_t>(win) * stream.channels);
    TokenSequence seq = embed(patchify(w, model.cfg), model.tokenizer);
    std::vector<float> h = encoder_forward(seq, model, AttentionMaskMode::causal);
    res.per_window.push_back(classify(fuse_and_pool(h, seq), head));
    res.offsets_samples.push_back(k * stride);
  }
  res.aggregate.assign(head.classes, 0.0f);
  for (const auto& l : res.per_window)
    for (int i = 0; i < head.classes; ++i) res.aggregate[i] += l[i];
  for (float& v : res.aggregate) v /= static_cast<float>(res.per_window.size());
  return res;
}

namespace {

// Depthwise conv over the time axis, zero padding, per-channel kernel.
void depthwise_conv(const std::vector<float>& x, int len, int ch,
                    const std::vector<float>& w, const std::vector<float>& b, int k,
                    std::vector<float>& y) {
  y.assign(x.size(), 0.0f);
  const int half = k / 2;
  for (int t = 0; t < len; ++t) {
    for (int c = 0; c < ch; ++c) {
      double acc = b[c];
      for (int j = 0; j < k; ++j) {
        const int src = t + j - half;
        if (src < 0 || src >= len) continue;
        acc += static_cast<double>(w[static_cast<std::size_t>(c) * k + j]) *
               x[static_cast<std::size_t>(src) * ch + c];
      }
      y[static_cast<std::size_t>(t) * ch + c] = static_cast<float>(acc);
    }
  }
}

// Linear interpolation along the time axis with endpoint alignment.
std::vector<float> upsample_linear(const std::vector<float>& x, int len, int ch, int out_len) {
  std::vector<float> y(static_cast<std::size_t>(out_len) * ch);
  if (len == 1) {
    for (int t = 0; t < out_len; ++t)
      std::copy_n(x.data(), ch, y.data() + static_cast<std::size_t>(t) * ch);
    return y;
  }
  for (int t = 0; t < out_len; ++t) {
    const double pos = out_len == 1 ? 0.0
                                    : static_cast<double>(t) * (len - 1) / (out_len - 1);
    const int lo = static_cast<int>(pos);
    const int hi = std::min(lo + 1, len - 1);
    const double frac = pos - lo;
    for (int c = 0; c < ch; ++c)
      y[static_cast<std::size_t>(t) * ch + c] =
          static_cast<float>((1.0 - frac) * x[static_cast<std::size_t>(lo) * ch + c] +
                             frac * x[static_cast<std::size_t>(hi) * ch + c]);
  }
  return y;
}

}  // namespace

std::vector<float> regress(const std::vector<float>& h, const TokenSequence& meta,
                           const RegressionHead& head) {
  std::vector<float> fused = fuse_per_patch(h, meta);
  int channels = 0, patches = 0;
  for (int k = 0; k < meta.count; ++k) {
    channels = std::max(channels, meta.channel_of[k] + 1);
    patches = std::max(patches, meta.patch_of[k] + 1);
  }
  const int in = channels * meta.dim;
  if (in != head.in_channels) throw ShapeError("regress: head input width mismatch");

  std::vector<float> a(static_cast<std::size_t>(patches) * head.hidden);
  kernels::linear(fused.data(), patches, in, head.pw_in_w.data(), head.pw_in_b.data(),
                  head.hidden, a.data());
  std::vector<float> tmp;
  depthwise_conv(a, patches, head.hidden, head.dw1_w, head.dw1_b, head.kernel, tmp);
  depthwise_conv(tmp, patches, head.hidden, head.dw2_w, head.dw2_b, head.kernel, a);
  std::vector<float> traj(static_cast<std::size_t>(patches) * head.dofs);
  kernels::linear(a.data(), patches, head.hidden, head.pw_out_w.data(), head.pw_out_b.data(),
                  head.dofs, traj.data());
  return upsample_linear(traj, patches, head.dofs, head.out_len);
}

namespace {

float unit_gauss(std::mt19937_64& rng) {
  double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
  double u2 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                            std::cos(2.0 * 3.14159265358979323846 * u2));
}

std::vector<float> gauss_vec(std::mt19937_64& rng, std::size_t n, float stddev) {
  std::vector<float> v(n);
  for (float& x : v) x = unit_gauss(rng) * stddev;
  return v;
}

}  // namespace

RegressionHead make_regression_head(const ModelConfig& cfg, int out_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RegressionHead head;
  head.in_channels = cfg.channels * cfg.embed_dim;
  head.out_len = out_len;
  const float si = 1.0f / std::sqrt(static_cast<float>(head.in_channels));
  const float sh = 1.0f / std::sqrt(static_cast<float>(head.hidden));
  head.pw_in_w = gauss_vec(rng, static_cast<std::size_t>(head.hidden) * head.in_channels, si);
  head.pw_in_b = gauss_vec(rng, head.hidden, 0.02f);
  head.dw1_w = gauss_vec(rng, static_cast<std::size_t>(head.hidden) * head.kernel, 0.4f);
  head.dw1_b = gauss_vec(rng, head.hidden, 0.02f);
  head.dw2_w = gauss_vec(rng, static_cast<std::size_t>(head.hidden) * head.kernel, 0.4f);
  head.dw2_b = gauss_vec(rng, head.hidden, 0.02f);
  head.pw_out_w = gauss_vec(rng, static_cast<std::size_t>(head.dofs) * head.hidden, sh);
  head.pw_out_b = gauss_vec(rng, head.dofs, 0.02f);
  return head;
}

DecoderWeights random_decoder_weights(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DecoderWeights w;
  w.w_dec = gauss_vec(rng, static_cast<std::size_t>(cfg.patch_len) * cfg.embed_dim,
                      1.0f / std::sqrt(static_cast<float>(cfg.embed_dim)));
  w.b_dec = gauss_vec(rng, cfg.patch_len, 0.02f);
  return w;
}

ClassifierHead random_classifier_head(const ModelConfig& cfg, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ClassifierHead head;
  head.classes = classes;
  const int in = cfg.channels * cfg.embed_dim;
  head.w = gauss_vec(rng, static_cast<std::size_t>(classes) * in,
                     1.0f / std::sqrt(static_cast<float>(in)));
  head.b = gauss_vec(rng, classes, 0.02f);
  return head;
}

}  // namespace tinymyo
