#include "tinymyo/quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "tinymyo/kernels.hpp"

namespace tinymyo::quant {

namespace {

constexpr double kScaleFloor = 1e-8;

// exp(r) ~ kPolyA * (r + kPolyB)^2 + kPolyC on (-ln2, 0]
constexpr double kPolyA = 0.3585;
constexpr double kPolyB = 1.353;
constexpr double kPolyC = 0.344;

constexpr int kRopeFracBits = 14;  // Q1.14 cos/sin tables

std::int8_t quantize_value(double v, const QuantParams& qp) {
  return saturate_i8(round_half_away(v / qp.scale) + qp.zero_point);
}

}  // namespace

RequantMultiplier requant_multiplier(double target) {
  if (!(target > 0.0) || !std::isfinite(target))
    throw ValidationError("requant: target ratio must be positive and finite");
  int shift = 0;
  double t = target;
  while (t < (1 << 14)) {
    t *= 2.0;
    ++shift;
  }
  while (t >= (1 << 15)) {
    t /= 2.0;
    --shift;
  }
  RequantMultiplier m;
  m.multiplier = static_cast<std::int32_t>(round_half_away(t));
  m.shift = shift;
  if (m.multiplier == (1 << 15)) {  // rounded up to the bound
    m.multiplier >>= 1;
    --m.shift;
  }
  return m;
}

QuantParams affine_from_range(double lo, double hi) {
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  QuantParams qp;
  qp.scheme = QuantScheme::affine_activation;
  qp.scale = std::max((hi - lo) / 255.0, kScaleFloor);
  qp.zero_point = static_cast<int>(
      std::clamp<std::int64_t>(round_half_away(-128.0 - lo / qp.scale), -128, 127));
  return qp;
}

QuantParams symmetric_from_maxabs(double maxabs) {
  QuantParams qp;
  qp.scheme = QuantScheme::symmetric_weight;
  qp.zero_point = 0;
  qp.scale = std::max(maxabs / 127.0, kScaleFloor);
  return qp;
}

QuantizedTensor quantize_tensor(const std::vector<float>& x, std::vector<int> shape,
                                const QuantParams& qp) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  if (n != static_cast<std::int64_t>(x.size()))
    throw ShapeError("quantize_tensor: shape does not match value count");
  QuantizedTensor t;
  t.shape = std::move(shape);
  t.qp = qp;
  t.data.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t.data[i] = quantize_value(x[i], qp);
  return t;
}

std::vector<float> dequantize(const QuantizedTensor& t) {
  std::vector<float> out(t.data.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(t.qp.dequant(t.data[i]));
  return out;
}

QuantizedTensor int_matmul_requant(const QuantizedTensor& a, const QuantizedTensor& b,
                                   const QuantParams& out_qp) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
    throw ShapeError("int_matmul_requant: inner dimensions disagree");
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  if (m >= (1 << 15) || k >= (1 << 15) || n >= (1 << 15))
    throw ShapeError("int_matmul_requant: dimensions must stay below 2^15");
  const RequantMultiplier rm = requant_multiplier(a.qp.scale * b.qp.scale / out_qp.scale);
  QuantizedTensor out;
  out.shape = {m, n};
  out.qp = out_qp;
  out.data.resize(static_cast<std::size_t>(m) * n);
  const int za = a.qp.zero_point, zb = b.qp.zero_point;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      std::int32_t acc = 0;
      for (int t = 0; t < k; ++t)
        acc += (static_cast<std::int32_t>(a.data[static_cast<std::size_t>(i) * k + t]) - za) *
               (static_cast<std::int32_t>(b.data[static_cast<std::size_t>(t) * n + j]) - zb);
      out.data[static_cast<std::size_t>(i) * n + j] = saturate_i8(
          round_shift(static_cast<std::int64_t>(acc) * rm.multiplier, rm.shift) +
          out_qp.zero_point);
    }
  return out;
}

std::vector<std::int8_t> i_softmax(const std::int8_t* row, int n, const QuantParams& in_qp) {
  if (n < 1) throw ValidationError("i_softmax: empty row");
  const double s = in_qp.scale;
  if (s < kScaleFloor * 0.5) throw ValidationError("i_softmax: input scale below floor");

  // refine the remainder grid while the polynomial constants stay in range
  int f = 0;
  while (f < 14 && (kPolyB / s) * (1 << (f + 1)) <= static_cast<double>(1 << 28)) ++f;
  const double sf = s / (1 << f);
  const std::int64_t q_ln2 =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::log(2.0) / sf)));
  const std::int64_t q_b = static_cast<std::int64_t>(std::floor(kPolyB / sf));
  const std::int64_t q_c =
      static_cast<std::int64_t>(std::floor(kPolyC / (kPolyA * sf * sf)));

  int mx = row[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, static_cast<int>(row[i]));

  std::vector<std::int64_t> expq(n);
  std::int64_t emax = 0;
  for (int i = 0; i < n; ++i) {
    const std::int64_t d = (static_cast<std::int64_t>(row[i]) - mx) << f;  // <= 0
    const std::int64_t z = (-d) / q_ln2;
    const std::int64_t r = d + z * q_ln2;  // (-q_ln2, 0]
    const std::int64_t e = (r + q_b) * (r + q_b) + q_c;
    expq[i] = z >= 62 ? 0 : (e >> z);
    emax = std::max(emax, expq[i]);
  }
  // keep 256 * expq and the row sum inside int64
  int down = 0;
  while ((emax >> down) > (std::int64_t{1} << 40)) ++down;
  std::int64_t sum = 0;
  for (std::int64_t& e : expq) {
    e >>= down;
    sum += e;
  }

  // floor division of the 256-unit budget, then largest remainders take the
  // leftover units so the row sums to exactly 256 before saturation
  std::vector<int> units(n);
  std::vector<std::pair<std::int64_t, int>> rem(n);
  std::int64_t assigned = 0;
  for (int i = 0; i < n; ++i) {
    const std::int64_t num = 256 * expq[i];
    units[i] = static_cast<int>(num / sum);
    rem[i] = {num % sum, i};
    assigned += units[i];
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::int64_t i = 0; i < 256 - assigned && i < n; ++i) units[rem[i].second] += 1;

  std::vector<std::int8_t> out(n);
  for (int i = 0; i < n; ++i) out[i] = saturate_i8(units[i] - 128);
  return out;
}

std::int64_t isqrt_newton(std::int64_t v) {
  if (v <= 0) return 0;
  int bits = 64 - __builtin_clzll(static_cast<unsigned long long>(v));
  std::int64_t x = std::int64_t{1} << ((bits + 1) / 2);  // >= sqrt(v), < 2*sqrt(v)
  for (int i = 0; i < 4; ++i) x = (x + v / x) / 2;
  while (x * x > v) --x;  // settle the floor
  return x;
}

void i_layernorm(const std::int8_t* row, int dim, const QuantParams& in_qp,
                 const float* gamma, const float* beta, const QuantParams& out_qp,
                 std::int8_t* out) {
  if (dim < 1) throw ShapeError("i_layernorm: empty row");
  (void)in_qp;  // normalization is scale-free; the affine offset cancels in (x - mean)
  std::int64_t sum = 0;
  for (int i = 0; i < dim; ++i) sum += row[i];
  const std::int64_t mean_q = div_round(sum, dim);
  std::int64_t var_num = 0;
  for (int i = 0; i < dim; ++i) {
    const std::int64_t r = row[i] - mean_q;
    var_num += r * r;
  }
  // sigma in Q.6, normalized value in Q.10
  const std::int64_t var_q12 = div_round(var_num << 12, dim);
  const std::int64_t std_q6 = isqrt_newton(var_q12);
  for (int i = 0; i < dim; ++i) {
    double normed = 0.0;
    if (std_q6 > 0) {
      const std::int64_t r = row[i] - mean_q;
      normed = static_cast<double>(div_round(r << 16, std_q6)) / 1024.0;
    }
    out[i] = quantize_value(normed * gamma[i] + beta[i], out_qp);
  }
}

GeluTable build_gelu_table(const QuantParams& in_qp, const QuantParams& out_qp) {
  GeluTable t;
  for (int q = -128; q <= 127; ++q) {
    const double x = in_qp.dequant(q);
    const double y = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    t.lut[q + 128] = quantize_value(y, out_qp);
  }
  // monotone for non-negative inputs; a violation means the grids are broken
  for (int q = -128; q < 127; ++q) {
    if (in_qp.dequant(q) >= 0.0 && t.lut[q + 129] < t.lut[q + 128])
      throw NumericError("i_gelu: lookup table not monotone on x >= 0");
  }
  return t;
}

const QuantParams& CalibrationResult::at(const std::string& name) const {
  auto it = sites.find(name);
  if (it == sites.end()) throw ValidationError("uncalibrated site: " + name);
  return it->second;
}

// ---------------------------------------------------------------------------
// calibration: FP32 forward with min/max observation at every site
// ---------------------------------------------------------------------------

namespace {

struct MinMax {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(const float* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, static_cast<double>(v[i]));
      hi = std::max(hi, static_cast<double>(v[i]));
    }
  }
};

using SiteRanges = std::map<std::string, MinMax>;

std::string site(int block, const char* name) {
  return "blk" + std::to_string(block) + "." + name;
}

void observed_forward(const TokenSequence& seq, const EncoderWeights& w,
                      AttentionMaskMode mask, SiteRanges& ranges) {
  const int n = seq.count;
  const int d = w.cfg.embed_dim;
  const int h = w.cfg.heads;
  const int dh = w.cfg.head_dim();
  const int m = w.cfg.mlp_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::vector<int> positions = rope_positions(seq, w.cfg);

  std::vector<float> x = seq.embeddings;
  ranges["input"].add(x.data(), x.size());

  std::vector<float> qkv(static_cast<std::size_t>(n) * 3 * d);
  std::vector<float> q(static_cast<std::size_t>(h) * n * dh), k(q.size()), v(q.size());
  std::vector<float> ctx(static_cast<std::size_t>(n) * d);
  std::vector<float> hid(static_cast<std::size_t>(n) * m);
  std::vector<float> tmp(static_cast<std::size_t>(n) * d);

  for (int b = 0; b < w.cfg.layers; ++b) {
    const BlockWeights& bw = w.blocks[b];
    std::vector<float> normed = layer_norm(x, n, d, bw.ln1_gamma, bw.ln1_beta);
    ranges[site(b, "ln1")].add(normed.data(), normed.size());

    kernels::linear(normed.data(), n, d, bw.w_qkv.data(), bw.b_qkv.data(), 3 * d, qkv.data());
    ranges[site(b, "qkv")].add(qkv.data(), qkv.size());

    for (int t = 0; t < n; ++t)
      for (int hh = 0; hh < h; ++hh) {
        const float* row = qkv.data() + static_cast<std::size_t>(t) * 3 * d;
        std::memcpy(&q[(static_cast<std::size_t>(hh) * n + t) * dh], row + hh * dh, sizeof(float) * dh);
        std::memcpy(&k[(static_cast<std::size_t>(hh) * n + t) * dh], row + d + hh * dh, sizeof(float) * dh);
        std::memcpy(&v[(static_cast<std::size_t>(hh) * n + t) * dh], row + 2 * d + hh * dh, sizeof(float) * dh);
      }
    for (int hh = 0; hh < h; ++hh) {
      kernels::rope_rows(&q[static_cast<std::size_t>(hh) * n * dh], n, dh, positions.data(), w.cfg.rope_base);
      kernels::rope_rows(&k[static_cast<std::size_t>(hh) * n * dh], n, dh, positions.data(), w.cfg.rope_base);
    }
    ranges[site(b, "q_rot")].add(q.data(), q.size());
    ranges[site(b, "k_rot")].add(k.data(), k.size());

    MinMax& score_range = ranges[site(b, "scores")];
    for (int hh = 0; hh < h; ++hh)
      for (int i = 0; i < n; ++i) {
        const int limit = (mask == AttentionMaskMode::causal) ? i + 1 : n;
        std::vector<float> scores(limit);
        for (int j = 0; j < limit; ++j) {
          double dot = 0.0;
          for (int e = 0; e < dh; ++e)
            dot += static_cast<double>(q[(static_cast<std::size_t>(hh) * n + i) * dh + e]) *
                   k[(static_cast<std::size_t>(hh) * n + j) * dh + e];
          scores[j] = static_cast<float>(dot * scale);
        }
        score_range.add(scores.data(), scores.size());
        kernels::softmax_row(scores.data(), limit);
        for (int e = 0; e < dh; ++e) {
          double acc = 0.0;
          for (int j = 0; j < limit; ++j)
            acc += static_cast<double>(scores[j]) *
                   v[(static_cast<std::size_t>(hh) * n + j) * dh + e];
          ctx[static_cast<std::size_t>(i) * d + hh * dh + e] = static_cast<float>(acc);
        }
      }
    ranges[site(b, "ctx")].add(ctx.data(), ctx.size());

    kernels::linear(ctx.data(), n, d, bw.w_out.data(), bw.b_out.data(), d, tmp.data());
    ranges[site(b, "attn_out")].add(tmp.data(), tmp.size());
    kernels::add_inplace(x.data(), tmp.data(), x.size());
    ranges[site(b, "resid1")].add(x.data(), x.size());

    normed = layer_norm(x, n, d, bw.ln2_gamma, bw.ln2_beta);
    ranges[site(b, "ln2")].add(normed.data(), normed.size());
    kernels::linear(normed.data(), n, d, bw.w_fc1.data(), bw.b_fc1.data(), m, hid.data());
    ranges[site(b, "fc1")].add(hid.data(), hid.size());
    kernels::gelu_exact(hid.data(), hid.size(), hid.data());
    ranges[site(b, "gelu")].add(hid.data(), hid.size());
    kernels::linear(hid.data(), n, m, bw.w_fc2.data(), bw.b_fc2.data(), d, tmp.data());
    ranges[site(b, "fc2")].add(tmp.data(), tmp.size());
    kernels::add_inplace(x.data(), tmp.data(), x.size());
    ranges[site(b, "resid2")].add(x.data(), x.size());
  }
  std::vector<float> fin = layer_norm(x, n, d, w.final_ln_gamma, w.final_ln_beta);
  ranges["final_ln"].add(fin.data(), fin.size());
  FusedFeature fused = fuse_and_pool(fin, seq);
  ranges["fused"].add(fused.vector.data(), fused.vector.size());
}

}  // namespace

CalibrationResult calibrate(const EncoderWeights& model,
                            const std::vector<TokenSequence>& calib_set,
                            AttentionMaskMode mask) {
  if (calib_set.empty()) throw ValidationError("calibrate: calibration set is empty");
  model.validate();
  SiteRanges ranges;
  for (const TokenSequence& seq : calib_set) observed_forward(seq, model, mask, ranges);
  CalibrationResult result;
  for (const auto& [name, mm] : ranges) result.sites[name] = affine_from_range(mm.lo, mm.hi);
  return result;
}

// ---------------------------------------------------------------------------
// model quantization
// ---------------------------------------------------------------------------

namespace {

QuantizedTensor quantize_weight(const std::vector<float>& w, std::vector<int> shape) {
  double maxabs = 0.0;
  for (float v : w) maxabs = std::max(maxabs, std::abs(static_cast<double>(v)));
  return quantize_tensor(w, std::move(shape), symmetric_from_maxabs(maxabs));
}

std::vector<std::int32_t> quantize_bias(const std::vector<float>& b, double in_scale,
                                        double w_scale) {
  std::vector<std::int32_t> out(b.size());
  const double s = in_scale * w_scale;
  for (std::size_t i = 0; i < b.size(); ++i)
    out[i] = static_cast<std::int32_t>(round_half_away(b[i] / s));
  return out;
}

}  // namespace

QuantizedModel quantize_model(const EncoderWeights& model, const ClassifierHead& head,
                              const CalibrationResult& calib) {
  model.validate();
  const ModelConfig& cfg = model.cfg;
  QuantizedModel qm;
  qm.cfg = cfg;
  qm.input = calib.at("input");
  qm.blocks.resize(cfg.layers);
  for (int b = 0; b < cfg.layers; ++b) {
    const BlockWeights& bw = model.blocks[b];
    QuantizedBlock& qb = qm.blocks[b];
    qb.ln1_gamma = bw.ln1_gamma;
    qb.ln1_beta = bw.ln1_beta;
    qb.ln2_gamma = bw.ln2_gamma;
    qb.ln2_beta = bw.ln2_beta;
    qb.ln1_out = calib.at(site(b, "ln1"));
    qb.qkv_out = calib.at(site(b, "qkv"));
    qb.q_rot = calib.at(site(b, "q_rot"));
    qb.k_rot = calib.at(site(b, "k_rot"));
    qb.scores = calib.at(site(b, "scores"));
    qb.ctx = calib.at(site(b, "ctx"));
    qb.attn_out = calib.at(site(b, "attn_out"));
    qb.resid1 = calib.at(site(b, "resid1"));
    qb.ln2_out = calib.at(site(b, "ln2"));
    qb.fc1_out = calib.at(site(b, "fc1"));
    qb.gelu_out = calib.at(site(b, "gelu"));
    qb.fc2_out = calib.at(site(b, "fc2"));
    qb.resid2 = calib.at(site(b, "resid2"));

    qb.w_qkv = quantize_weight(bw.w_qkv, {3 * cfg.embed_dim, cfg.embed_dim});
    qb.w_out = quantize_weight(bw.w_out, {cfg.embed_dim, cfg.embed_dim});
    qb.w_fc1 = quantize_weight(bw.w_fc1, {cfg.mlp_dim(), cfg.embed_dim});
    qb.w_fc2 = quantize_weight(bw.w_fc2, {cfg.embed_dim, cfg.mlp_dim()});
    qb.b_qkv = quantize_bias(bw.b_qkv, qb.ln1_out.scale, qb.w_qkv.qp.scale);
    qb.b_out = quantize_bias(bw.b_out, qb.ctx.scale, qb.w_out.qp.scale);
    qb.b_fc1 = quantize_bias(bw.b_fc1, qb.ln2_out.scale, qb.w_fc1.qp.scale);
    qb.b_fc2 = quantize_bias(bw.b_fc2, qb.gelu_out.scale, qb.w_fc2.qp.scale);
    qb.gelu_lut = build_gelu_table(qb.fc1_out, qb.gelu_out);
  }
  qm.final_ln_gamma = model.final_ln_gamma;
  qm.final_ln_beta = model.final_ln_beta;
  qm.final_ln_out = calib.at("final_ln");
  qm.fused = calib.at("fused");
  qm.classes = head.classes;
  if (head.classes > 0) {
    qm.clf_w = quantize_weight(head.w, {head.classes, cfg.channels * cfg.embed_dim});
    qm.clf_b = head.b;
  }
  return qm;
}

// ---------------------------------------------------------------------------
// integer-only forward
// ---------------------------------------------------------------------------

namespace {

void int_layer_norm_rows(const std::int8_t* x, int rows, int dim, const QuantParams& in_qp,
                         const std::vector<float>& gamma, const std::vector<float>& beta,
                         const QuantParams& out_qp, std::int8_t* out) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r)
    i_layernorm(x + static_cast<std::size_t>(r) * dim, dim, in_qp, gamma.data(), beta.data(),
                out_qp, out + static_cast<std::size_t>(r) * dim);
}

void add_requant(const std::int8_t* a, const QuantParams& qa, const std::int8_t* b,
                 const QuantParams& qb, std::size_t n, const QuantParams& out_qp,
                 std::int8_t* out) {
  const RequantMultiplier ma = requant_multiplier(qa.scale / out_qp.scale);
  const RequantMultiplier mb = requant_multiplier(qb.scale / out_qp.scale);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const std::int64_t va =
        round_shift(static_cast<std::int64_t>(a[i] - qa.zero_point) * ma.multiplier, ma.shift);
    const std::int64_t vb =
        round_shift(static_cast<std::int64_t>(b[i] - qb.zero_point) * mb.multiplier, mb.shift);
    out[i] = saturate_i8(va + vb + out_qp.zero_point);
  }
}

}  // namespace

std::vector<float> quantized_forward(const TokenSequence& seq, const QuantizedModel& qm,
                                     AttentionMaskMode mask) {
  const ModelConfig& cfg = qm.cfg;
  const int n = seq.count;
  const int d = cfg.embed_dim;
  const int h = cfg.heads;
  const int dh = cfg.head_dim();
  const int m = cfg.mlp_dim();
  if (seq.dim != d) throw ShapeError("quantized_forward: token dim does not match config");
  if (n >= (1 << 15) || d >= (1 << 15) || m >= (1 << 15))
    throw ShapeError("quantized_forward: dimensions must stay below 2^15");
  if (static_cast<int>(qm.blocks.size()) != cfg.layers)
    throw ValidationError("quantized_forward: model not quantized for this config");

  const std::vector<int> positions = rope_positions(seq, cfg);
  // Q1.14 rotation tables per (position, pair)
  std::vector<std::int16_t> rope_cos(static_cast<std::size_t>(n) * (dh / 2));
  std::vector<std::int16_t> rope_sin(rope_cos.size());
  for (int t = 0; t < n; ++t)
    for (int j = 0; j * 2 < dh; ++j) {
      const double theta = positions[t] * std::pow(cfg.rope_base, -2.0 * j / dh);
      rope_cos[static_cast<std::size_t>(t) * (dh / 2) + j] =
          static_cast<std::int16_t>(round_half_away(std::cos(theta) * (1 << kRopeFracBits)));
      rope_sin[static_cast<std::size_t>(t) * (dh / 2) + j] =
          static_cast<std::int16_t>(round_half_away(std::sin(theta) * (1 << kRopeFracBits)));
    }

  std::vector<std::int8_t> x(static_cast<std::size_t>(n) * d);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = quantize_value(seq.embeddings[i], qm.input);
  QuantParams cur = qm.input;

  std::vector<std::int8_t> ln(x.size()), qkv(static_cast<std::size_t>(n) * 3 * d);
  std::vector<std::int8_t> q_rot(static_cast<std::size_t>(h) * n * dh), k_rot(q_rot.size());
  std::vector<std::int8_t> ctx(x.size()), attn(x.size()), resid(x.size());
  std::vector<std::int8_t> hid(static_cast<std::size_t>(n) * m), proj(x.size());

  for (int b = 0; b < cfg.layers; ++b) {
    const QuantizedBlock& qb = qm.blocks[b];

    int_layer_norm_rows(x.data(), n, d, cur, qb.ln1_gamma, qb.ln1_beta, qb.ln1_out, ln.data());

    RequantMultiplier rm =
        requant_multiplier(qb.ln1_out.scale * qb.w_qkv.qp.scale / qb.qkv_out.scale);
    kernels::int8_linear_requant(ln.data(), n, d, qb.ln1_out.zero_point, qb.w_qkv.data.data(),
                                 0, 3 * d, qb.b_qkv.data(), rm.multiplier, rm.shift,
                                 qb.qkv_out.zero_point, qkv.data());

    // integer rotary embedding on q and k head slices
    const RequantMultiplier mq = requant_multiplier(
        qb.qkv_out.scale / (qb.q_rot.scale * (1 << kRopeFracBits)));
    const RequantMultiplier mk = requant_multiplier(
        qb.qkv_out.scale / (qb.k_rot.scale * (1 << kRopeFracBits)));
    const int zq = qb.qkv_out.zero_point;
#pragma omp parallel for collapse(2) schedule(static)
    for (int hh = 0; hh < h; ++hh)
      for (int t = 0; t < n; ++t) {
        const std::int8_t* row = qkv.data() + static_cast<std::size_t>(t) * 3 * d;
        std::int8_t* qr = &q_rot[(static_cast<std::size_t>(hh) * n + t) * dh];
        std::int8_t* kr = &k_rot[(static_cast<std::size_t>(hh) * n + t) * dh];
        for (int j = 0; j * 2 < dh; ++j) {
          const std::int32_t c = rope_cos[static_cast<std::size_t>(t) * (dh / 2) + j];
          const std::int32_t s = rope_sin[static_cast<std::size_t>(t) * (dh / 2) + j];
          const std::int32_t qe = row[hh * dh + 2 * j] - zq;
          const std::int32_t qo = row[hh * dh + 2 * j + 1] - zq;
          const std::int32_t ke = row[d + hh * dh + 2 * j] - zq;
          const std::int32_t ko = row[d + hh * dh + 2 * j + 1] - zq;
          qr[2 * j] = saturate_i8(
              round_shift(static_cast<std::int64_t>(qe * c - qo * s) * mq.multiplier, mq.shift) +
              qb.q_rot.zero_point);
          qr[2 * j + 1] = saturate_i8(
              round_shift(static_cast<std::int64_t>(qe * s + qo * c) * mq.multiplier, mq.shift) +
              qb.q_rot.zero_point);
          kr[2 * j] = saturate_i8(
              round_shift(static_cast<std::int64_t>(ke * c - ko * s) * mk.multiplier, mk.shift) +
              qb.k_rot.zero_point);
          kr[2 * j + 1] = saturate_i8(
              round_shift(static_cast<std::int64_t>(ke * s + ko * c) * mk.multiplier, mk.shift) +
              qb.k_rot.zero_point);
        }
      }

    // attention scores stay int32 until the per-row requantization feeding
    // the integer softmax
    const RequantMultiplier ms = requant_multiplier(
        qb.q_rot.scale * qb.k_rot.scale /
        (std::sqrt(static_cast<double>(dh)) * qb.scores.scale));
    const RequantMultiplier mc =
        requant_multiplier(softmax_out_qp().scale * qb.qkv_out.scale / qb.ctx.scale);
#pragma omp parallel for collapse(2) schedule(static)
    for (int hh = 0; hh < h; ++hh)
      for (int i = 0; i < n; ++i) {
        const int limit = (mask == AttentionMaskMode::causal) ? i + 1 : n;
        std::vector<std::int8_t> srow(limit);
        const std::int8_t* qi = &q_rot[(static_cast<std::size_t>(hh) * n + i) * dh];
        for (int j = 0; j < limit; ++j) {
          const std::int8_t* kj = &k_rot[(static_cast<std::size_t>(hh) * n + j) * dh];
          std::int32_t acc = 0;
          for (int e = 0; e < dh; ++e)
            acc += (static_cast<std::int32_t>(qi[e]) - qb.q_rot.zero_point) *
                   (static_cast<std::int32_t>(kj[e]) - qb.k_rot.zero_point);
          srow[j] = saturate_i8(
              round_shift(static_cast<std::int64_t>(acc) * ms.multiplier, ms.shift) +
              qb.scores.zero_point);
        }
        const std::vector<std::int8_t> probs = i_softmax(srow.data(), limit, qb.scores);
        std::int8_t* orow = &ctx[static_cast<std::size_t>(i) * d + hh * dh];
        for (int e = 0; e < dh; ++e) {
          std::int32_t acc = 0;
          for (int j = 0; j < limit; ++j)
            acc += (static_cast<std::int32_t>(probs[j]) + 128) *
                   (static_cast<std::int32_t>(
                        qkv[static_cast<std::size_t>(j) * 3 * d + 2 * d + hh * dh + e]) -
                    zq);
          orow[e] = saturate_i8(
              round_shift(static_cast<std::int64_t>(acc) * mc.multiplier, mc.shift) +
              qb.ctx.zero_point);
        }
      }

    rm = requant_multiplier(qb.ctx.scale * qb.w_out.qp.scale / qb.attn_out.scale);
    kernels::int8_linear_requant(ctx.data(), n, d, qb.ctx.zero_point, qb.w_out.data.data(), 0,
                                 d, qb.b_out.data(), rm.multiplier, rm.shift,
                                 qb.attn_out.zero_point, attn.data());

    add_requant(x.data(), cur, attn.data(), qb.attn_out, x.size(), qb.resid1, resid.data());

    int_layer_norm_rows(resid.data(), n, d, qb.resid1, qb.ln2_gamma, qb.ln2_beta, qb.ln2_out,
                        ln.data());
    rm = requant_multiplier(qb.ln2_out.scale * qb.w_fc1.qp.scale / qb.fc1_out.scale);
    kernels::int8_linear_requant(ln.data(), n, d, qb.ln2_out.zero_point, qb.w_fc1.data.data(),
                                 0, m, qb.b_fc1.data(), rm.multiplier, rm.shift,
                                 qb.fc1_out.zero_point, hid.data());
    for (std::int8_t& v : hid) v = qb.gelu_lut.apply(v);
    rm = requant_multiplier(qb.gelu_out.scale * qb.w_fc2.qp.scale / qb.fc2_out.scale);
    kernels::int8_linear_requant(hid.data(), n, m, qb.gelu_out.zero_point, qb.w_fc2.data.data(),
                                 0, d, qb.b_fc2.data(), rm.multiplier, rm.shift,
                                 qb.fc2_out.zero_point, proj.data());
    add_requant(resid.data(), qb.resid1, proj.data(), qb.fc2_out, x.size(), qb.resid2,
                x.data());
    cur = qb.resid2;
  }

  int_layer_norm_rows(x.data(), n, d, cur, qm.final_ln_gamma, qm.final_ln_beta,
                      qm.final_ln_out, ln.data());

  // fused feature: concatenate channels, integer mean over patches
  int channels = 0, patches = 0;
  for (int k = 0; k < n; ++k) {
    channels = std::max(channels, seq.channel_of[k] + 1);
    patches = std::max(patches, seq.patch_of[k] + 1);
  }
  std::vector<std::int32_t> acc(static_cast<std::size_t>(channels) * d, 0);
  for (int k = 0; k < n; ++k) {
    const int c = seq.channel_of[k];
    for (int e = 0; e < d; ++e)
      acc[static_cast<std::size_t>(c) * d + e] +=
          static_cast<std::int32_t>(ln[static_cast<std::size_t>(k) * d + e]) -
          qm.final_ln_out.zero_point;
  }
  const RequantMultiplier mf =
      requant_multiplier(qm.final_ln_out.scale / (patches * qm.fused.scale));
  std::vector<std::int8_t> fused(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    fused[i] = saturate_i8(
        round_shift(static_cast<std::int64_t>(acc[i]) * mf.multiplier, mf.shift) +
        qm.fused.zero_point);

  // FP32 only here: int8 inputs and weights, float accumulation of logits
  std::vector<float> logits(qm.classes);
  const int in = channels * d;
  for (int c = 0; c < qm.classes; ++c) {
    std::int64_t dot = 0;
    const std::int8_t* wrow = qm.clf_w.data.data() + static_cast<std::size_t>(c) * in;
    for (int j = 0; j < in; ++j)
      dot += (static_cast<std::int32_t>(fused[j]) - qm.fused.zero_point) *
             static_cast<std::int32_t>(wrow[j]);
    logits[c] = static_cast<float>(dot * qm.fused.scale * qm.clf_w.qp.scale + qm.clf_b[c]);
  }
  return logits;
}

}  // namespace tinymyo::quant
