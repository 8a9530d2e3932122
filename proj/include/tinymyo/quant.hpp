#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tinymyo/encoder.hpp"
#include "tinymyo/heads.hpp"

namespace tinymyo::quant {

enum class QuantScheme { symmetric_weight, affine_activation };

struct QuantParams {
  double scale = 1.0;
  int zero_point = 0;
  QuantScheme scheme = QuantScheme::affine_activation;

  double dequant(int q) const { return scale * (q - zero_point); }
};

struct QuantizedTensor {
  std::vector<std::int8_t> data;
  std::vector<int> shape;
  QuantParams qp;

  std::int64_t element_count() const {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
};

// Integer multiplier m and right-shift s with |m*2^-s - target| / target
// <= 2^-15; m lands in [2^14, 2^15).
struct RequantMultiplier {
  std::int32_t multiplier = 0;
  int shift = 0;
};

RequantMultiplier requant_multiplier(double target);

// Affine activation params covering [lo, hi] extended to include zero;
// degenerate ranges get the floor scale 1e-8 with the endpoint mapped
// exactly.
QuantParams affine_from_range(double lo, double hi);
QuantParams symmetric_from_maxabs(double maxabs);

QuantizedTensor quantize_tensor(const std::vector<float>& x, std::vector<int> shape,
                                const QuantParams& qp);
std::vector<float> dequantize(const QuantizedTensor& t);

// A [M x K] times B [K x N] with int32 accumulation and a single
// requantization to out_qp. Dims are asserted < 2^15 so the accumulator
// cannot overflow.
QuantizedTensor int_matmul_requant(const QuantizedTensor& a, const QuantizedTensor& b,
                                   const QuantParams& out_qp);

// Fixed output grid of the integer softmax: probabilities in units of 1/256.
inline QuantParams softmax_out_qp() { return {1.0 / 256.0, -128, QuantScheme::affine_activation}; }

// Integer-only softmax: max subtraction, base-2 decomposition, second-order
// polynomial exp on the reduced range, largest-remainder division so the
// outputs sum to 256 exactly (255 when a dominant entry saturates).
std::vector<std::int8_t> i_softmax(const std::int8_t* row, int n, const QuantParams& in_qp);

// floor(sqrt(v)) by 4 Newton iterations from a bit-length seed plus a final
// floor correction; valid for all non-negative int32 inputs.
std::int64_t isqrt_newton(std::int64_t v);

// Integer mean/variance and Newton square root; gamma/beta applied in FP32
// and requantized.
void i_layernorm(const std::int8_t* row, int dim, const QuantParams& in_qp,
                 const float* gamma, const float* beta, const QuantParams& out_qp,
                 std::int8_t* out);

// 256-entry exact lookup table for GELU at a given input/output grid.
struct GeluTable {
  std::array<std::int8_t, 256> lut{};
  std::int8_t apply(std::int8_t q) const { return lut[static_cast<int>(q) + 128]; }
};

GeluTable build_gelu_table(const QuantParams& in_qp, const QuantParams& out_qp);

struct CalibrationResult {
  std::map<std::string, QuantParams> sites;

  const QuantParams& at(const std::string& name) const;
};

// Min/max observation of every activation site over the calibration set,
// using an instrumented FP32 forward pass.
CalibrationResult calibrate(const EncoderWeights& model,
                            const std::vector<TokenSequence>& calib_set,
                            AttentionMaskMode mask);

struct QuantizedBlock {
  std::vector<float> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;  // FP32 retained
  QuantizedTensor w_qkv, w_out, w_fc1, w_fc2;                   // [out x in] int8
  std::vector<std::int32_t> b_qkv, b_out, b_fc1, b_fc2;
  QuantParams ln1_out, qkv_out, q_rot, k_rot, scores, ctx, attn_out, resid1,
      ln2_out, fc1_out, gelu_out, fc2_out, resid2;
  GeluTable gelu_lut;
};

struct QuantizedModel {
  ModelConfig cfg;
  QuantParams input;
  std::vector<QuantizedBlock> blocks;
  std::vector<float> final_ln_gamma, final_ln_beta;
  QuantParams final_ln_out, fused;
  QuantizedTensor clf_w;      // [K x C*d_e], symmetric int8
  std::vector<float> clf_b;   // classifier stays FP32-accumulating
  int classes = 0;
};

QuantizedModel quantize_model(const EncoderWeights& model, const ClassifierHead& head,
                              const CalibrationResult& calib);

// Full integer path: encoder blocks, fusion and classifier input in int8,
// FP32 only for the final logit accumulation. Bit-exact across runs.
std::vector<float> quantized_forward(const TokenSequence& seq, const QuantizedModel& qm,
                                     AttentionMaskMode mask);

}  // namespace tinymyo::quant
