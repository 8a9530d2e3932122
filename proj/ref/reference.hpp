#pragma once

// Serial reference implementations. Straight-line loops, no OpenMP, no
// shared code with src/ kernels; tests compare the engine against these and
// the benchmark measures the gap.

#include <cstdint>
#include <vector>

#include "tinymyo/encoder.hpp"
#include "tinymyo/tokenizer.hpp"

namespace tinymyo::ref {

std::vector<float> linear(const std::vector<float>& x, int rows, int in_dim,
                          const std::vector<float>& w, const std::vector<float>& b,
                          int out_dim);

std::vector<float> layer_norm(const std::vector<float>& x, int rows, int dim,
                              const std::vector<float>& gamma,
                              const std::vector<float>& beta, float eps);

std::vector<float> softmax(const std::vector<float>& row);

double gelu(double x);

// Dense O(n^2) attention for one block, full matrices, no fusion.
std::vector<float> mhsa(const std::vector<float>& x, int n, const ModelConfig& cfg,
                        const BlockWeights& w, bool causal,
                        const std::vector<int>& positions);

// Second, independently written pre-LN encoder evaluator.
std::vector<float> encoder_forward(const TokenSequence& seq, const EncoderWeights& w,
                                   bool causal);

// Serial int8 matmul with the same requantization contract as the engine.
void int8_linear_requant(const std::int8_t* a, int rows, int in_dim, int za,
                         const std::int8_t* b_mat, int zb, int out_dim,
                         const std::int32_t* bias, std::int32_t multiplier,
                         int shift, int zout, std::int8_t* out);

}  // namespace tinymyo::ref
