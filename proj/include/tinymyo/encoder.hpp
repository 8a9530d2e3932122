#pragma once

#include <cstdint>
#include <vector>

#include "tinymyo/config.hpp"
#include "tinymyo/tokenizer.hpp"

namespace tinymyo {

struct BlockWeights {
  std::vector<float> ln1_gamma, ln1_beta;  // [d_e]
  std::vector<float> w_qkv, b_qkv;         // [3*d_e x d_e], [3*d_e]
  std::vector<float> w_out, b_out;         // [d_e x d_e], [d_e]
  std::vector<float> ln2_gamma, ln2_beta;  // [d_e]
  std::vector<float> w_fc1, b_fc1;         // [m x d_e], [m]
  std::vector<float> w_fc2, b_fc2;         // [d_e x m], [d_e]

  std::int64_t parameter_count() const;
};

struct EncoderWeights {
  ModelConfig cfg;
  TokenizerWeights tokenizer;
  std::vector<BlockWeights> blocks;
  std::vector<float> final_ln_gamma, final_ln_beta;

  void validate() const;
};

enum class AttentionMaskMode { bidirectional, causal };

struct ParamReport {
  std::int64_t tokenizer = 0;   // projection + bias
  std::int64_t mask_token = 0;
  std::int64_t per_block = 0;
  std::int64_t blocks_total = 0;
  std::int64_t final_ln = 0;
  std::int64_t decoder = 0;     // reconstruction head, L*d_e + L
  std::int64_t total = 0;
};

// Row-wise (x - mean) / sqrt(var + eps) * gamma + beta, population variance.
std::vector<float> layer_norm(const std::vector<float>& x, int rows, int dim,
                              const std::vector<float>& gamma,
                              const std::vector<float>& beta,
                              float eps = 1e-5f);

// In-place rotary embedding on per-head q and k, [n x d_h] each.
void apply_rope(std::vector<float>& q, std::vector<float>& k, int n, int head_dim,
                const std::vector<int>& positions, double base);

// Multi-head self-attention over already-normalized input.
std::vector<float> mhsa(const std::vector<float>& x, int n, const ModelConfig& cfg,
                        const BlockWeights& w, AttentionMaskMode mask,
                        const std::vector<int>& positions);

// Pre-LN transformer stack with final layer norm. Throws NumericError naming
// the block if a non-finite value appears.
std::vector<float> encoder_forward(const TokenSequence& seq, const EncoderWeights& w,
                                   AttentionMaskMode mask);

// Token positions for rotary embedding, per config (flattened index by
// default, temporal patch index when selected).
std::vector<int> rope_positions(const TokenSequence& seq, const ModelConfig& cfg);

ParamReport count_parameters(const EncoderWeights& w);

// Closed-form counts for a config, without materializing weights.
ParamReport count_parameters(const ModelConfig& cfg);

// Deterministic Gaussian-ish initialization for tests and the CLI.
EncoderWeights random_encoder_weights(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace tinymyo
