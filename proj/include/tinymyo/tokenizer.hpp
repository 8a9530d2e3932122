#pragma once

#include <cstdint>
#include <vector>

#include "tinymyo/config.hpp"
#include "tinymyo/signal.hpp"

namespace tinymyo {

// Per-channel temporal patches, [C x N_p x L].
struct PatchGrid {
  std::vector<float> values;
  int channels = 0;
  int patches_per_channel = 0;
  int patch_len = 0;

  float& at(int c, int i, int j) {
    return values[(static_cast<std::size_t>(c) * patches_per_channel + i) * patch_len + j];
  }
  float at(int c, int i, int j) const {
    return values[(static_cast<std::size_t>(c) * patches_per_channel + i) * patch_len + j];
  }
  const float* patch(int c, int i) const {
    return values.data() + (static_cast<std::size_t>(c) * patches_per_channel + i) * patch_len;
  }
};

// Flattened token sequence. Token k maps to (channel, patch) channel-major:
// k = c * N_p + i.
struct TokenSequence {
  std::vector<float> embeddings;  // [count x dim]
  std::vector<std::uint8_t> mask_flags;
  std::vector<int> channel_of;
  std::vector<int> patch_of;
  int count = 0;
  int dim = 0;

  float* token(int k) { return embeddings.data() + static_cast<std::size_t>(k) * dim; }
  const float* token(int k) const { return embeddings.data() + static_cast<std::size_t>(k) * dim; }
};

struct TokenizerWeights {
  std::vector<float> w_proj;      // [d_e x L]
  std::vector<float> b_proj;      // [d_e]
  std::vector<float> mask_token;  // [d_e]

  std::int64_t parameter_count() const {
    return static_cast<std::int64_t>(w_proj.size()) + b_proj.size() + mask_token.size();
  }
};

PatchGrid patchify(const signal::WaveformRecord& window, const ModelConfig& cfg);

TokenSequence embed(const PatchGrid& grid, const TokenizerWeights& w);

// Replaces round(ratio * N) tokens, chosen by a Fisher-Yates partial shuffle
// driven by mt19937_64, with the mask token. Deterministic given the seed.
TokenSequence apply_mask(const TokenSequence& seq, double ratio,
                         std::uint64_t rng_seed, const TokenizerWeights& w);

}  // namespace tinymyo
