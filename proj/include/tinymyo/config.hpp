#pragma once

#include <string>

#include "tinymyo/common.hpp"

namespace tinymyo {

// Backbone geometry. Defaults describe the full-size model; tests shrink it.
struct ModelConfig {
  int timesteps = 1000;    // window length T
  int channels = 16;       // C
  int patch_len = 20;      // L
  int patch_stride = 20;   // S
  int embed_dim = 192;     // d_e
  int layers = 8;
  int heads = 3;
  int mlp_ratio = 4;
  double rope_base = 10000.0;
  // Rotary position index: flattened token index by default, temporal patch
  // index when set.
  bool rope_temporal_positions = false;

  int num_patches() const { return (timesteps - patch_len) / patch_stride + 1; }
  int num_tokens() const { return channels * num_patches(); }
  int head_dim() const { return embed_dim / heads; }
  int mlp_dim() const { return mlp_ratio * embed_dim; }

  void validate() const {
    if (timesteps < 1 || channels < 1) throw ValidationError("model: timesteps and channels must be >= 1");
    if (patch_len < 1 || patch_len > timesteps) throw ValidationError("model: patch_len must be in [1, timesteps]");
    if (patch_stride < 1) throw ValidationError("model: patch_stride must be >= 1");
    if (embed_dim < 1 || layers < 0 || heads < 1 || mlp_ratio < 1)
      throw ValidationError("model: embed_dim/layers/heads/mlp_ratio out of range");
    if (embed_dim % heads != 0) throw ValidationError("model: embed_dim must be divisible by heads");
    if ((embed_dim / heads) % 2 != 0) throw ValidationError("model: head dim must be even for rotary pairs");
    if (rope_base <= 1.0) throw ValidationError("model: rope_base must be > 1");
  }
};

}  // namespace tinymyo
