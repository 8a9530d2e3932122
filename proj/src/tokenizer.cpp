#include "tinymyo/tokenizer.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace tinymyo {

PatchGrid patchify(const signal::WaveformRecord& window, const ModelConfig& cfg) {
  cfg.validate();
  if (window.frames != cfg.timesteps || window.channels != cfg.channels)
    throw ShapeError("patchify: window shape does not match model config");
  PatchGrid g;
  g.channels = cfg.channels;
  g.patches_per_channel = cfg.num_patches();
  g.patch_len = cfg.patch_len;
  g.values.resize(static_cast<std::size_t>(g.channels) * g.patches_per_channel * g.patch_len);
  for (int c = 0; c < g.channels; ++c)
    for (int i = 0; i < g.patches_per_channel; ++i)
      for (int j = 0; j < g.patch_len; ++j)
        g.at(c, i, j) = static_cast<float>(window.at(i * cfg.patch_stride + j, c));
  return g;
}

TokenSequence embed(const PatchGrid& grid, const TokenizerWeights& w) {
  const int l = grid.patch_len;
  const int d = static_cast<int>(w.b_proj.size());
  if (w.w_proj.size() != static_cast<std::size_t>(d) * l || w.mask_token.size() != static_cast<std::size_t>(d))
    throw ShapeError("embed: tokenizer weight shapes disagree");
  TokenSequence seq;
  seq.count = grid.channels * grid.patches_per_channel;
  seq.dim = d;
  seq.embeddings.resize(static_cast<std::size_t>(seq.count) * d);
  seq.mask_flags.assign(seq.count, 0);
  seq.channel_of.resize(seq.count);
  seq.patch_of.resize(seq.count);
  for (int c = 0; c < grid.channels; ++c) {
    for (int i = 0; i < grid.patches_per_channel; ++i) {
      const int k = c * grid.patches_per_channel + i;
      seq.channel_of[k] = c;
      seq.patch_of[k] = i;
      const float* p = grid.patch(c, i);
      float* e = seq.token(k);
      for (int r = 0; r < d; ++r) {
        double acc = w.b_proj[r];
        const float* row = w.w_proj.data() + static_cast<std::size_t>(r) * l;
        for (int j = 0; j < l; ++j) acc += static_cast<double>(row[j]) * p[j];
        e[r] = static_cast<float>(acc);
      }
    }
  }
  return seq;
}

TokenSequence apply_mask(const TokenSequence& seq, double ratio,
                         std::uint64_t rng_seed, const TokenizerWeights& w) {
  if (ratio < 0.0 || ratio >= 1.0)
    throw ValidationError("apply_mask: ratio must lie in [0, 1)");
  if (w.mask_token.size() != static_cast<std::size_t>(seq.dim))
    throw ShapeError("apply_mask: mask token dimension mismatch");
  TokenSequence out = seq;
  const int n = seq.count;
  const int m = static_cast<int>(round_half_away(ratio * n));
  if (m == 0) return out;

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(rng_seed);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  for (int i = 0; i < m; ++i) {
    const int k = idx[i];
    out.mask_flags[k] = 1;
    std::memcpy(out.token(k), w.mask_token.data(), sizeof(float) * seq.dim);
  }
  return out;
}

}  // namespace tinymyo
