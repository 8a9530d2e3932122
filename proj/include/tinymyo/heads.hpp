#pragma once

#include <cstdint>
#include <vector>

#include "tinymyo/encoder.hpp"
#include "tinymyo/signal.hpp"
#include "tinymyo/tokenizer.hpp"

namespace tinymyo {

struct DecoderWeights {
  std::vector<float> w_dec;  // [L x d_e]
  std::vector<float> b_dec;  // [L]

  std::int64_t parameter_count() const {
    return static_cast<std::int64_t>(w_dec.size()) + b_dec.size();
  }
};

// Concatenated per-channel embeddings averaged over patches, [C * d_e].
struct FusedFeature {
  std::vector<float> vector;
};

struct ClassifierHead {
  std::vector<float> w;  // [K x C*d_e]
  std::vector<float> b;  // [K]
  int classes = 0;
};

// Pointwise/depthwise conv stack over the patch axis followed by
// linear-interpolation upsampling.
struct RegressionHead {
  int in_channels = 0;   // C * d_e
  int hidden = 256;
  int kernel = 5;
  int dofs = 5;
  int out_len = 0;
  std::vector<float> pw_in_w, pw_in_b;    // [hidden x in]
  std::vector<float> dw1_w, dw1_b;        // [hidden x kernel]
  std::vector<float> dw2_w, dw2_b;
  std::vector<float> pw_out_w, pw_out_b;  // [dofs x hidden]

  std::int64_t parameter_count() const;
};

struct LossReport {
  double l_masked = 0.0;
  double l_visible = 0.0;
  double l_total = 0.0;
};

PatchGrid decode_patches(const std::vector<float>& h, const TokenSequence& meta,
                         const DecoderWeights& w);

double smooth_l1(double a, double b, double beta);

// Element-wise smooth-L1 averaged separately over masked and visible patch
// elements; empty sets contribute 0. l_total = l_masked + 0.1 * l_visible.
LossReport masked_loss(const PatchGrid& target, const PatchGrid& recon,
                       const std::vector<std::uint8_t>& mask_flags, double beta = 1.0);

FusedFeature fuse_and_pool(const std::vector<float>& h, const TokenSequence& meta);

std::vector<float> classify(const FusedFeature& f, const ClassifierHead& head);

// Per-patch fused vectors in patch order, [N_p x C*d_e]; regression input.
std::vector<float> fuse_per_patch(const std::vector<float>& h, const TokenSequence& meta);

struct WindowedResult {
  std::vector<std::vector<float>> per_window;  // logits per window
  std::vector<float> aggregate;                // element-wise mean
  std::vector<int> offsets_samples;
};

// Slides win_ms/stride_ms over the stream, runs the causal-mask encoder and
// classifier per window, and averages logits. Empty result if the stream is
// shorter than one window.
WindowedResult windowed_inference(const signal::WaveformRecord& stream, int win_ms,
                                  int stride_ms, const EncoderWeights& model,
                                  const ClassifierHead& head);

// Conv stack over the patch axis, then upsampled trajectories [out_len x dofs].
std::vector<float> regress(const std::vector<float>& h, const TokenSequence& meta,
                           const RegressionHead& head);

RegressionHead make_regression_head(const ModelConfig& cfg, int out_len, std::uint64_t seed);
DecoderWeights random_decoder_weights(const ModelConfig& cfg, std::uint64_t seed);
ClassifierHead random_classifier_head(const ModelConfig& cfg, int classes, std::uint64_t seed);

}  // namespace tinymyo
