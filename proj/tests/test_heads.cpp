#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tinymyo/heads.hpp"

using namespace tinymyo;

namespace {

TokenSequence meta_seq(int channels, int patches, int dim) {
  TokenSequence seq;
  seq.count = channels * patches;
  seq.dim = dim;
  seq.embeddings.assign(static_cast<std::size_t>(seq.count) * dim, 0.0f);
  seq.mask_flags.assign(seq.count, 0);
  seq.channel_of.resize(seq.count);
  seq.patch_of.resize(seq.count);
  for (int c = 0; c < channels; ++c)
    for (int i = 0; i < patches; ++i) {
      seq.channel_of[c * patches + i] = c;
      seq.patch_of[c * patches + i] = i;
    }
  return seq;
}

PatchGrid zero_grid(int channels, int patches, int len) {
  PatchGrid g;
  g.channels = channels;
  g.patches_per_channel = patches;
  g.patch_len = len;
  g.values.assign(static_cast<std::size_t>(channels) * patches * len, 0.0f);
  return g;
}

}  // namespace

TEST_SUITE("heads") {

TEST_CASE("smooth l1 branches") {
  CHECK(smooth_l1(3.0, 3.0, 1.0) == 0.0);
  CHECK(smooth_l1(1.0, 0.0, 1.0) == doctest::Approx(0.5));   // |r| == beta
  CHECK(smooth_l1(2.5, 0.0, 1.0) == doctest::Approx(2.0));   // linear branch
  CHECK(smooth_l1(0.5, 0.0, 1.0) == doctest::Approx(0.125)); // quadratic branch
  CHECK_THROWS_AS(smooth_l1(1.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("decoder with zero weights emits the bias") {
  const TokenSequence meta = meta_seq(2, 3, 4);
  std::vector<float> h(static_cast<std::size_t>(meta.count) * 4, 0.7f);
  DecoderWeights w;
  w.w_dec.assign(5 * 4, 0.0f);
  w.b_dec = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f};
  const PatchGrid g = decode_patches(h, meta, w);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 5; ++j) CHECK(g.at(c, i, j) == doctest::Approx(1.0f + j));
}

TEST_CASE("identity decoder reproduces hidden rows") {
  const TokenSequence meta = meta_seq(1, 2, 3);
  std::vector<float> h = {1.0f, 2.0f, 3.0f, -1.0f, 0.5f, 4.0f};
  DecoderWeights w;
  w.w_dec = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  w.b_dec = {0.0f, 0.0f, 0.0f};
  const PatchGrid g = decode_patches(h, meta, w);
  for (int j = 0; j < 3; ++j) {
    CHECK(g.at(0, 0, j) == h[j]);
    CHECK(g.at(0, 1, j) == h[3 + j]);
  }
}

TEST_CASE("decoder matches a naive matmul oracle") {
  std::mt19937_64 rng(9);
  const TokenSequence meta = meta_seq(2, 2, 3);
  const std::vector<float> h = testutil::gauss_vec(rng, meta.count * 3);
  DecoderWeights w;
  w.w_dec = testutil::gauss_vec(rng, 4 * 3);
  w.b_dec = testutil::gauss_vec(rng, 4);
  const PatchGrid g = decode_patches(h, meta, w);
  for (int k = 0; k < meta.count; ++k)
    for (int j = 0; j < 4; ++j) {
      double want = w.b_dec[j];
      for (int e = 0; e < 3; ++e)
        want += static_cast<double>(w.w_dec[j * 3 + e]) * h[static_cast<std::size_t>(k) * 3 + e];
      CHECK(g.values[static_cast<std::size_t>(k) * 4 + j] ==
            doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("masked loss semantics") {
  PatchGrid target = zero_grid(1, 4, 2);
  PatchGrid recon = target;
  std::vector<std::uint8_t> flags = {1, 1, 0, 0};

  // perfect reconstruction
  LossReport rep = masked_loss(target, recon, flags);
  CHECK(rep.l_total == 0.0);

  // masked residuals 0.5, visible residuals exactly zero
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) recon.at(0, i, j) = 0.5f;
  rep = masked_loss(target, recon, flags);
  CHECK(rep.l_masked == doctest::Approx(0.125));
  CHECK(rep.l_visible == 0.0);
  CHECK(rep.l_total == doctest::Approx(0.125));

  // the same error on visible patches counts one tenth
  PatchGrid recon_vis = target;
  for (int i = 2; i < 4; ++i)
    for (int j = 0; j < 2; ++j) recon_vis.at(0, i, j) = 0.5f;
  const LossReport vis = masked_loss(target, recon_vis, flags);
  CHECK(vis.l_total == doctest::Approx(0.1 * rep.l_total));

  // l_total identity with both sides populated
  PatchGrid both = target;
  for (int i = 0; i < 4; ++i) both.at(0, i, 0) = 0.3f + 0.1f * i;
  const LossReport mixed = masked_loss(target, both, flags);
  CHECK(mixed.l_total == doctest::Approx(mixed.l_masked + 0.1 * mixed.l_visible).epsilon(1e-12));
}

TEST_CASE("loss is permutation invariant within mask groups") {
  std::mt19937_64 rng(31);
  PatchGrid target = zero_grid(1, 6, 3);
  PatchGrid recon = target;
  for (float& v : recon.values) v = static_cast<float>(testutil::gauss(rng));
  const std::vector<std::uint8_t> flags = {1, 1, 1, 0, 0, 0};
  const LossReport base = masked_loss(target, recon, flags);

  // swap two masked patches and two visible patches
  PatchGrid swapped = recon;
  for (int j = 0; j < 3; ++j) {
    std::swap(swapped.values[0 * 3 + j], swapped.values[2 * 3 + j]);
    std::swap(swapped.values[3 * 3 + j], swapped.values[5 * 3 + j]);
  }
  const LossReport perm = masked_loss(target, swapped, flags);
  CHECK(perm.l_total == doctest::Approx(base.l_total).epsilon(1e-12));
}

TEST_CASE("all-visible flags reduce to a tenth of the plain mean") {
  std::mt19937_64 rng(32);
  PatchGrid target = zero_grid(2, 3, 2);
  PatchGrid recon = target;
  for (float& v : recon.values) v = static_cast<float>(testutil::gauss(rng));
  const std::vector<std::uint8_t> flags(6, 0);
  const LossReport rep = masked_loss(target, recon, flags);
  double mean = 0.0;
  for (std::size_t i = 0; i < recon.values.size(); ++i)
    mean += smooth_l1(target.values[i], recon.values[i], 1.0);
  mean /= static_cast<double>(recon.values.size());
  CHECK(rep.l_masked == 0.0);
  CHECK(rep.l_total == doctest::Approx(0.1 * mean).epsilon(1e-12));
}

TEST_CASE("fusion concatenates channels and averages patches") {
  // single patch: plain concatenation
  TokenSequence meta = meta_seq(3, 1, 2);
  std::vector<float> h = {1, 2, 3, 4, 5, 6};
  FusedFeature f = fuse_and_pool(h, meta);
  CHECK(f.vector == std::vector<float>{1, 2, 3, 4, 5, 6});

  // constant token field: concatenation of the shared vector
  meta = meta_seq(2, 3, 2);
  h.assign(meta.count * 2, 0.0f);
  for (int k = 0; k < meta.count; ++k) {
    h[static_cast<std::size_t>(k) * 2] = 4.0f;
    h[static_cast<std::size_t>(k) * 2 + 1] = -1.0f;
  }
  f = fuse_and_pool(h, meta);
  CHECK(f.vector == std::vector<float>{4, -1, 4, -1});

  // hand-computed mean of two concatenations
  meta = meta_seq(2, 2, 1);
  h = {1, 3, 10, 30};  // ch0: patches 1,3; ch1: patches 10,30
  f = fuse_and_pool(h, meta);
  CHECK(f.vector == std::vector<float>{2, 20});
}

TEST_CASE("fusion is patch-order invariant but channel-order sensitive") {
  std::mt19937_64 rng(41);
  const TokenSequence meta = meta_seq(2, 3, 2);
  std::vector<float> h = testutil::gauss_vec(rng, meta.count * 2);

  // reorder patches within each channel: mean unchanged
  TokenSequence shuffled = meta;
  std::vector<float> h2 = h;
  auto swap_tokens = [&](int a, int b) {
    for (int e = 0; e < 2; ++e) std::swap(h2[a * 2 + e], h2[b * 2 + e]);
    std::swap(shuffled.patch_of[a], shuffled.patch_of[b]);
  };
  swap_tokens(0, 2);
  swap_tokens(3, 5);
  CHECK(testutil::max_abs_diff(fuse_and_pool(h, meta).vector,
                               fuse_and_pool(h2, shuffled).vector) <= 1e-6);

  // swapping channel assignment moves the blocks
  TokenSequence cswap = meta;
  for (int k = 0; k < meta.count; ++k) cswap.channel_of[k] = 1 - meta.channel_of[k];
  const std::vector<float> a = fuse_and_pool(h, meta).vector;
  const std::vector<float> b = fuse_and_pool(h, cswap).vector;
  CHECK(a[0] == b[2]);
  CHECK(a[1] == b[3]);
  CHECK(a[2] == b[0]);
  CHECK(a[3] == b[1]);
  CHECK(testutil::max_abs_diff(a, b) > 0.0);
}

TEST_CASE("classifier examples") {
  FusedFeature f;
  f.vector = {1.0f, -2.0f, 0.5f};
  ClassifierHead head;
  head.classes = 2;
  head.w.assign(2 * 3, 0.0f);
  head.b = {0.3f, -0.7f};
  std::vector<float> logits = classify(f, head);
  CHECK(logits[0] == 0.3f);
  CHECK(logits[1] == -0.7f);

  // row 1 aligned with f, row 0 orthogonal
  head.w = {0.0f, 0.0f, 0.0f, 1.0f, -2.0f, 0.5f};
  head.b = {0.0f, 0.0f};
  logits = classify(f, head);
  CHECK(logits[1] > logits[0]);

  std::mt19937_64 rng(55);
  head.w = testutil::gauss_vec(rng, 2 * 3);
  head.b = testutil::gauss_vec(rng, 2);
  logits = classify(f, head);
  for (int k = 0; k < 2; ++k) {
    double want = head.b[k];
    for (int j = 0; j < 3; ++j) want += static_cast<double>(head.w[k * 3 + j]) * f.vector[j];
    CHECK(logits[k] == doctest::Approx(want).epsilon(1e-6));
  }

  // argmax unaffected by a shared bias shift
  std::vector<float> shifted = logits;
  ClassifierHead head2 = head;
  for (float& b : head2.b) b += 5.0f;
  const std::vector<float> logits2 = classify(f, head2);
  const int arg1 = logits[0] >= logits[1] ? 0 : 1;
  const int arg2 = logits2[0] >= logits2[1] ? 0 : 1;
  CHECK(arg1 == arg2);
}

TEST_CASE("windowed inference geometry and aggregation") {
  ModelConfig cfg;
  cfg.timesteps = 16;  // 8 ms at 2 kHz stands in for the 8 s window
  cfg.channels = 2;
  cfg.patch_len = 4;
  cfg.patch_stride = 4;
  cfg.embed_dim = 4;
  cfg.layers = 1;
  cfg.heads = 1;
  cfg.mlp_ratio = 2;
  const EncoderWeights model = random_encoder_weights(cfg, 5);
  const ClassifierHead head = random_classifier_head(cfg, 3, 6);

  auto stream_of = [&](int frames) {
    signal::WaveformRecord s;
    s.frames = frames;
    s.channels = 2;
    s.fs = 2000.0;
    s.samples.assign(static_cast<std::size_t>(frames) * 2, 0.0);
    for (int t = 0; t < frames; ++t)
      for (int c = 0; c < 2; ++c) s.at(t, c) = std::sin(0.1 * t + c);
    return s;
  };

  // exactly one window when the stream equals the window length
  WindowedResult one = windowed_inference(stream_of(16), 8, 2, model, head);
  CHECK(one.per_window.size() == 1);
  CHECK(one.aggregate == one.per_window[0]);

  // 14 "seconds" -> windows at offsets 0, 2, 4, 6
  WindowedResult four = windowed_inference(stream_of(28), 8, 2, model, head);
  REQUIRE(four.per_window.size() == 4);
  CHECK(four.offsets_samples == std::vector<int>{0, 4, 8, 12});

  // shorter than a window -> empty result
  CHECK(windowed_inference(stream_of(15), 8, 2, model, head).per_window.empty());

  // constant stream: every window identical, aggregate equals any window
  signal::WaveformRecord flat = stream_of(28);
  for (double& v : flat.samples) v = 0.25;
  WindowedResult c = windowed_inference(flat, 8, 2, model, head);
  for (const auto& w : c.per_window)
    CHECK(testutil::max_abs_diff(w, c.aggregate) <= 1e-6);
}

TEST_CASE("regression head shape and parameter budget") {
  ModelConfig cfg;  // C=16, d_e=192
  const RegressionHead head = make_regression_head(cfg, 1000, 3);
  CHECK(head.in_channels == 3072);
  const double budget = 788000.0;
  CHECK(std::abs(static_cast<double>(head.parameter_count()) - budget) / budget <= 0.05);
}

TEST_CASE("regression ops") {
  ModelConfig cfg;
  cfg.channels = 2;
  cfg.embed_dim = 4;
  const TokenSequence meta = meta_seq(2, 4, 4);

  RegressionHead head = make_regression_head(cfg, 7, 11);
  // zero weights, zero bias -> zero trajectories
  for (auto* v : {&head.pw_in_w, &head.pw_in_b, &head.dw1_w, &head.dw1_b, &head.dw2_w,
                  &head.dw2_b, &head.pw_out_w, &head.pw_out_b})
    v->assign(v->size(), 0.0f);
  std::mt19937_64 rng(3);
  const std::vector<float> h = testutil::gauss_vec(rng, meta.count * 4);
  const std::vector<float> traj = regress(h, meta, head);
  CHECK(traj.size() == 7u * 5);
  for (float v : traj) CHECK(v == 0.0f);
}

TEST_CASE("linear upsampling endpoints and midpoints") {
  // exercised through a pass-through head: hidden=in via identity would be
  // heavy, so test the public path with a delta-kernel depthwise stack
  ModelConfig cfg;
  cfg.channels = 1;
  cfg.embed_dim = 2;
  const TokenSequence meta = meta_seq(1, 2, 2);
  RegressionHead head;
  head.in_channels = 2;
  head.hidden = 2;
  head.kernel = 3;
  head.dofs = 5;
  head.out_len = 3;
  head.pw_in_w = {1, 0, 0, 1};  // identity
  head.pw_in_b = {0, 0};
  head.dw1_w = {0, 1, 0, 0, 1, 0};  // delta kernels
  head.dw1_b = {0, 0};
  head.dw2_w = {0, 1, 0, 0, 1, 0};
  head.dw2_b = {0, 0};
  head.pw_out_w.assign(5 * 2, 0.0f);
  head.pw_out_w[0] = 1.0f;  // dof0 tracks hidden channel 0
  head.pw_out_b.assign(5, 0.0f);

  const std::vector<float> h = {0.0f, 9.0f, 1.0f, 9.0f};  // patch0 -> 0, patch1 -> 1
  const std::vector<float> traj = regress(h, meta, head);
  // upsample [0, 1] to length 3 -> [0, 0.5, 1]
  CHECK(traj[0 * 5 + 0] == doctest::Approx(0.0));
  CHECK(traj[1 * 5 + 0] == doctest::Approx(0.5));
  CHECK(traj[2 * 5 + 0] == doctest::Approx(1.0));
}

}  // TEST_SUITE
