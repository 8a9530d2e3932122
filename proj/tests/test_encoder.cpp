#include <doctest.h>

#include <cmath>

#include "reference.hpp"
#include "test_util.hpp"
#include "tinymyo/encoder.hpp"
#include "tinymyo/kernels.hpp"

using namespace tinymyo;

namespace {

ModelConfig tiny_cfg(int d, int layers, int heads = 1) {
  ModelConfig cfg;
  cfg.timesteps = 8;
  cfg.channels = 1;
  cfg.patch_len = 4;
  cfg.patch_stride = 4;
  cfg.embed_dim = d;
  cfg.layers = layers;
  cfg.heads = heads;
  cfg.mlp_ratio = 2;
  return cfg;
}

TokenSequence random_seq(const ModelConfig& cfg, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TokenSequence seq;
  seq.count = n;
  seq.dim = cfg.embed_dim;
  seq.embeddings = testutil::gauss_vec(rng, static_cast<std::size_t>(n) * cfg.embed_dim);
  seq.mask_flags.assign(n, 0);
  seq.channel_of.resize(n);
  seq.patch_of.resize(n);
  const int np = std::max(1, n / cfg.channels);
  for (int k = 0; k < n; ++k) {
    seq.channel_of[k] = k / np;
    seq.patch_of[k] = k % np;
  }
  return seq;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("layer norm examples") {
  std::vector<float> gamma = {1.0f, 1.0f}, beta = {0.0f, 0.0f};
  const std::vector<float> constant = {3.0f, 3.0f};
  const std::vector<float> z = layer_norm(constant, 1, 2, gamma, beta);
  CHECK(std::abs(z[0]) <= 1e-3);  // eps keeps the zero-variance row finite
  CHECK(std::abs(z[1]) <= 1e-3);

  const std::vector<float> pm = layer_norm({1.0f, -1.0f}, 1, 2, gamma, beta);
  CHECK(pm[0] == doctest::Approx(0.999995).epsilon(1e-6));
  CHECK(pm[1] == doctest::Approx(-0.999995).epsilon(1e-6));

  gamma = {0.0f, 0.0f};
  beta = {4.0f, -1.0f};
  const std::vector<float> b = layer_norm({0.3f, 0.9f}, 1, 2, gamma, beta);
  CHECK(b[0] == 4.0f);
  CHECK(b[1] == -1.0f);
}

TEST_CASE("rotary embedding basics") {
  // position 0 leaves vectors untouched
  std::vector<float> q = {0.3f, -0.7f}, k = {1.0f, 0.5f};
  apply_rope(q, k, 1, 2, {0}, 10000.0);
  CHECK(q[0] == 0.3f);
  CHECK(q[1] == -0.7f);
  CHECK(k[0] == 1.0f);
  CHECK(k[1] == 0.5f);

  // base chosen so pair 1 of a 4-dim head turns a quarter at position 1:
  // theta = pos * base^(-2/4) = pi/2  =>  base = (2/pi)^2
  const double pi = 3.14159265358979323846;
  const double base = (2.0 / pi) * (2.0 / pi);
  std::vector<float> q2 = {0.0f, 0.0f, 1.0f, 0.0f}, k2(4, 0.0f);
  apply_rope(q2, k2, 1, 4, {1}, base);
  CHECK(q2[2] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(q2[3] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rope scores depend only on relative position") {
  std::mt19937_64 rng(5);
  const int dh = 8;
  std::vector<float> q = testutil::gauss_vec(rng, dh);
  std::vector<float> k = testutil::gauss_vec(rng, dh);

  auto score_at = [&](int m, int n) {
    std::vector<float> qm = q, kn = k;
    std::vector<float> dummy_q(dh, 0.0f), dummy_k(dh, 0.0f);
    apply_rope(qm, dummy_k, 1, dh, {m}, 10000.0);
    apply_rope(dummy_q, kn, 1, dh, {n}, 10000.0);
    double dot = 0.0;
    for (int e = 0; e < dh; ++e) dot += static_cast<double>(qm[e]) * kn[e];
    return dot;
  };
  CHECK(score_at(3, 9) == doctest::Approx(score_at(8, 14)).epsilon(1e-6));
  CHECK(score_at(0, 5) == doctest::Approx(score_at(5, 10)).epsilon(1e-6));
}

TEST_CASE("rope preserves pair norms") {
  std::mt19937_64 rng(12);
  const int n = 6, dh = 8;
  std::vector<float> q = testutil::gauss_vec(rng, n * dh);
  std::vector<float> k = testutil::gauss_vec(rng, n * dh);
  const std::vector<float> q0 = q, k0 = k;
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = 3 * i + 1;
  apply_rope(q, k, n, dh, pos, 10000.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dh / 2; ++j) {
      const double before = std::hypot(q0[i * dh + 2 * j], q0[i * dh + 2 * j + 1]);
      const double after = std::hypot(q[i * dh + 2 * j], q[i * dh + 2 * j + 1]);
      CHECK(std::abs(before - after) <= 1e-6);
    }
}

TEST_CASE("single token attention reduces to the value path") {
  const ModelConfig cfg = tiny_cfg(4, 1);
  std::mt19937_64 rng(3);
  EncoderWeights w = random_encoder_weights(cfg, 3);
  const TokenSequence seq = random_seq(cfg, 1, 8);
  const std::vector<float> x = seq.embeddings;
  const std::vector<float> y =
      mhsa(x, 1, cfg, w.blocks[0], AttentionMaskMode::bidirectional, {0});
  // with one token softmax is [[1]], so output = W_out * v + b_out
  std::vector<float> qkv(3 * 4);
  kernels::linear(x.data(), 1, 4, w.blocks[0].w_qkv.data(), w.blocks[0].b_qkv.data(), 12,
                  qkv.data());
  std::vector<float> v(qkv.begin() + 8, qkv.end());
  std::vector<float> want(4);
  kernels::linear(v.data(), 1, 4, w.blocks[0].w_out.data(), w.blocks[0].b_out.data(), 4,
                  want.data());
  CHECK(testutil::max_abs_diff(y, want) <= 1e-6);
  (void)rng;
}

TEST_CASE("constant scores average the values") {
  const ModelConfig cfg = tiny_cfg(4, 1);
  EncoderWeights w = random_encoder_weights(cfg, 7);
  // zero q/k rows make every score zero -> uniform attention
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 4; ++c) w.blocks[0].w_qkv[static_cast<std::size_t>(r) * 4 + c] = 0.0f;
  for (int r = 0; r < 8; ++r) w.blocks[0].b_qkv[r] = 0.0f;

  const int n = 5;
  const TokenSequence seq = random_seq(cfg, n, 21);
  const std::vector<float> y =
      mhsa(seq.embeddings, n, cfg, w.blocks[0], AttentionMaskMode::bidirectional,
           rope_positions(seq, cfg));

  std::vector<float> qkv(static_cast<std::size_t>(n) * 12);
  kernels::linear(seq.embeddings.data(), n, 4, w.blocks[0].w_qkv.data(),
                  w.blocks[0].b_qkv.data(), 12, qkv.data());
  std::vector<float> mean_v(4, 0.0f);
  for (int t = 0; t < n; ++t)
    for (int e = 0; e < 4; ++e) mean_v[e] += qkv[static_cast<std::size_t>(t) * 12 + 8 + e] / n;
  std::vector<float> want(4);
  kernels::linear(mean_v.data(), 1, 4, w.blocks[0].w_out.data(), w.blocks[0].b_out.data(), 4,
                  want.data());
  for (int t = 0; t < n; ++t)
    for (int e = 0; e < 4; ++e)
      CHECK(y[static_cast<std::size_t>(t) * 4 + e] == doctest::Approx(want[e]).epsilon(1e-5));
}

TEST_CASE("attention matches the dense reference") {
  const ModelConfig cfg = tiny_cfg(8, 1, 2);
  EncoderWeights w = random_encoder_weights(cfg, 13);
  const int n = 4;
  const TokenSequence seq = random_seq(cfg, n, 14);
  const std::vector<int> pos = rope_positions(seq, cfg);
  const std::vector<float> ours =
      mhsa(seq.embeddings, n, cfg, w.blocks[0], AttentionMaskMode::bidirectional, pos);
  const std::vector<float> theirs = ref::mhsa(seq.embeddings, n, cfg, w.blocks[0], false, pos);
  CHECK(testutil::max_abs_diff(ours, theirs) <= 1e-5);
}

TEST_CASE("zero network maps to zero output") {
  const ModelConfig cfg = tiny_cfg(4, 2);
  EncoderWeights w = random_encoder_weights(cfg, 1);
  for (BlockWeights& b : w.blocks) {
    for (auto* vec : {&b.w_qkv, &b.b_qkv, &b.w_out, &b.b_out, &b.w_fc1, &b.b_fc1, &b.w_fc2,
                      &b.b_fc2, &b.ln1_gamma, &b.ln1_beta, &b.ln2_gamma, &b.ln2_beta})
      vec->assign(vec->size(), 0.0f);
  }
  w.final_ln_gamma.assign(4, 0.0f);
  w.final_ln_beta.assign(4, 0.0f);
  TokenSequence seq = random_seq(cfg, 2, 5);
  seq.embeddings.assign(seq.embeddings.size(), 0.0f);
  const std::vector<float> y = encoder_forward(seq, w, AttentionMaskMode::bidirectional);
  for (float v : y) CHECK(v == 0.0f);
}

TEST_CASE("residual-only path when projections are zero") {
  const ModelConfig cfg = tiny_cfg(4, 1);
  EncoderWeights w = random_encoder_weights(cfg, 2);
  w.blocks[0].w_out.assign(16, 0.0f);
  w.blocks[0].b_out.assign(4, 0.0f);
  w.blocks[0].w_fc2.assign(w.blocks[0].w_fc2.size(), 0.0f);
  w.blocks[0].b_fc2.assign(4, 0.0f);
  const TokenSequence seq = random_seq(cfg, 3, 9);
  const std::vector<float> y = encoder_forward(seq, w, AttentionMaskMode::bidirectional);
  const std::vector<float> want =
      layer_norm(seq.embeddings, 3, 4, w.final_ln_gamma, w.final_ln_beta);
  CHECK(testutil::max_abs_diff(y, want) <= 1e-6);
}

TEST_CASE("forward pass agrees with the serial reference on tiny configs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 4 + 2 * static_cast<int>(rng() % 3);       // 4, 6, 8
    const int layers = 1 + static_cast<int>(rng() % 2);      // 1..2
    const int heads = (d % 4 == 0 && (rng() & 1)) ? 2 : 1;
    ModelConfig cfg = tiny_cfg(d, layers, heads);
    const EncoderWeights w = random_encoder_weights(cfg, rng());
    const int n = 2 + static_cast<int>(rng() % 10);
    const TokenSequence seq = random_seq(cfg, n, rng());
    for (bool causal : {false, true}) {
      const std::vector<float> ours = encoder_forward(
          seq, w, causal ? AttentionMaskMode::causal : AttentionMaskMode::bidirectional);
      const std::vector<float> theirs = ref::encoder_forward(seq, w, causal);
      CHECK(testutil::max_abs_diff(ours, theirs) <= 1e-5);
    }
  }
}

TEST_CASE("causal mask blocks information flow from the future") {
  const ModelConfig cfg = tiny_cfg(4, 2);
  const EncoderWeights w = random_encoder_weights(cfg, 77);
  const int n = 6;
  TokenSequence seq = random_seq(cfg, n, 78);
  const std::vector<float> base = encoder_forward(seq, w, AttentionMaskMode::causal);
  const int t = 4;
  for (int e = 0; e < 4; ++e) seq.token(t)[e] += 3.5f;
  const std::vector<float> bumped = encoder_forward(seq, w, AttentionMaskMode::causal);
  for (int i = 0; i < t; ++i)
    for (int e = 0; e < 4; ++e)
      CHECK(base[static_cast<std::size_t>(i) * 4 + e] ==
            bumped[static_cast<std::size_t>(i) * 4 + e]);
  // and the perturbed position itself must change
  double diff = 0.0;
  for (int e = 0; e < 4; ++e)
    diff += std::abs(base[static_cast<std::size_t>(t) * 4 + e] -
                     bumped[static_cast<std::size_t>(t) * 4 + e]);
  CHECK(diff > 0.0);
}

TEST_CASE("non-finite intermediate names the block") {
  const ModelConfig cfg = tiny_cfg(4, 2);
  EncoderWeights w = random_encoder_weights(cfg, 31);
  w.blocks[1].b_fc2[0] = std::numeric_limits<float>::infinity();
  const TokenSequence seq = random_seq(cfg, 3, 32);
  CHECK_THROWS_WITH_AS(encoder_forward(seq, w, AttentionMaskMode::bidirectional),
                       doctest::Contains("block 1"), NumericError);
}

TEST_CASE("parameter accounting") {
  ModelConfig cfg;  // full-size defaults
  const ParamReport r = count_parameters(cfg);
  CHECK(r.per_block == 444864);
  CHECK(r.blocks_total == 8 * 444864);
  CHECK(r.blocks_total == 3558912);
  CHECK(r.tokenizer == 4032);
  CHECK(r.mask_token == 192);
  CHECK(r.final_ln == 384);
  CHECK(r.decoder == 3860);
  CHECK(r.total >= 3550000);
  CHECK(r.total <= 3600000);

  // the materialized weights agree with the closed form
  ModelConfig small = cfg;
  small.layers = 1;  // keep the test quick
  const EncoderWeights w = random_encoder_weights(small, 5);
  const ParamReport rw = count_parameters(w);
  CHECK(rw.per_block == 444864);
  CHECK(rw.tokenizer == 4032);
  CHECK(rw.decoder == 3860);
}

}  // TEST_SUITE
