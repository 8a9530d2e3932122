// Engine kernels vs the serial reference implementations.
//
//   ./build/bench/bench_kernels --benchmark_min_time=0.1

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "reference.hpp"
#include "tinymyo/encoder.hpp"
#include "tinymyo/kernels.hpp"

using namespace tinymyo;

namespace {

std::vector<float> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::vector<float> v(n);
  for (float& x : v)
    x = static_cast<float>((static_cast<double>(rng() >> 11) * 0x1p-53) * 2.0 - 1.0);
  return v;
}

ModelConfig bench_cfg() {
  ModelConfig cfg;
  cfg.timesteps = 200;
  cfg.channels = 4;
  cfg.patch_len = 10;
  cfg.patch_stride = 10;
  cfg.embed_dim = 96;
  cfg.layers = 2;
  cfg.heads = 3;
  return cfg;  // 80 tokens
}

TokenSequence bench_tokens(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TokenSequence seq;
  seq.count = cfg.num_tokens();
  seq.dim = cfg.embed_dim;
  seq.embeddings = random_vec(rng, static_cast<std::size_t>(seq.count) * seq.dim);
  seq.mask_flags.assign(seq.count, 0);
  seq.channel_of.resize(seq.count);
  seq.patch_of.resize(seq.count);
  for (int k = 0; k < seq.count; ++k) {
    seq.channel_of[k] = k / cfg.num_patches();
    seq.patch_of[k] = k % cfg.num_patches();
  }
  return seq;
}

void bm_linear_omp(benchmark::State& state) {
  const int rows = 256, in = 192, out = 192;
  std::mt19937_64 rng(1);
  const std::vector<float> x = random_vec(rng, static_cast<std::size_t>(rows) * in);
  const std::vector<float> w = random_vec(rng, static_cast<std::size_t>(out) * in);
  const std::vector<float> b = random_vec(rng, out);
  std::vector<float> y(static_cast<std::size_t>(rows) * out);
  for (auto _ : state) {
    kernels::linear(x.data(), rows, in, w.data(), b.data(), out, y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_linear_serial(benchmark::State& state) {
  const int rows = 256, in = 192, out = 192;
  std::mt19937_64 rng(1);
  const std::vector<float> x = random_vec(rng, static_cast<std::size_t>(rows) * in);
  const std::vector<float> w = random_vec(rng, static_cast<std::size_t>(out) * in);
  const std::vector<float> b = random_vec(rng, out);
  for (auto _ : state) {
    std::vector<float> y = ref::linear(x, rows, in, w, b, out);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_layernorm_omp(benchmark::State& state) {
  const int rows = 800, dim = 192;
  std::mt19937_64 rng(2);
  const std::vector<float> x = random_vec(rng, static_cast<std::size_t>(rows) * dim);
  const std::vector<float> gamma(dim, 1.0f), beta(dim, 0.0f);
  std::vector<float> y(x.size());
  for (auto _ : state) {
    kernels::layer_norm(x.data(), rows, dim, gamma.data(), beta.data(), 1e-5f, y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_layernorm_serial(benchmark::State& state) {
  const int rows = 800, dim = 192;
  std::mt19937_64 rng(2);
  const std::vector<float> x = random_vec(rng, static_cast<std::size_t>(rows) * dim);
  const std::vector<float> gamma(dim, 1.0f), beta(dim, 0.0f);
  for (auto _ : state) {
    std::vector<float> y = ref::layer_norm(x, rows, dim, gamma, beta, 1e-5f);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_encoder_omp(benchmark::State& state) {
  const ModelConfig cfg = bench_cfg();
  const EncoderWeights w = random_encoder_weights(cfg, 3);
  const TokenSequence seq = bench_tokens(cfg, 4);
  for (auto _ : state) {
    std::vector<float> y = encoder_forward(seq, w, AttentionMaskMode::bidirectional);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_encoder_serial(benchmark::State& state) {
  const ModelConfig cfg = bench_cfg();
  const EncoderWeights w = random_encoder_weights(cfg, 3);
  const TokenSequence seq = bench_tokens(cfg, 4);
  for (auto _ : state) {
    std::vector<float> y = ref::encoder_forward(seq, w, false);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_int8_linear_omp(benchmark::State& state) {
  const int rows = 256, in = 192, out = 192;
  std::mt19937_64 rng(5);
  std::vector<std::int8_t> a(static_cast<std::size_t>(rows) * in),
      w(static_cast<std::size_t>(out) * in);
  for (auto& v : a) v = static_cast<std::int8_t>(rng() % 256 - 128);
  for (auto& v : w) v = static_cast<std::int8_t>(rng() % 256 - 128);
  std::vector<std::int8_t> y(static_cast<std::size_t>(rows) * out);
  for (auto _ : state) {
    kernels::int8_linear_requant(a.data(), rows, in, 0, w.data(), 0, out, nullptr, 20000, 19, 0,
                                 y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_int8_linear_serial(benchmark::State& state) {
  const int rows = 256, in = 192, out = 192;
  std::mt19937_64 rng(5);
  std::vector<std::int8_t> a(static_cast<std::size_t>(rows) * in),
      w(static_cast<std::size_t>(out) * in);
  for (auto& v : a) v = static_cast<std::int8_t>(rng() % 256 - 128);
  for (auto& v : w) v = static_cast<std::int8_t>(rng() % 256 - 128);
  std::vector<std::int8_t> y(static_cast<std::size_t>(rows) * out);
  for (auto _ : state) {
    ref::int8_linear_requant(a.data(), rows, in, 0, w.data(), 0, out, nullptr, 20000, 19, 0,
                             y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

BENCHMARK(bm_linear_omp);
BENCHMARK(bm_linear_serial);
BENCHMARK(bm_layernorm_omp);
BENCHMARK(bm_layernorm_serial);
BENCHMARK(bm_encoder_omp);
BENCHMARK(bm_encoder_serial);
BENCHMARK(bm_int8_linear_omp);
BENCHMARK(bm_int8_linear_serial);

}  // namespace

BENCHMARK_MAIN();
