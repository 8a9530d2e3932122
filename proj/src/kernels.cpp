#include "tinymyo/kernels.hpp"

#include <cmath>

#include "tinymyo/common.hpp"

namespace tinymyo::kernels {

void linear(const float* x, int rows, int in_dim, const float* w,
            const float* b, int out_dim, float* y) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + static_cast<std::size_t>(r) * in_dim;
    float* yr = y + static_cast<std::size_t>(r) * out_dim;
    for (int o = 0; o < out_dim; ++o) {
      const float* wr = w + static_cast<std::size_t>(o) * in_dim;
      double acc = b ? b[o] : 0.0;
      for (int k = 0; k < in_dim; ++k) acc += static_cast<double>(xr[k]) * wr[k];
      yr[o] = static_cast<float>(acc);
    }
  }
}

void layer_norm(const float* x, int rows, int dim, const float* gamma,
                const float* beta, float eps, float* y) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + static_cast<std::size_t>(r) * dim;
    float* yr = y + static_cast<std::size_t>(r) * dim;
    double mean = 0.0;
    for (int i = 0; i < dim; ++i) mean += xr[i];
    mean /= dim;
    double var = 0.0;
    for (int i = 0; i < dim; ++i) {
      double d = xr[i] - mean;
      var += d * d;
    }
    var /= dim;
    double inv = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < dim; ++i)
      yr[i] = static_cast<float>((xr[i] - mean) * inv * gamma[i] + beta[i]);
  }
}

void gelu_exact(const float* x, std::size_t n, float* y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double v = x[i];
    y[i] = static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
  }
}

void gelu_tanh(const float* x, std::size_t n, float* y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double v = x[i];
    double inner = std::sqrt(2.0 / 3.14159265358979323846) * (v + 0.044715 * v * v * v);
    y[i] = static_cast<float>(0.5 * v * (1.0 + std::tanh(inner)));
  }
}

void softmax_row(float* row, int n) {
  float mx = row[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, row[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = std::exp(static_cast<double>(row[i]) - mx);
    row[i] = static_cast<float>(e);
    sum += e;
  }
  double inv = 1.0 / sum;
  for (int i = 0; i < n; ++i) row[i] = static_cast<float>(row[i] * inv);
}

void add_inplace(float* a, const float* b, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) a[i] += b[i];
}

void rope_rows(float* rows, int n, int dim, const int* positions, double base) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    float* row = rows + static_cast<std::size_t>(r) * dim;
    const double pos = positions[r];
    for (int j = 0; j * 2 < dim; ++j) {
      double theta = pos * std::pow(base, -2.0 * j / dim);
      double c = std::cos(theta), s = std::sin(theta);
      double e = row[2 * j], o = row[2 * j + 1];
      row[2 * j] = static_cast<float>(e * c - o * s);
      row[2 * j + 1] = static_cast<float>(e * s + o * c);
    }
  }
}

void int8_linear_requant(const std::int8_t* a, int rows, int in_dim, int za,
                         const std::int8_t* b_mat, int zb, int out_dim,
                         const std::int32_t* bias, std::int32_t multiplier,
                         int shift, int zout, std::int8_t* out) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const std::int8_t* ar = a + static_cast<std::size_t>(r) * in_dim;
    std::int8_t* orow = out + static_cast<std::size_t>(r) * out_dim;
    for (int o = 0; o < out_dim; ++o) {
      const std::int8_t* br = b_mat + static_cast<std::size_t>(o) * in_dim;
      std::int32_t acc = 0;
      for (int k = 0; k < in_dim; ++k)
        acc += (static_cast<std::int32_t>(ar[k]) - za) * (static_cast<std::int32_t>(br[k]) - zb);
      if (bias) acc += bias[o];
      std::int64_t v = round_shift(static_cast<std::int64_t>(acc) * multiplier, shift);
      orow[o] = saturate_i8(v + zout);
    }
  }
}

}  // namespace tinymyo::kernels
