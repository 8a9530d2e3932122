#pragma once

#include <cstddef>
#include <cstdint>

namespace tinymyo::kernels {

// Y[rows x out] = X[rows x in] * W^T + b, W stored [out x in] row-major.
// Parallel over output elements; each dot product accumulates sequentially
// in double so results do not depend on thread count.
void linear(const float* x, int rows, int in_dim, const float* w,
            const float* b, int out_dim, float* y);

// Row-wise layer norm with population variance.
void layer_norm(const float* x, int rows, int dim, const float* gamma,
                const float* beta, float eps, float* y);

// Exact erf-based GELU.
void gelu_exact(const float* x, std::size_t n, float* y);

// tanh approximation, kept for comparison against the integer kernel.
void gelu_tanh(const float* x, std::size_t n, float* y);

// In-place row softmax with max subtraction.
void softmax_row(float* row, int n);

void add_inplace(float* a, const float* b, std::size_t n);

// Rotates (even, odd) pairs of each row by theta = position * base^(-2j/d).
void rope_rows(float* rows, int n, int dim, const int* positions, double base);

// C[rows x out] = saturate(requant(sum_k (a - za) * (b - zb))), int32
// accumulation, B stored [out x in]. bias (int32, may be null) is added to
// the accumulator before requantization.
void int8_linear_requant(const std::int8_t* a, int rows, int in_dim, int za,
                         const std::int8_t* b_mat, int zb, int out_dim,
                         const std::int32_t* bias, std::int32_t multiplier,
                         int shift, int zout, std::int8_t* out);

}  // namespace tinymyo::kernels
