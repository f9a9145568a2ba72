#pragma once

// Dense compute kernels behind the autodiff primitives.
//
// Every kernel exists twice: the OpenMP-parallel, cache-blocked version in
// `hypobench::kernels` used by the engine, and a plain serial loop nest in
// `hypobench::kernels::reference` that the tests and the kernel benchmark
// compare against. Parallel kernels partition output elements between
// threads and never split a reduction, so results do not depend on the
// thread count.

#include <cstddef>
#include <span>

namespace hypobench::kernels {

/// Row-major matrix operand: `trans` means the stored matrix is the
/// transpose of the logical one.
struct MatView {
    const double* data;
    std::size_t ld;
    bool trans = false;
};

/// C[m,n] (+)= op(A)[m,k] * op(B)[k,n]. C is row-major with leading dim ldc.
void gemm(std::size_t m, std::size_t n, std::size_t k, MatView a, MatView b, double* c, std::size_t ldc,
          bool accumulate);

/// `batch` independent gemms; operand i starts at base + i * stride.
void batched_gemm(std::size_t batch, std::size_t m, std::size_t n, std::size_t k, MatView a, std::size_t stride_a,
                  MatView b, std::size_t stride_b, double* c, std::size_t stride_c, bool accumulate);

/// Row softmax of (logits + bias). `bias` may be empty; otherwise it is
/// indexed as bias[(row % bias_rows) * cols + col].
void softmax_rows(std::size_t rows, std::size_t cols, const double* logits, std::span<const double> bias,
                  double* out);

/// dlogits[r,c] = y[r,c] * (g[r,c] - sum_c' g[r,c'] y[r,c']).
void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* grad_out,
                           double* grad_in);

/// Causal dilated conv over time. x is [batch, steps, in], w is
/// [taps, in, out], out is [batch, steps, out]. Tap j reads x at t - j*dilation
/// (zero when negative).
void causal_conv1d(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out, std::size_t taps,
                   std::size_t dilation, const double* x, const double* w, double* y);

/// Gradients of causal_conv1d. Either output pointer may be null.
void causal_conv1d_backward(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out,
                            std::size_t taps, std::size_t dilation, const double* x, const double* w,
                            const double* grad_y, double* grad_x, double* grad_w);

/// Squared Euclidean distance between every pair of rows of x [rows, dim].
void pairwise_sq_dist(std::size_t rows, std::size_t dim, const double* x, double* out);

/// Multi-head scaled dot-product attention. q, k, v and out are
/// [batch, n, heads * dh] with head h in columns h*dh..(h+1)*dh. bias is
/// empty or [n, n] and is added to every head's logits. When probs is
/// non-null it receives the attention weights [batch, heads, n, n].
void attention(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
               const double* k, const double* v, std::span<const double> bias, double scale, double* out,
               double* probs);

/// Gradients of attention given the forward weights, accumulated into
/// grad_q, grad_k and grad_v. When grad_bias is non-null the bias gradient
/// [n, n] is accumulated into it.
void attention_backward(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
                        const double* k, const double* v, const double* probs, double scale, const double* grad_out,
                        double* grad_q, double* grad_k, double* grad_v, double* grad_bias);

namespace reference {

void gemm(std::size_t m, std::size_t n, std::size_t k, MatView a, MatView b, double* c, std::size_t ldc,
          bool accumulate);

void batched_gemm(std::size_t batch, std::size_t m, std::size_t n, std::size_t k, MatView a, std::size_t stride_a,
                  MatView b, std::size_t stride_b, double* c, std::size_t stride_c, bool accumulate);

void softmax_rows(std::size_t rows, std::size_t cols, const double* logits, std::span<const double> bias,
                  double* out);

void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* grad_out,
                           double* grad_in);

void causal_conv1d(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out, std::size_t taps,
                   std::size_t dilation, const double* x, const double* w, double* y);

void causal_conv1d_backward(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out,
                            std::size_t taps, std::size_t dilation, const double* x, const double* w,
                            const double* grad_y, double* grad_x, double* grad_w);

void pairwise_sq_dist(std::size_t rows, std::size_t dim, const double* x, double* out);

void attention(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
               const double* k, const double* v, std::span<const double> bias, double scale, double* out,
               double* probs);

void attention_backward(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
                        const double* k, const double* v, const double* probs, double scale, const double* grad_out,
                        double* grad_q, double* grad_k, double* grad_v, double* grad_bias);

}  // namespace reference

}  // namespace hypobench::kernels
