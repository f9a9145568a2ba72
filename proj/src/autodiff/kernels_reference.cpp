// Serial loop nests, written for clarity. Used as test oracles for the
// parallel kernels and as the baseline in the kernel benchmark.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hypobench/autodiff/kernels.hpp"

namespace hypobench::kernels::reference {

namespace {

double at(MatView v, std::size_t row, std::size_t col) {
    return v.trans ? v.data[col * v.ld + row] : v.data[row * v.ld + col];
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, MatView a, MatView b, double* c, std::size_t ldc,
          bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t p = 0; p < k; ++p) sum += at(a, i, p) * at(b, p, j);
            c[i * ldc + j] = accumulate ? c[i * ldc + j] + sum : sum;
        }
    }
}

void batched_gemm(std::size_t batch, std::size_t m, std::size_t n, std::size_t k, MatView a, std::size_t stride_a,
                  MatView b, std::size_t stride_b, double* c, std::size_t stride_c, bool accumulate) {
    for (std::size_t i = 0; i < batch; ++i) {
        gemm(m, n, k, {a.data + i * stride_a, a.ld, a.trans}, {b.data + i * stride_b, b.ld, b.trans},
             c + i * stride_c, n, accumulate);
    }
}

void softmax_rows(std::size_t rows, std::size_t cols, const double* logits, std::span<const double> bias,
                  double* out) {
    const std::size_t bias_rows = bias.empty() ? 0 : bias.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = logits[r * cols + j] + (bias_rows ? bias[(r % bias_rows) * cols + j] : 0.0);
            out[r * cols + j] = v;
            peak = std::max(peak, v);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            out[r * cols + j] = std::exp(out[r * cols + j] - peak);
            total += out[r * cols + j];
        }
        for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] /= total;
    }
}

void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* grad_out,
                           double* grad_in) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols; ++i) {
            // Full Jacobian row: dy_j/dz_i = y_j (delta_ij - y_i).
            double sum = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                const double jac = y[r * cols + j] * ((i == j ? 1.0 : 0.0) - y[r * cols + i]);
                sum += grad_out[r * cols + j] * jac;
            }
            grad_in[r * cols + i] += sum;
        }
    }
}

void causal_conv1d(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out, std::size_t taps,
                   std::size_t dilation, const double* x, const double* w, double* y) {
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t o = 0; o < out; ++o) {
                double sum = 0.0;
                for (std::size_t j = 0; j < taps; ++j) {
                    if (j * dilation > t) continue;
                    const std::size_t src = t - j * dilation;
                    for (std::size_t c = 0; c < in; ++c) {
                        sum += x[(b * steps + src) * in + c] * w[(j * in + c) * out + o];
                    }
                }
                y[(b * steps + t) * out + o] = sum;
            }
        }
    }
}

void causal_conv1d_backward(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out,
                            std::size_t taps, std::size_t dilation, const double* x, const double* w,
                            const double* grad_y, double* grad_x, double* grad_w) {
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t j = 0; j < taps; ++j) {
                if (j * dilation > t) continue;
                const std::size_t src = t - j * dilation;
                for (std::size_t c = 0; c < in; ++c) {
                    for (std::size_t o = 0; o < out; ++o) {
                        const double g = grad_y[(b * steps + t) * out + o];
                        if (grad_w) grad_w[(j * in + c) * out + o] += g * x[(b * steps + src) * in + c];
                        if (grad_x) grad_x[(b * steps + src) * in + c] += g * w[(j * in + c) * out + o];
                    }
                }
            }
        }
    }
}

void pairwise_sq_dist(std::size_t rows, std::size_t dim, const double* x, double* out) {
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < rows; ++j) {
            double sum = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = x[i * dim + d] - x[j * dim + d];
                sum += diff * diff;
            }
            out[i * rows + j] = sum;
        }
    }
}

namespace {

// Attention weights of one head, [n, n].
void head_weights(std::size_t n, std::size_t dh, std::size_t width, const double* q, const double* k,
                  std::size_t base, std::span<const double> bias, double scale, double* p) {
    std::vector<double> logits(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < dh; ++c) s += q[base + i * width + c] * k[base + j * width + c];
            logits[i * n + j] = s * scale;
        }
    }
    softmax_rows(n, n, logits.data(), bias, p);
}

}  // namespace

void attention(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
               const double* k, const double* v, std::span<const double> bias, double scale, double* out,
               double* probs) {
    const std::size_t width = heads * dh;
    std::vector<double> p(n * n);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t base = b * n * width + h * dh;
            head_weights(n, dh, width, q, k, base, bias, scale, p.data());
            if (probs) std::copy(p.begin(), p.end(), probs + (b * heads + h) * n * n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < dh; ++c) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += p[i * n + j] * v[base + j * width + c];
                    out[base + i * width + c] = s;
                }
            }
        }
    }
}

void attention_backward(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
                        const double* k, const double* v, const double* probs, double scale, const double* grad_out,
                        double* grad_q, double* grad_k, double* grad_v, double* grad_bias) {
    const std::size_t width = heads * dh;
    std::vector<double> dp(n * n), ds(n * n);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t base = b * n * width + h * dh;
            auto idx = [&](std::size_t row, std::size_t c) { return base + row * width + c; };
            const double* p = probs + (b * heads + h) * n * n;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) s += grad_out[idx(i, c)] * v[idx(j, c)];
                    dp[i * n + j] = s;
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t c = 0; c < dh; ++c) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i) s += p[i * n + j] * grad_out[idx(i, c)];
                    grad_v[idx(j, c)] += s;
                }
            }
            std::fill(ds.begin(), ds.end(), 0.0);
            softmax_rows_backward(n, n, p, dp.data(), ds.data());
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < dh; ++c) {
                    double sq = 0.0, sk = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        sq += ds[i * n + j] * k[idx(j, c)];
                        sk += ds[j * n + i] * q[idx(j, c)];
                    }
                    grad_q[idx(i, c)] += scale * sq;
                    grad_k[idx(i, c)] += scale * sk;
                }
            }
            if (grad_bias) {
                for (std::size_t s = 0; s < n * n; ++s) grad_bias[s] += ds[s];
            }
        }
    }
}

}  // namespace hypobench::kernels::reference
