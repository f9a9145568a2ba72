#include "hypobench/autodiff/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <bit>
#include <cstdint>
#include <vector>

#include "hypobench/common/omp.hpp"

namespace hypobench::kernels {

namespace {

// Register tile and cache blocking. The 8x16 tile keeps sixteen 512-bit
// accumulators live; on narrower vector units the compiler splits it.
constexpr std::size_t kMr = 8;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 128;
constexpr std::size_t kNc = 4096;

// Below this many multiply-adds the packing overhead dominates.
constexpr std::size_t kSmallGemm = 32 * 32 * 32;

// Elementwise loops shorter than this stay on one thread.
constexpr std::size_t kParallelGrain = 1 << 15;

inline double at(MatView v, std::size_t row, std::size_t col) {
    return v.trans ? v.data[col * v.ld + row] : v.data[row * v.ld + col];
}

void pack_a(MatView a, std::size_t row0, std::size_t rows, std::size_t col0, std::size_t cols, double* dst) {
    for (std::size_t strip = 0; strip < rows; strip += kMr) {
        const std::size_t mr = std::min(kMr, rows - strip);
        for (std::size_t p = 0; p < cols; ++p) {
            double* out = dst + p * kMr;
            std::size_t i = 0;
            for (; i < mr; ++i) out[i] = at(a, row0 + strip + i, col0 + p);
            for (; i < kMr; ++i) out[i] = 0.0;
        }
        dst += cols * kMr;
    }
}

void pack_b(MatView b, std::size_t row0, std::size_t rows, std::size_t col0, std::size_t cols, double* dst) {
    for (std::size_t strip = 0; strip < cols; strip += kNr) {
        const std::size_t nr = std::min(kNr, cols - strip);
        for (std::size_t p = 0; p < rows; ++p) {
            double* out = dst + p * kNr;
            if (!b.trans && nr == kNr) {
                std::memcpy(out, b.data + (row0 + p) * b.ld + col0 + strip, kNr * sizeof(double));
                continue;
            }
            std::size_t j = 0;
            for (; j < nr; ++j) out[j] = at(b, row0 + p, col0 + strip + j);
            for (; j < kNr; ++j) out[j] = 0.0;
        }
        dst += rows * kNr;
    }
}

inline void micro_kernel(std::size_t kc, const double* __restrict ap, const double* __restrict bp,
                         double* __restrict c, std::size_t ldc, std::size_t mr, std::size_t nr, bool accumulate) {
    double acc[kMr][kNr] = {};
    for (std::size_t p = 0; p < kc; ++p) {
        const double* __restrict a = ap + p * kMr;
        const double* __restrict b = bp + p * kNr;
#pragma GCC unroll 8
        for (std::size_t i = 0; i < kMr; ++i) {
            const double ai = a[i];
#pragma omp simd
            for (std::size_t j = 0; j < kNr; ++j) acc[i][j] += ai * b[j];
        }
    }
    for (std::size_t i = 0; i < mr; ++i) {
        double* row = c + i * ldc;
        if (accumulate) {
            for (std::size_t j = 0; j < nr; ++j) row[j] += acc[i][j];
        } else {
            for (std::size_t j = 0; j < nr; ++j) row[j] = acc[i][j];
        }
    }
}

// i-p-j loop order; unit stride on the innermost loop when B is not
// transposed.
void gemm_small(std::size_t m, std::size_t n, std::size_t k, MatView a, MatView b, double* c, std::size_t ldc,
                bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* row = c + i * ldc;
        if (!accumulate) std::fill(row, row + n, 0.0);
        if (!b.trans) {
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = at(a, i, p);
                const double* brow = b.data + p * b.ld;
#pragma omp simd
                for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                const double* bcol = b.data + j * b.ld;
                double sum = 0.0;
                for (std::size_t p = 0; p < k; ++p) sum += at(a, i, p) * bcol[p];
                row[j] += sum;
            }
        }
    }
}

void gemm_blocked(std::size_t m, std::size_t n, std::size_t k, MatView a, MatView b, double* c, std::size_t ldc,
                  bool accumulate, bool parallel) {
    std::vector<double> packed_b(kKc * ((std::min(kNc, n) + kNr - 1) / kNr) * kNr);
    for (std::size_t jc = 0; jc < n; jc += kNc) {
        const std::size_t nc = std::min(kNc, n - jc);
        for (std::size_t pc = 0; pc < k; pc += kKc) {
            const std::size_t kc = std::min(kKc, k - pc);
            const bool acc = accumulate || pc > 0;
            pack_b(b, pc, kc, jc, nc, packed_b.data());
            const auto blocks = static_cast<std::ptrdiff_t>((m + kMc - 1) / kMc);
#pragma omp parallel for schedule(static) if (parallel && blocks > 1)
            for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
                thread_local std::vector<double> packed_a;
                packed_a.resize(kMc * kKc);
                const std::size_t ic = static_cast<std::size_t>(blk) * kMc;
                const std::size_t mc = std::min(kMc, m - ic);
                pack_a(a, ic, mc, pc, kc, packed_a.data());
                for (std::size_t jr = 0; jr < nc; jr += kNr) {
                    const double* bp = packed_b.data() + (jr / kNr) * kc * kNr;
                    const std::size_t nr = std::min(kNr, nc - jr);
                    for (std::size_t ir = 0; ir < mc; ir += kMr) {
                        const double* ap = packed_a.data() + (ir / kMr) * kc * kMr;
                        micro_kernel(kc, ap, bp, c + (ic + ir) * ldc + jc + jr, ldc, std::min(kMr, mc - ir), nr,
                                     acc);
                    }
                }
            }
        }
    }
}

void gemm_dispatch(std::size_t m, std::size_t n, std::size_t k, MatView a, MatView b, double* c, std::size_t ldc,
                   bool accumulate, bool parallel) {
    if (m == 0 || n == 0) return;
    if (k == 0) {
        if (!accumulate)
            for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
        return;
    }
    if (m * n * k <= kSmallGemm) {
        gemm_small(m, n, k, a, b, c, ldc, accumulate);
    } else {
        gemm_blocked(m, n, k, a, b, c, ldc, accumulate, parallel);
    }
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, MatView a, MatView b, double* c, std::size_t ldc,
          bool accumulate) {
    gemm_dispatch(m, n, k, a, b, c, ldc, accumulate, true);
}

void batched_gemm(std::size_t batch, std::size_t m, std::size_t n, std::size_t k, MatView a, std::size_t stride_a,
                  MatView b, std::size_t stride_b, double* c, std::size_t stride_c, bool accumulate) {
    const auto count = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch * m * n * k > kParallelGrain)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto s = static_cast<std::size_t>(i);
        MatView ai{a.data + s * stride_a, a.ld, a.trans};
        MatView bi{b.data + s * stride_b, b.ld, b.trans};
        gemm_dispatch(m, n, k, ai, bi, c + s * stride_c, n, accumulate, false);
    }
}

namespace {

// exp(x) within about an ulp of libm, in a form the compiler vectorizes:
// reduction by ln 2 (split in two parts), a degree-13 Taylor polynomial on
// |r| <= ln(2)/2, and the power of two applied as two factors so that
// results in the subnormal range are still correct. Needs
// -fno-trapping-math to vectorize the clamp.
inline double fast_exp(double x) {
    constexpr double kShift = 6755399441055744.0;  // 1.5 * 2^52 rounds to an integer
    constexpr double kLog2e = 1.4426950408889634;
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    x = std::min(std::max(x, -746.0), 709.0);
    const double t = x * kLog2e + kShift;
    const double n = t - kShift;
    const double r = (x - n * kLn2Hi) - n * kLn2Lo;
    double p = 1.0 / 6227020800.0;
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    const std::int64_t k = std::bit_cast<std::int64_t>(t) - std::bit_cast<std::int64_t>(kShift);
    const std::int64_t k1 = k >> 1;
    const std::int64_t k2 = k - k1;
    return p * std::bit_cast<double>((k1 + 1023) << 52) * std::bit_cast<double>((k2 + 1023) << 52);
}

// In-place softmax of one row.
inline void normalize_row(double* y, std::size_t cols) {
    double peak = -std::numeric_limits<double>::infinity();
#pragma omp simd reduction(max : peak)
    for (std::size_t j = 0; j < cols; ++j) peak = std::max(peak, y[j]);
    double total = 0.0;
#pragma omp simd reduction(+ : total)
    for (std::size_t j = 0; j < cols; ++j) {
        y[j] = fast_exp(y[j] - peak);
        total += y[j];
    }
    const double inv = 1.0 / total;
#pragma omp simd
    for (std::size_t j = 0; j < cols; ++j) y[j] *= inv;
}

}  // namespace

void softmax_rows(std::size_t rows, std::size_t cols, const double* logits, std::span<const double> bias,
                  double* out) {
    const std::size_t bias_rows = bias.empty() ? 0 : bias.size() / cols;
    const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelGrain)
    for (std::ptrdiff_t ri = 0; ri < count; ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        const double* in = logits + r * cols;
        double* y = out + r * cols;
        if (bias_rows) {
            const double* brow = bias.data() + (r % bias_rows) * cols;
            for (std::size_t j = 0; j < cols; ++j) y[j] = in[j] + brow[j];
        } else {
            std::copy(in, in + cols, y);
        }
        normalize_row(y, cols);
    }
}

void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* grad_out,
                           double* grad_in) {
    const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelGrain)
    for (std::ptrdiff_t ri = 0; ri < count; ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        const double* yr = y + r * cols;
        const double* gr = grad_out + r * cols;
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
        double* gi = grad_in + r * cols;
        for (std::size_t j = 0; j < cols; ++j) gi[j] += yr[j] * (gr[j] - dot);
    }
}

namespace {

// cols[(b*steps + t), j*in + c] = x[b, t - j*dilation, c] or 0.
void im2col(std::size_t batch, std::size_t steps, std::size_t in, std::size_t taps, std::size_t dilation,
            const double* x, double* cols) {
    const std::size_t width = taps * in;
    const auto rows = static_cast<std::ptrdiff_t>(batch * steps);
#pragma omp parallel for schedule(static) if (batch * steps * width > kParallelGrain)
    for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        const std::size_t b = r / steps;
        const std::size_t t = r % steps;
        double* dst = cols + r * width;
        for (std::size_t j = 0; j < taps; ++j) {
            const std::size_t lag = j * dilation;
            if (lag > t) {
                std::fill(dst + j * in, dst + (j + 1) * in, 0.0);
            } else {
                const double* src = x + (b * steps + t - lag) * in;
                std::copy(src, src + in, dst + j * in);
            }
        }
    }
}

}  // namespace

void causal_conv1d(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out, std::size_t taps,
                   std::size_t dilation, const double* x, const double* w, double* y) {
    std::vector<double> cols(batch * steps * taps * in);
    im2col(batch, steps, in, taps, dilation, x, cols.data());
    gemm(batch * steps, out, taps * in, {cols.data(), taps * in}, {w, out}, y, out, false);
}

void causal_conv1d_backward(std::size_t batch, std::size_t steps, std::size_t in, std::size_t out,
                            std::size_t taps, std::size_t dilation, const double* x, const double* w,
                            const double* grad_y, double* grad_x, double* grad_w) {
    const std::size_t rows = batch * steps;
    const std::size_t width = taps * in;
    if (grad_w) {
        std::vector<double> cols(rows * width);
        im2col(batch, steps, in, taps, dilation, x, cols.data());
        gemm(width, out, rows, {cols.data(), width, true}, {grad_y, out}, grad_w, out, true);
    }
    if (grad_x) {
        std::vector<double> dcols(rows * width);
        gemm(rows, width, out, {grad_y, out}, {w, out, true}, dcols.data(), width, false);
        // col2im: each x row gathers from the rows that read it, so batches
        // can be split across threads without write conflicts.
        const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (rows * width > kParallelGrain)
        for (std::ptrdiff_t bi = 0; bi < nb; ++bi) {
            const auto b = static_cast<std::size_t>(bi);
            for (std::size_t t = 0; t < steps; ++t) {
                double* gx = grad_x + (b * steps + t) * in;
                for (std::size_t j = 0; j < taps; ++j) {
                    const std::size_t src_t = t + j * dilation;
                    if (src_t >= steps) break;
                    const double* src = dcols.data() + (b * steps + src_t) * width + j * in;
                    for (std::size_t c = 0; c < in; ++c) gx[c] += src[c];
                }
            }
        }
    }
}

void pairwise_sq_dist(std::size_t rows, std::size_t dim, const double* x, double* out) {
    const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(dynamic, 16) if (rows * rows * dim > kParallelGrain)
    for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* xi = x + i * dim;
        for (std::size_t j = 0; j < rows; ++j) {
            const double* xj = x + j * dim;
            double sum = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = xi[d] - xj[d];
                sum += diff * diff;
            }
            out[i * rows + j] = sum;
        }
    }
}

namespace {

// One head of one sample, copied out of the interleaved [n, heads*dh] layout
// into feature-major [dh, stride] blocks so the inner loops run over
// positions. Positions are zero-padded to a multiple of the vector width.
struct HeadBlock {
    std::size_t n = 0, dh = 0, stride = 0;
    std::vector<double> q, k, v, row;

    void load(std::size_t n_, std::size_t dh_, std::size_t width, std::size_t base, const double* qs,
              const double* ks, const double* vs) {
        n = n_;
        dh = dh_;
        stride = (n + 7) / 8 * 8;
        q.assign(dh * stride, 0.0);
        k.assign(dh * stride, 0.0);
        v.assign(dh * stride, 0.0);
        row.assign(stride, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t c = 0; c < dh; ++c) {
                q[c * stride + j] = qs[base + j * width + c];
                k[c * stride + j] = ks[base + j * width + c];
                v[c * stride + j] = vs[base + j * width + c];
            }
        }
    }

    // Attention weights of query i into `row`; padded slots stay zero.
    void weights(std::size_t i, const double* bias, double scale) {
        double* p = row.data();
        if (bias) {
            std::copy(bias + i * n, bias + (i + 1) * n, p);
        } else {
            std::fill(p, p + n, 0.0);
        }
        // Padding logits of -inf come out of the softmax as exact zeros and
        // keep every loop free of a scalar remainder.
        std::fill(p + n, p + stride, -std::numeric_limits<double>::infinity());
        // Eight logits at a time, accumulated in registers across the head
        // dimension.
        for (std::size_t j0 = 0; j0 < stride; j0 += 8) {
            double acc[8];
            for (std::size_t l = 0; l < 8; ++l) acc[l] = p[j0 + l];
            for (std::size_t c = 0; c < dh; ++c) {
                const double qc = q[c * stride + i] * scale;
                const double* kc = k.data() + c * stride + j0;
#pragma omp simd
                for (std::size_t l = 0; l < 8; ++l) acc[l] += qc * kc[l];
            }
            for (std::size_t l = 0; l < 8; ++l) p[j0 + l] = acc[l];
        }
        normalize_row(p, stride);
    }

    // out[c] = sum_j row[j] v[c][j]
    void mix(double* out) const {
        for (std::size_t c = 0; c < dh; ++c) {
            const double* vc = v.data() + c * stride;
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (std::size_t j = 0; j < stride; ++j) acc += row[j] * vc[j];
            out[c] = acc;
        }
    }
};

}  // namespace

void attention(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
               const double* k, const double* v, std::span<const double> bias, double scale, double* out,
               double* probs) {
    const std::size_t width = heads * dh;
    const double* bp = bias.empty() ? nullptr : bias.data();
    const auto count = static_cast<std::ptrdiff_t>(batch * heads);
#pragma omp parallel if (batch * heads * n * n > kParallelGrain)
    {
        HeadBlock blk;
#pragma omp for schedule(static)
        for (std::ptrdiff_t bhi = 0; bhi < count; ++bhi) {
            const auto bh = static_cast<std::size_t>(bhi);
            const std::size_t base = (bh / heads) * n * width + (bh % heads) * dh;
            blk.load(n, dh, width, base, q, k, v);
            for (std::size_t i = 0; i < n; ++i) {
                blk.weights(i, bp, scale);
                if (probs) std::copy(blk.row.begin(), blk.row.begin() + n, probs + (bh * n + i) * n);
                blk.mix(out + base + i * width);
            }
        }
    }
}

void attention_backward(std::size_t batch, std::size_t heads, std::size_t n, std::size_t dh, const double* q,
                        const double* k, const double* v, const double* probs, double scale, const double* grad_out,
                        double* grad_q, double* grad_k, double* grad_v, double* grad_bias) {
    const std::size_t width = heads * dh;
    // Per-sample bias gradients, summed over samples in order afterwards so
    // the result does not depend on the thread count.
    std::vector<double> bias_parts(grad_bias ? batch * n * n : 0, 0.0);
    const auto count = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel if (batch * heads * n * n > kParallelGrain)
    {
        HeadBlock blk;
        std::vector<double> ds, dk, dv;
#pragma omp for schedule(static)
        for (std::ptrdiff_t bi = 0; bi < count; ++bi) {
            const auto b = static_cast<std::size_t>(bi);
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t base = b * n * width + h * dh;
                const std::size_t bh = b * heads + h;
                blk.load(n, dh, width, base, q, k, v);
                const std::size_t stride = blk.stride;
                double* p = blk.row.data();
                ds.assign(stride, 0.0);
                dk.assign(dh * stride, 0.0);
                dv.assign(dh * stride, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    std::copy(probs + (bh * n + i) * n, probs + (bh * n + i + 1) * n, p);
                    const double* go = grad_out + base + i * width;
                    std::fill(ds.begin(), ds.end(), 0.0);
                    for (std::size_t c = 0; c < dh; ++c) {
                        const double g = go[c];
                        const double* vc = blk.v.data() + c * stride;
                        double* dvc = dv.data() + c * stride;
#pragma omp simd
                        for (std::size_t j = 0; j < stride; ++j) {
                            ds[j] += g * vc[j];
                            dvc[j] += p[j] * g;
                        }
                    }
                    double dot = 0.0;
#pragma omp simd reduction(+ : dot)
                    for (std::size_t j = 0; j < stride; ++j) dot += p[j] * ds[j];
#pragma omp simd
                    for (std::size_t j = 0; j < stride; ++j) ds[j] = p[j] * (ds[j] - dot);
                    double* gqi = grad_q + base + i * width;
                    for (std::size_t c = 0; c < dh; ++c) {
                        const double* kc = blk.k.data() + c * stride;
                        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                        for (std::size_t j = 0; j < stride; ++j) acc += ds[j] * kc[j];
                        gqi[c] += scale * acc;
                        const double qc = scale * blk.q[c * stride + i];
                        double* dkc = dk.data() + c * stride;
#pragma omp simd
                        for (std::size_t j = 0; j < stride; ++j) dkc[j] += qc * ds[j];
                    }
                    if (grad_bias) {
                        double* gb = bias_parts.data() + (b * n + i) * n;
                        for (std::size_t j = 0; j < n; ++j) gb[j] += ds[j];
                    }
                }
                for (std::size_t j = 0; j < n; ++j) {
                    for (std::size_t c = 0; c < dh; ++c) {
                        grad_k[base + j * width + c] += dk[c * stride + j];
                        grad_v[base + j * width + c] += dv[c * stride + j];
                    }
                }
            }
        }
    }
    if (grad_bias) {
        const auto slots = static_cast<std::ptrdiff_t>(n * n);
#pragma omp parallel for schedule(static) if (batch * n * n > kParallelGrain)
        for (std::ptrdiff_t si = 0; si < slots; ++si) {
            const auto slot = static_cast<std::size_t>(si);
            double sum = 0.0;
            for (std::size_t b = 0; b < batch; ++b) sum += bias_parts[b * n * n + slot];
            grad_bias[slot] += sum;
        }
    }
}

}  // namespace hypobench::kernels
