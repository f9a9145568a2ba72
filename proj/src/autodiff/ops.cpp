#include "hypobench/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hypobench/autodiff/kernels.hpp"
#include "hypobench/common/errors.hpp"

namespace hypobench::ad {

namespace {

constexpr std::size_t kGrain = 1 << 14;

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
    throw ShapeError(std::string(op) + ": " + detail);
}

void check_finite(const char* op, std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite value in output");
    }
}

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
    if (!Tape::current().recording()) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

bool wants_grad(const std::vector<Tensor>& inputs) {
    if (!Tape::current().recording()) return false;
    for (const Tensor& t : inputs)
        if (t.requires_grad()) return true;
    return false;
}

/// Builds the output tensor and, when tracking, records `backward(out)` on
/// the tape. The closure runs only if the output received a gradient.
template <class Backward>
Tensor make_result(const char* op, Shape shape, std::vector<double> values, bool track, Backward backward) {
    check_finite(op, values);
    Tensor out = Tensor::from(std::move(shape), std::move(values), track);
    if (track) {
        // The tape keeps the output alive until the backward pass even if
        // the caller drops it.
        Tape::current().record(op, [out_node = out.node(), backward = std::move(backward)]() mutable {
            if (out_node->grad.empty()) return;
            backward(static_cast<const Node&>(*out_node));
        });
    }
    return out;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n > kGrain)
    for (std::ptrdiff_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
}

// ---------------------------------------------------------------------------
// Broadcasting

Shape strip_leading_ones(const Shape& s) {
    std::size_t i = 0;
    while (i < s.size() && s[i] == 1) ++i;
    return Shape(s.begin() + static_cast<std::ptrdiff_t>(i), s.end());
}

bool is_trailing_block(const Shape& small, const Shape& big) {
    const Shape core = strip_leading_ones(small);
    if (core.size() > big.size()) return false;
    return std::equal(core.rbegin(), core.rend(), big.rbegin());
}

struct Broadcast {
    enum class Kind { kSame, kBRepeats, kGeneral };
    Kind kind = Kind::kGeneral;
    Shape out;
    std::vector<std::size_t> a_stride;  // per output axis, 0 where broadcast
    std::vector<std::size_t> b_stride;
};

Broadcast plan_broadcast(const char* op, const Shape& a, const Shape& b) {
    Broadcast plan;
    const std::size_t rank = std::max(a.size(), b.size());
    plan.out.assign(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) {
            shape_error(op, "cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        }
        plan.out[i] = std::max(da, db);
    }
    const std::size_t na = shape_numel(a), nb = shape_numel(b), no = shape_numel(plan.out);
    if (na == no && nb == no) {
        plan.kind = Broadcast::Kind::kSame;
    } else if (na == no && nb > 0 && is_trailing_block(b, plan.out)) {
        plan.kind = Broadcast::Kind::kBRepeats;
    }
    auto strides_for = [&](const Shape& s) {
        std::vector<std::size_t> st(rank, 0);
        std::size_t acc = 1;
        for (std::size_t i = rank; i-- > rank - s.size();) {
            const std::size_t d = s[i - (rank - s.size())];
            st[i] = d == 1 ? 0 : acc;
            acc *= d;
        }
        return st;
    };
    plan.a_stride = strides_for(a);
    plan.b_stride = strides_for(b);
    return plan;
}

/// Calls f(out_index, a_index, b_index) for every output element in order.
template <class F>
void for_each_general(const Broadcast& plan, F&& f) {
    const std::size_t n = shape_numel(plan.out);
    const std::size_t rank = plan.out.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (std::size_t ax = rank; ax-- > 0;) {
            ++idx[ax];
            ia += plan.a_stride[ax];
            ib += plan.b_stride[ax];
            if (idx[ax] < plan.out[ax]) break;
            ia -= plan.a_stride[ax] * idx[ax];
            ib -= plan.b_stride[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
}

/// Calls f(i, j) for i = r * nb + j over all repeats r of a block of nb,
/// parallel over repeats. Avoids an integer modulo per element.
template <class F>
void for_each_repeat(std::size_t n, std::size_t nb, F&& f) {
    const std::size_t repeats = n / nb;
    const auto count = static_cast<std::ptrdiff_t>(repeats);
#pragma omp parallel for schedule(static) if (n > kGrain)
    for (std::ptrdiff_t ri = 0; ri < count; ++ri) {
        const std::size_t base = static_cast<std::size_t>(ri) * nb;
        for (std::size_t j = 0; j < nb; ++j) f(base + j, j);
    }
}

/// out[j] += sum_r g[r * cols + j], each column summed in row order by one
/// thread; threads own contiguous column chunks.
void column_sums(const double* g, std::size_t rows, std::size_t cols, double* out) {
    constexpr std::size_t kChunk = 64;
    parallel_for((cols + kChunk - 1) / kChunk, [&](std::size_t chunk) {
        const std::size_t lo = chunk * kChunk, hi = std::min(cols, lo + kChunk);
        double sums[kChunk] = {};
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = g + r * cols;
            for (std::size_t j = lo; j < hi; ++j) sums[j - lo] += row[j];
        }
        for (std::size_t j = lo; j < hi; ++j) out[j] += sums[j - lo];
    });
}

/// Shared implementation of the broadcasting binary ops. `da(a, b)` and
/// `db(a, b)` are the partial derivatives of `f(a, b)`.
template <class F, class DA, class DB>
Tensor broadcast_binary(const char* op, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
    Broadcast plan = plan_broadcast(op, a.shape(), b.shape());
    const std::size_t nb = b.numel();
    std::vector<double> out(shape_numel(plan.out));
    auto av = a.values();
    auto bv = b.values();
    switch (plan.kind) {
        case Broadcast::Kind::kSame:
            parallel_for(out.size(), [&](std::size_t i) { out[i] = f(av[i], bv[i]); });
            break;
        case Broadcast::Kind::kBRepeats:
            for_each_repeat(out.size(), nb, [&](std::size_t i, std::size_t j) { out[i] = f(av[i], bv[j]); });
            break;
        case Broadcast::Kind::kGeneral:
            for_each_general(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = f(av[ia], bv[ib]); });
            break;
    }
    const bool track = wants_grad({&a, &b});
    Shape shape = plan.out;
    return make_result(op, std::move(shape), std::move(out), track,
                       [an = a.node(), bn = b.node(), plan = std::move(plan), da, db](const Node& o) {
                           const auto& g = o.grad;
                           const std::size_t nb = bn->value.size();
                           const auto& av = an->value;
                           const auto& bv = bn->value;
                           if (an->requires_grad) {
                               auto ga = an->ensure_grad();
                               if (plan.kind == Broadcast::Kind::kSame) {
                                   parallel_for(g.size(), [&](std::size_t i) { ga[i] += g[i] * da(av[i], bv[i]); });
                               } else if (plan.kind == Broadcast::Kind::kBRepeats) {
                                   for_each_repeat(g.size(), nb, [&](std::size_t i, std::size_t j) {
                                       ga[i] += g[i] * da(av[i], bv[j]);
                                   });
                               } else {
                                   for_each_general(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                                       ga[ia] += g[i] * da(av[ia], bv[ib]);
                                   });
                               }
                           }
                           if (bn->requires_grad) {
                               auto gb = bn->ensure_grad();
                               if (plan.kind == Broadcast::Kind::kSame) {
                                   parallel_for(g.size(), [&](std::size_t i) { gb[i] += g[i] * db(av[i], bv[i]); });
                               } else if (plan.kind == Broadcast::Kind::kBRepeats) {
                                   // Each slot of b is reduced by one thread, in repeat order;
                                   // threads own contiguous column chunks.
                                   const std::size_t repeats = g.size() / nb;
                                   constexpr std::size_t kChunk = 64;
                                   parallel_for((nb + kChunk - 1) / kChunk, [&](std::size_t chunk) {
                                       const std::size_t lo = chunk * kChunk, hi = std::min(nb, lo + kChunk);
                                       double sums[kChunk] = {};
                                       for (std::size_t r = 0; r < repeats; ++r) {
                                           const std::size_t row = r * nb;
                                           for (std::size_t j = lo; j < hi; ++j) {
                                               sums[j - lo] += g[row + j] * db(av[row + j], bv[j]);
                                           }
                                       }
                                       for (std::size_t j = lo; j < hi; ++j) gb[j] += sums[j - lo];
                                   });
                               } else {
                                   for_each_general(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                                       gb[ib] += g[i] * db(av[ia], bv[ib]);
                                   });
                               }
                           }
                       });
}

/// Elementwise op whose derivative is expressed through input and output.
template <class F, class DF>
Tensor unary(const char* op, const Tensor& x, F f, DF df) {
    auto xv = x.values();
    std::vector<double> out(xv.size());
    parallel_for(out.size(), [&](std::size_t i) { out[i] = f(xv[i]); });
    return make_result(op, x.shape(), std::move(out), wants_grad({&x}), [xn = x.node(), df](const Node& o) {
        auto gx = xn->ensure_grad();
        const auto& xv = xn->value;
        parallel_for(o.grad.size(), [&](std::size_t i) { gx[i] += o.grad[i] * df(xv[i], o.value[i]); });
    });
}

/// (outer, dim, inner) factorisation of a shape around `axis`.
struct AxisSplit {
    std::size_t outer = 1, dim = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.dim = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

Tensor slice_impl(const char* op, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end,
                  bool drop_axis) {
    if (axis >= x.rank()) shape_error(op, "axis " + std::to_string(axis) + " out of range for " + shape_str(x.shape()));
    if (begin >= end || end > x.dim(axis)) {
        shape_error(op, "range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for axis of size " +
                            std::to_string(x.dim(axis)));
    }
    const AxisSplit s = split_at(x.shape(), axis);
    const std::size_t width = end - begin;
    Shape shape = x.shape();
    if (drop_axis) {
        shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    } else {
        shape[axis] = width;
    }
    std::vector<double> out(s.outer * width * s.inner);
    auto xv = x.values();
    for (std::size_t o = 0; o < s.outer; ++o) {
        const double* src = xv.data() + (o * s.dim + begin) * s.inner;
        std::copy(src, src + width * s.inner, out.data() + o * width * s.inner);
    }
    return make_result(op, std::move(shape), std::move(out), wants_grad({&x}),
                       [xn = x.node(), s, begin, width](const Node& o) {
                           auto gx = xn->ensure_grad();
                           for (std::size_t k = 0; k < s.outer; ++k) {
                               double* dst = gx.data() + (k * s.dim + begin) * s.inner;
                               const double* src = o.grad.data() + k * width * s.inner;
                               for (std::size_t i = 0; i < width * s.inner; ++i) dst[i] += src[i];
                           }
                       });
}

Tensor concat_impl(const char* op, const std::vector<Tensor>& parts, std::size_t axis, bool new_axis) {
    if (parts.empty()) shape_error(op, "no inputs");
    const Shape& ref = parts.front().shape();
    const std::size_t rank = ref.size();
    if (new_axis ? axis > rank : axis >= rank) shape_error(op, "axis out of range for " + shape_str(ref));
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == rank;
        for (std::size_t i = 0; ok && i < rank; ++i) {
            if (!new_axis && i == axis) continue;
            ok = s[i] == ref[i];
        }
        if (!ok) shape_error(op, "incompatible shapes " + shape_str(ref) + " and " + shape_str(s));
        widths.push_back(new_axis ? 1 : s[axis]);
        total += widths.back();
    }
    Shape shape = ref;
    if (new_axis) {
        shape.insert(shape.begin() + static_cast<std::ptrdiff_t>(axis), total);
    } else {
        shape[axis] = total;
    }
    const AxisSplit s = split_at(shape, axis);
    std::vector<double> out(shape_numel(shape));
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        auto pv = parts[p].values();
        const std::size_t chunk = widths[p] * s.inner;
        for (std::size_t o = 0; o < s.outer; ++o) {
            std::copy(pv.data() + o * chunk, pv.data() + (o + 1) * chunk, out.data() + (o * total + offset) * s.inner);
        }
        offset += widths[p];
    }
    std::vector<std::shared_ptr<Node>> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    return make_result(op, std::move(shape), std::move(out), wants_grad(parts),
                       [nodes = std::move(nodes), widths, s, total](const Node& o) {
                           std::size_t offset = 0;
                           for (std::size_t p = 0; p < nodes.size(); ++p) {
                               const std::size_t chunk = widths[p] * s.inner;
                               if (nodes[p]->requires_grad) {
                                   auto gp = nodes[p]->ensure_grad();
                                   for (std::size_t k = 0; k < s.outer; ++k) {
                                       const double* src = o.grad.data() + (k * total + offset) * s.inner;
                                       for (std::size_t i = 0; i < chunk; ++i) gp[k * chunk + i] += src[i];
                                   }
                               }
                               offset += widths[p];
                           }
                       });
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& w) {
    if (w.rank() != 2) shape_error("matmul", "weight must be rank 2, got " + shape_str(w.shape()));
    if (a.rank() < 1 || a.shape().back() != w.dim(0)) {
        shape_error("matmul", "inner dimensions differ: " + shape_str(a.shape()) + " x " + shape_str(w.shape()));
    }
    const std::size_t k = w.dim(0), n = w.dim(1), m = a.numel() / k;
    Shape shape = a.shape();
    shape.back() = n;
    std::vector<double> out(m * n);
    kernels::gemm(m, n, k, {a.values().data(), k}, {w.values().data(), n}, out.data(), n, false);
    return make_result("matmul", std::move(shape), std::move(out), wants_grad({&a, &w}),
                       [an = a.node(), wn = w.node(), m, n, k](const Node& o) {
                           if (an->requires_grad) {
                               kernels::gemm(m, k, n, {o.grad.data(), n}, {wn->value.data(), n, true},
                                             an->ensure_grad().data(), k, true);
                           }
                           if (wn->requires_grad) {
                               kernels::gemm(k, n, m, {an->value.data(), k, true}, {o.grad.data(), n},
                                             wn->ensure_grad().data(), n, true);
                           }
                       });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2) shape_error("affine", "weight must be rank 2, got " + shape_str(w.shape()));
    if (x.rank() < 1 || x.shape().back() != w.dim(0)) {
        shape_error("affine", "inner dimensions differ: " + shape_str(x.shape()) + " x " + shape_str(w.shape()));
    }
    if (b.rank() < 1 || b.numel() != w.dim(1) || b.shape().back() != w.dim(1)) {
        shape_error("affine", "bias " + shape_str(b.shape()) + " does not match " + std::to_string(w.dim(1)) +
                                  " outputs");
    }
    const std::size_t k = w.dim(0), n = w.dim(1), m = x.numel() / k;
    Shape shape = x.shape();
    shape.back() = n;
    std::vector<double> out(m * n);
    auto bv = b.values();
    for (std::size_t r = 0; r < m; ++r) std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(r * n));
    kernels::gemm(m, n, k, {x.values().data(), k}, {w.values().data(), n}, out.data(), n, true);
    return make_result("affine", std::move(shape), std::move(out), wants_grad({&x, &w, &b}),
                       [xn = x.node(), wn = w.node(), bn = b.node(), m, n, k](const Node& o) {
                           if (xn->requires_grad) {
                               kernels::gemm(m, k, n, {o.grad.data(), n}, {wn->value.data(), n, true},
                                             xn->ensure_grad().data(), k, true);
                           }
                           if (wn->requires_grad) {
                               kernels::gemm(k, n, m, {xn->value.data(), k, true}, {o.grad.data(), n},
                                             wn->ensure_grad().data(), n, true);
                           }
                           if (bn->requires_grad) column_sums(o.grad.data(), m, n, bn->ensure_grad().data());
                       });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0)) {
        shape_error("bmm", "expected [B,M,K] x [B,K,N], got " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
    const std::size_t kb = transpose_b ? b.dim(2) : b.dim(1);
    const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
    if (kb != k) {
        shape_error("bmm", "inner dimensions differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()) +
                               (transpose_b ? " (transposed)" : ""));
    }
    std::vector<double> out(batch * m * n);
    const std::size_t ldb = transpose_b ? k : n;
    kernels::batched_gemm(batch, m, n, k, {a.values().data(), k}, m * k, {b.values().data(), ldb, transpose_b}, k * n,
                          out.data(), m * n, false);
    return make_result(
        "bmm", {batch, m, n}, std::move(out), wants_grad({&a, &b}),
        [an = a.node(), bn = b.node(), batch, m, n, k, transpose_b](const Node& o) {
            const double* g = o.grad.data();
            if (an->requires_grad) {
                // dA = dC * op(B)^T
                const kernels::MatView bt = transpose_b ? kernels::MatView{bn->value.data(), k, false}
                                                        : kernels::MatView{bn->value.data(), n, true};
                kernels::batched_gemm(batch, m, k, n, {g, n}, m * n, bt, k * n, an->ensure_grad().data(), m * k, true);
            }
            if (bn->requires_grad) {
                if (transpose_b) {
                    // B stored [N,K]: dB = dC^T * A
                    kernels::batched_gemm(batch, n, k, m, {g, n, true}, m * n, {an->value.data(), k}, m * k,
                                          bn->ensure_grad().data(), n * k, true);
                } else {
                    kernels::batched_gemm(batch, k, n, m, {an->value.data(), k, true}, m * k, {g, n}, m * n,
                                          bn->ensure_grad().data(), k * n, true);
                }
            }
        });
}

Tensor add(const Tensor& a, const Tensor& b) {
    return broadcast_binary(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return broadcast_binary(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return broadcast_binary(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double factor) {
    return unary(
        "scale", x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor sigmoid(const Tensor& x) {
    return unary(
        "sigmoid", x,
        [](double v) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
    return unary(
        "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
    return unary(
        "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax_with_bias(const Tensor& logits, const Tensor& bias) {
    if (logits.rank() < 1 || logits.shape().back() == 0) shape_error("softmax_with_bias", "empty last axis");
    const std::size_t cols = logits.shape().back();
    const std::size_t rows = logits.numel() / cols;
    std::size_t bias_rows = 0;
    if (bias.defined()) {
        if (!is_trailing_block(bias.shape(), logits.shape()) || bias.numel() % cols != 0 || bias.numel() == 0) {
            shape_error("softmax_with_bias",
                        "bias " + shape_str(bias.shape()) + " does not tile logits " + shape_str(logits.shape()));
        }
        bias_rows = bias.numel() / cols;
    }
    std::vector<double> out(logits.numel());
    kernels::softmax_rows(rows, cols, logits.values().data(),
                          bias.defined() ? bias.values() : std::span<const double>{}, out.data());
    const bool track = bias.defined() ? wants_grad({&logits, &bias}) : wants_grad({&logits});
    std::shared_ptr<Node> bias_node = bias.defined() ? bias.node() : nullptr;
    return make_result("softmax_with_bias", logits.shape(), std::move(out), track,
                       [ln = logits.node(), bias_node, rows, cols, bias_rows](const Node& o) {
                           const bool need_bias = bias_node && bias_node->requires_grad;
                           if (!ln->requires_grad && !need_bias) return;
                           std::vector<double> dlogits(rows * cols, 0.0);
                           kernels::softmax_rows_backward(rows, cols, o.value.data(), o.grad.data(), dlogits.data());
                           if (ln->requires_grad) {
                               auto gl = ln->ensure_grad();
                               parallel_for(gl.size(), [&](std::size_t i) { gl[i] += dlogits[i]; });
                           }
                           if (need_bias) {
                               auto gb = bias_node->ensure_grad();
                               const std::size_t repeats = rows / bias_rows;
                               parallel_for(bias_rows * cols, [&](std::size_t slot) {
                                   double sum = 0.0;
                                   for (std::size_t r = 0; r < repeats; ++r) sum += dlogits[r * bias_rows * cols + slot];
                                   gb[slot] += sum;
                               });
                           }
                       });
}

Tensor softmax(const Tensor& logits) { return softmax_with_bias(logits, Tensor{}); }

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads, const Tensor& bias) {
    if (q.rank() != 3 || k.shape() != q.shape() || v.shape() != q.shape()) {
        shape_error("attention", "q, k, v must share one [batch, n, width] shape; got " + shape_str(q.shape()) + ", " +
                                     shape_str(k.shape()) + ", " + shape_str(v.shape()));
    }
    const std::size_t batch = q.dim(0), n = q.dim(1), width = q.dim(2);
    if (heads == 0 || width % heads != 0) {
        shape_error("attention", std::to_string(heads) + " heads do not divide width " + std::to_string(width));
    }
    if (bias.defined() && (strip_leading_ones(bias.shape()) != Shape{n, n} && !(n == 1 && bias.numel() == 1))) {
        shape_error("attention", "bias " + shape_str(bias.shape()) + " is not [n, n] for n = " + std::to_string(n));
    }
    const std::size_t dh = width / heads;
    const double factor = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool track = bias.defined() ? wants_grad({&q, &k, &v, &bias}) : wants_grad({&q, &k, &v});
    std::vector<double> out(q.numel());
    // The weights are only kept when a backward pass will read them.
    auto probs = std::make_shared<std::vector<double>>(track ? batch * heads * n * n : 0);
    kernels::attention(batch, heads, n, dh, q.values().data(), k.values().data(), v.values().data(),
                       bias.defined() ? bias.values() : std::span<const double>{}, factor, out.data(),
                       track ? probs->data() : nullptr);
    std::shared_ptr<Node> bias_node = bias.defined() ? bias.node() : nullptr;
    return make_result(
        "attention", q.shape(), std::move(out), track,
        [qn = q.node(), kn = k.node(), vn = v.node(), bias_node, probs, batch, heads, n, dh, factor](const Node& o) {
            // Scratch for inputs that do not need gradients keeps the kernel branch-free.
            std::vector<double> scratch;
            auto target = [&](const std::shared_ptr<Node>& node) {
                if (node->requires_grad) return node->ensure_grad().data();
                if (scratch.empty()) scratch.assign(node->value.size(), 0.0);
                return scratch.data();
            };
            double* gq = target(qn);
            double* gk = target(kn);
            double* gv = target(vn);
            const bool need_bias = bias_node && bias_node->requires_grad;
            kernels::attention_backward(batch, heads, n, dh, qn->value.data(), kn->value.data(), vn->value.data(),
                                        probs->data(), factor, o.grad.data(), gq, gk, gv,
                                        need_bias ? bias_node->ensure_grad().data() : nullptr);
        });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.numel());
    for (auto& m : mask) m = rng.uniform() >= rate ? keep_scale : 0.0;
    auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
    return make_result("dropout", x.shape(), std::move(out), wants_grad({&x}),
                       [xn = x.node(), mask = std::move(mask)](const Node& o) {
                           auto gx = xn->ensure_grad();
                           for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o.grad[i] * mask[i];
                       });
}

Tensor causal_dilated_conv1d(const Tensor& x, const Tensor& kernel, std::size_t dilation) {
    if (dilation < 1) shape_error("causal_dilated_conv1d", "dilation must be >= 1");
    if (x.rank() != 3 || kernel.rank() != 3 || kernel.dim(1) != x.dim(2)) {
        shape_error("causal_dilated_conv1d", "expected x [B,T,Cin] and kernel [K,Cin,Cout], got " +
                                                 shape_str(x.shape()) + " and " + shape_str(kernel.shape()));
    }
    const std::size_t batch = x.dim(0), steps = x.dim(1), in = x.dim(2);
    const std::size_t taps = kernel.dim(0), out_ch = kernel.dim(2);
    std::vector<double> out(batch * steps * out_ch);
    kernels::causal_conv1d(batch, steps, in, out_ch, taps, dilation, x.values().data(), kernel.values().data(),
                           out.data());
    return make_result("causal_dilated_conv1d", {batch, steps, out_ch}, std::move(out), wants_grad({&x, &kernel}),
                       [xn = x.node(), kn = kernel.node(), batch, steps, in, out_ch, taps, dilation](const Node& o) {
                           kernels::causal_conv1d_backward(
                               batch, steps, in, out_ch, taps, dilation, xn->value.data(), kn->value.data(),
                               o.grad.data(), xn->requires_grad ? xn->ensure_grad().data() : nullptr,
                               kn->requires_grad ? kn->ensure_grad().data() : nullptr);
                       });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        shape_error("reshape", "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    std::vector<double> out(x.values().begin(), x.values().end());
    return make_result("reshape", std::move(shape), std::move(out), wants_grad({&x}), [xn = x.node()](const Node& o) {
        auto gx = xn->ensure_grad();
        parallel_for(gx.size(), [&](std::size_t i) { gx[i] += o.grad[i]; });
    });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
    const std::size_t rank = x.rank();
    std::vector<bool> seen(rank, false);
    if (axes.size() != rank) shape_error("permute", "axis list does not match rank of " + shape_str(x.shape()));
    for (auto a : axes) {
        if (a >= rank || seen[a]) shape_error("permute", "invalid axis permutation");
        seen[a] = true;
    }
    Shape shape(rank);
    std::vector<std::size_t> in_stride(rank), src_stride(rank);
    std::size_t acc = 1;
    for (std::size_t i = rank; i-- > 0;) {
        in_stride[i] = acc;
        acc *= x.dim(i);
    }
    for (std::size_t i = 0; i < rank; ++i) {
        shape[i] = x.dim(axes[i]);
        src_stride[i] = in_stride[axes[i]];
    }
    // offsets[i] = source index of output element i
    const std::size_t n = x.numel();
    std::vector<std::size_t> offsets(n);
    {
        std::vector<std::size_t> idx(rank, 0);
        std::size_t src = 0;
        for (std::size_t i = 0; i < n; ++i) {
            offsets[i] = src;
            for (std::size_t ax = rank; ax-- > 0;) {
                ++idx[ax];
                src += src_stride[ax];
                if (idx[ax] < shape[ax]) break;
                src -= src_stride[ax] * idx[ax];
                idx[ax] = 0;
            }
        }
    }
    auto xv = x.values();
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t i) { out[i] = xv[offsets[i]]; });
    return make_result("permute", std::move(shape), std::move(out), wants_grad({&x}),
                       [xn = x.node(), offsets = std::move(offsets)](const Node& o) {
                           auto gx = xn->ensure_grad();
                           // offsets is a bijection, so the scatter has no collisions.
                           parallel_for(offsets.size(), [&](std::size_t i) { gx[offsets[i]] += o.grad[i]; });
                       });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) { return concat_impl("concat", parts, axis, false); }

Tensor stack(const std::vector<Tensor>& parts, std::size_t axis) { return concat_impl("stack", parts, axis, true); }

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    return slice_impl("slice", x, axis, begin, end, false);
}

Tensor select(const Tensor& x, std::size_t axis, std::size_t index) {
    return slice_impl("select", x, axis, index, index + 1, true);
}

Tensor mean_pool(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank() || x.dim(axis) == 0) shape_error("mean_pool", "invalid axis for " + shape_str(x.shape()));
    const AxisSplit s = split_at(x.shape(), axis);
    Shape shape = x.shape();
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    std::vector<double> out(s.outer * s.inner, 0.0);
    auto xv = x.values();
    const double inv = 1.0 / static_cast<double>(s.dim);
    for (std::size_t o = 0; o < s.outer; ++o) {
        double* dst = out.data() + o * s.inner;
        for (std::size_t d = 0; d < s.dim; ++d) {
            const double* src = xv.data() + (o * s.dim + d) * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
        }
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] *= inv;
    }
    return make_result("mean_pool", std::move(shape), std::move(out), wants_grad({&x}),
                       [xn = x.node(), s, inv](const Node& o) {
                           auto gx = xn->ensure_grad();
                           for (std::size_t k = 0; k < s.outer; ++k)
                               for (std::size_t d = 0; d < s.dim; ++d)
                                   for (std::size_t i = 0; i < s.inner; ++i)
                                       gx[(k * s.dim + d) * s.inner + i] += o.grad[k * s.inner + i] * inv;
                       });
}

Tensor sum_all(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    return make_result("sum_all", {}, {total}, wants_grad({&x}), [xn = x.node()](const Node& o) {
        auto gx = xn->ensure_grad();
        for (auto& g : gx) g += o.grad[0];
    });
}

Tensor binary_cross_entropy(const Tensor& probabilities, std::span<const double> labels) {
    if (probabilities.numel() != labels.size() || labels.empty()) {
        shape_error("binary_cross_entropy", "got " + std::to_string(probabilities.numel()) + " probabilities for " +
                                                std::to_string(labels.size()) + " labels");
    }
    auto pv = probabilities.values();
    double total = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double p = std::clamp(pv[i], kBceClamp, 1.0 - kBceClamp);
        total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    const double n = static_cast<double>(labels.size());
    std::vector<double> y(labels.begin(), labels.end());
    return make_result("binary_cross_entropy", {}, {total / n}, wants_grad({&probabilities}),
                       [pn = probabilities.node(), y = std::move(y), n](const Node& o) {
                           auto gp = pn->ensure_grad();
                           for (std::size_t i = 0; i < y.size(); ++i) {
                               const double p = std::clamp(pn->value[i], kBceClamp, 1.0 - kBceClamp);
                               gp[i] += o.grad[0] * (-(y[i] / p) + (1.0 - y[i]) / (1.0 - p)) / n;
                           }
                       });
}

}  // namespace hypobench::ad
