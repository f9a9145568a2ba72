#pragma once

// Differentiable primitives. Every function records a tape entry when tape
// recording is on and any input requires gradients. Shape violations throw
// ShapeError naming the primitive; non-finite outputs throw NumericError.

#include <cstddef>
#include <span>
#include <vector>

#include "hypobench/autodiff/tensor.hpp"
#include "hypobench/common/rng.hpp"

namespace hypobench::ad {

/// Additive sentinel used for masked attention logits.
inline constexpr double kMaskedLogit = -1e9;

// --- linear algebra -------------------------------------------------------

/// [..., K] x [K, N] -> [..., N].
Tensor matmul(const Tensor& a, const Tensor& w);

/// matmul(x, w) + b with b [N] added to every row, in one pass.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

/// Batched product [B, M, K] x [B, K, N] -> [B, M, N]. With `transpose_b`
/// the second operand is [B, N, K] and used transposed.
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

// --- broadcasting elementwise ----------------------------------------------

/// Numpy-style broadcasting over trailing-aligned dimensions.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);

// --- activations -------------------------------------------------------------

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

/// softmax(logits + bias) over the last axis. `bias` may be undefined;
/// otherwise its shape must match a trailing block of the logits' shape
/// (leading size-1 axes ignored) and it is repeated over the leading axes.
/// Gradients flow into the bias when it requires them.
Tensor softmax_with_bias(const Tensor& logits, const Tensor& bias);
Tensor softmax(const Tensor& logits);

/// Fused multi-head attention: q, k, v [batch, n, heads*dh] ->
/// softmax(q_h k_h^T / sqrt(dh) + bias) v_h per head, merged back to
/// [batch, n, heads*dh]. `bias` is undefined or [n, n] and receives
/// gradients when it requires them. Same values as composing bmm and
/// softmax_with_bias per head, without materializing the split heads.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads, const Tensor& bias);

/// Inverted dropout: at train time keeps each element with probability
/// 1 - rate and scales kept elements by 1 / (1 - rate). Identity otherwise.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

/// x [B, T, Cin], kernel [K, Cin, Cout] -> [B, T, Cout]; output at t reads
/// x[t - k*dilation] for tap k, zero-padded on the left.
Tensor causal_dilated_conv1d(const Tensor& x, const Tensor& kernel, std::size_t dilation);

// --- structure -----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor stack(const std::vector<Tensor>& parts, std::size_t axis);
/// Elements [begin, end) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
/// Index `index` along `axis`; the axis is removed.
Tensor select(const Tensor& x, std::size_t axis, std::size_t index);

// --- reductions and loss -------------------------------------------------------

/// Mean over `axis`; the axis is removed.
Tensor mean_pool(const Tensor& x, std::size_t axis);
Tensor sum_all(const Tensor& x);

/// Mean binary cross-entropy of probabilities against {0,1} labels.
/// Probabilities are clamped to [kBceClamp, 1 - kBceClamp] inside the logs.
inline constexpr double kBceClamp = 1e-12;
Tensor binary_cross_entropy(const Tensor& probabilities, std::span<const double> labels);

}  // namespace hypobench::ad
