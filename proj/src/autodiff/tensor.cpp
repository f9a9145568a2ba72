#include "hypobench/autodiff/tensor.hpp"

#include <algorithm>
#include <atomic>

#include "hypobench/common/errors.hpp"

namespace hypobench::ad {

namespace {

std::uint64_t next_node_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::span<double> Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " + std::to_string(values.size()) +
                         " values");
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    node->id = next_node_id();
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tape& Tape::current() {
    thread_local Tape tape;
    return tape;
}

void Tape::record(std::string_view op, std::function<void()> backward) {
    entries_.push_back({op, std::move(backward)});
}

void Tape::run_backward() {
    // Move the entries out so that closures (and the nodes they hold) are
    // released even if a backward function throws.
    std::vector<Entry> entries;
    entries.swap(entries_);
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) it->backward();
}

std::vector<std::string_view> Tape::ops() const {
    std::vector<std::string_view> names;
    names.reserve(entries_.size());
    for (const auto& e : entries_) names.push_back(e.op);
    return names;
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward: loss must be a scalar, got shape " +
                            (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    }
    Tape& tape = Tape::current();
    if (tape.empty()) throw ContractError("backward: tape is empty; nothing was recorded");
    auto g = loss.node()->ensure_grad();
    g[0] += 1.0;
    tape.run_backward();
}

}  // namespace hypobench::ad
