#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypobench::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Storage behind a Tensor handle. Gradients are allocated on first use.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::uint64_t id = 0;

    std::span<double> ensure_grad();
};

/// Shared handle to a row-major array of doubles that may take part in
/// reverse-mode differentiation. Copies alias the same node.
class Tensor {
   public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t numel() const { return node_->value.size(); }

    std::span<const double> values() const { return node_->value; }
    std::span<double> mutable_values() { return node_->value; }
    double item() const;
    double at(std::size_t flat) const { return node_->value.at(flat); }

    /// Empty until a backward pass has reached this tensor.
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->ensure_grad(); }
    void zero_grad();

    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool flag) { node_->requires_grad = flag; }

    std::uint64_t node_id() const { return node_->id; }
    const std::shared_ptr<Node>& node() const { return node_; }

    /// Fresh leaf holding a copy of the values; no gradient history.
    Tensor detach() const;

   private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    std::shared_ptr<Node> node_;
};

/// Ordered record of primitive applications on the current thread. Each
/// entry closes over its input and output nodes and, when run, pushes the
/// output gradient into the inputs. Entries are appended in evaluation order,
/// which is a topological order of the graph.
class Tape {
   public:
    static Tape& current();

    void record(std::string_view op, std::function<void()> backward);
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    void clear() { entries_.clear(); }

    /// Runs every entry once, newest first, then clears the tape.
    void run_backward();

    bool recording() const { return recording_; }
    void set_recording(bool on) { recording_ = on; }

    /// Names of the recorded ops, oldest first. Used by tests.
    std::vector<std::string_view> ops() const;

   private:
    struct Entry {
        std::string_view op;
        std::function<void()> backward;
    };
    std::vector<Entry> entries_;
    bool recording_ = true;
};

/// Disables tape recording on this thread for its lifetime.
class NoGradGuard {
   public:
    NoGradGuard() : previous_(Tape::current().recording()) { Tape::current().set_recording(false); }
    ~NoGradGuard() { Tape::current().set_recording(previous_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

   private:
    bool previous_;
};

/// Seeds d(loss)/d(loss) = 1 and replays the current tape backwards.
/// Throws ContractError unless `loss` holds exactly one element and the tape
/// is non-empty.
void backward(const Tensor& loss);

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

}  // namespace hypobench::ad
