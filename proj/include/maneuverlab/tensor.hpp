#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace mlab::nd {

using Shape = std::vector<std::size_t>;

[[nodiscard]] std::size_t shape_numel(const Shape& shape);

namespace detail {

// One vertex of the recorded computation. Leaves have no backward_fn.
struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until populated
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward_fn;

    std::vector<double>& grad_buffer() {
        if (grad.size() != data.size()) {
            grad.assign(data.size(), 0.0);
        }
        return grad;
    }
};

}  // namespace detail

/**
 * Dense tensor of doubles with reverse-mode differentiation.
 *
 * A Tensor is a shared handle: copies alias the same storage and the same
 * node in the recorded graph. Operations on tensors that require grad
 * record a closure computing local gradients; backward() orders the graph
 * topologically from the loss and visits every node once in reverse.
 *
 * Leaf gradients accumulate across backward() calls until zero_grad().
 * Tensors that do not require grad carry no graph state and may be shared
 * freely between threads.
 */
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor vector(std::initializer_list<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(node_); }
    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::size_t dim(std::size_t axis) const;
    [[nodiscard]] std::size_t rank() const { return shape().size(); }
    [[nodiscard]] std::size_t numel() const;

    [[nodiscard]] std::span<const double> data() const;
    /// Writable storage. Only meaningful for leaves (optimizer updates,
    /// checkpoint loading); mutating an interior node does not re-run
    /// anything.
    [[nodiscard]] std::span<double> mutable_data();

    [[nodiscard]] double item() const;
    [[nodiscard]] double operator[](std::size_t i) const { return data()[i]; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const;

    [[nodiscard]] bool requires_grad() const;
    [[nodiscard]] bool has_grad() const;
    /// Gradient buffer; empty span when no gradient has been populated.
    [[nodiscard]] std::span<const double> grad() const;
    void zero_grad();

    /// Reverse pass from this scalar. Throws ContractError if not scalar.
    void backward() const;

    /// Same values, no graph history, no grad.
    [[nodiscard]] Tensor detach() const;

    [[nodiscard]] const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

// Linear algebra
[[nodiscard]] Tensor matmul(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor transpose(const Tensor& a);

// Elementwise (identical shapes)
[[nodiscard]] Tensor add(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor sub(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor mul(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor scale(const Tensor& a, double s);
[[nodiscard]] Tensor add_scalar(const Tensor& a, double s);
[[nodiscard]] Tensor neg(const Tensor& a);
[[nodiscard]] Tensor square(const Tensor& a);
[[nodiscard]] Tensor tanh(const Tensor& a);
[[nodiscard]] Tensor relu(const Tensor& a);
[[nodiscard]] Tensor sigmoid(const Tensor& a);
[[nodiscard]] Tensor exp(const Tensor& a);
[[nodiscard]] Tensor log(const Tensor& a);
/// log(1 + exp(a)), evaluated without overflow.
[[nodiscard]] Tensor softplus(const Tensor& a);
/// Clamps into [lo, hi]; gradient is zero where the clamp is active.
[[nodiscard]] Tensor clamp(const Tensor& a, double lo, double hi);
/// Multiplies by a fixed keep/scale mask (inverted dropout). No grad to mask.
[[nodiscard]] Tensor dropout(const Tensor& a, std::span<const double> mask);

// Reductions
[[nodiscard]] Tensor sum(const Tensor& a);
[[nodiscard]] Tensor mean(const Tensor& a);

// Shape manipulation
[[nodiscard]] Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates 1-D tensors.
[[nodiscard]] Tensor concat(std::span<const Tensor> parts);
[[nodiscard]] Tensor concat(std::initializer_list<Tensor> parts);
/// Contiguous range [start, start+len) of a 1-D tensor.
[[nodiscard]] Tensor slice(const Tensor& a, std::size_t start, std::size_t len);
/// Rows [start, start+count) of a 2-D tensor.
[[nodiscard]] Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);
/// Stacks n 1-D tensors of length F into an F x n matrix (one per column).
[[nodiscard]] Tensor stack_columns(std::span<const Tensor> columns);

// Network primitives
/// Adds b[c] to every element of row c of x (C x T).
[[nodiscard]] Tensor add_row_bias(const Tensor& x, const Tensor& b);
/**
 * Causal dilated 1-D convolution.
 *
 * x: F_in x T, w: F_out x F_in x k. Output F_out x T with
 *   y[o, s] = sum_c sum_i w[o, c, i] * x[c, s - d*i],
 * reading x as zero for negative time indices.
 */
[[nodiscard]] Tensor conv1d_dilated(const Tensor& x, const Tensor& w, std::size_t dilation);
/// Per-row max over time (C x T -> C). Gradient goes to the first argmax.
[[nodiscard]] Tensor global_max_pool(const Tensor& x);
/// Index of the first maximum in each row; exposed for inspection.
[[nodiscard]] std::vector<std::size_t> argmax_rows(const Tensor& x);

}  // namespace mlab::nd
