#include "maneuverlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>

#include "maneuverlab/error.hpp"

namespace mlab::nd {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += (i ? "x" : "") + std::to_string(s[i]);
    }
    return out + "]";
}

const Node& node_of(const Tensor& t) {
    if (!t.defined()) {
        throw ContractError("operation on undefined tensor");
    }
    return *t.node();
}

// Builds the output node; the closure runs during backward with the output
// node (whose grad is populated) and may read parents from out.parents.
template <class Backward>
Tensor record(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
              Backward&& bw) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    const bool rg = std::any_of(inputs.begin(), inputs.end(),
                                [](const Tensor& t) { return t.requires_grad(); });
    if (rg) {
        node->requires_grad = true;
        for (const auto& t : inputs) {
            node->parents.push_back(t.node());
        }
        Node* self = node.get();
        node->backward_fn = [self, fn = std::forward<Backward>(bw)]() { fn(*self); };
    }
    return Tensor(std::move(node));
}

template <class Backward>
Tensor record_many(Shape shape, std::vector<double> data, std::span<const Tensor> inputs,
                   Backward&& bw) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    const bool rg = std::any_of(inputs.begin(), inputs.end(),
                                [](const Tensor& t) { return t.requires_grad(); });
    if (rg) {
        node->requires_grad = true;
        for (const auto& t : inputs) {
            node->parents.push_back(t.node());
        }
        Node* self = node.get();
        node->backward_fn = [self, fn = std::forward<Backward>(bw)]() { fn(*self); };
    }
    return Tensor(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

// Elementwise unary op with derivative expressed via input x and output y.
template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
    const auto& in = node_of(a).data;
    std::vector<double> out(in.size());
    std::transform(in.begin(), in.end(), out.begin(), fwd);
    return record(a.shape(), std::move(out), {a}, [deriv](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) {
            return;
        }
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += self.grad[i] * deriv(p.data[i], self.data[i]);
        }
    });
}

}  // namespace

// ---------------------------------------------------------------- Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("Tensor::from: shape " + shape_str(shape) + " holds " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
    return from({values.size()}, std::vector<double>(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return node_of(*this).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) {
        throw DimensionError("dim: axis out of range");
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return node_of(*this).data.size(); }

std::span<const double> Tensor::data() const { return node_of(*this).data; }

std::span<double> Tensor::mutable_data() {
    node_of(*this);
    return node_->data;
}

double Tensor::item() const {
    if (numel() != 1) {
        throw ContractError("item: tensor has " + std::to_string(numel()) + " elements");
    }
    return data()[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    if (rank() != 2) {
        throw DimensionError("at(r, c) requires a 2-D tensor");
    }
    return data()[r * shape()[1] + c];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

std::span<const double> Tensor::grad() const {
    if (!has_grad()) {
        return {};
    }
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) {
        node_->grad.clear();
    }
}

Tensor Tensor::detach() const { return from(shape(), node_of(*this).data, false); }

void Tensor::backward() const {
    const Node& root = node_of(*this);
    if (root.data.size() != 1) {
        throw ContractError("backward: loss must be scalar, got shape " + shape_str(root.shape));
    }
    if (!root.requires_grad) {
        throw ContractError("backward: loss does not depend on any tensor requiring grad");
    }

    // Iterative post-order DFS gives a topological order (inputs first).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    // Interior gradients are per-pass; leaf gradients accumulate.
    for (Node* n : order) {
        if (n->backward_fn) {
            n->grad.assign(n->data.size(), 0.0);
        }
    }
    node_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) {
            (*it)->backward_fn();
        }
    }
}

// ---------------------------------------------------------------- linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul: expects 2-D operands, got " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    const auto& A = node_of(a).data;
    const auto& B = node_of(b).data;
    std::vector<double> C(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) {
                C[i * n + j] += aip * B[p * n + j];
            }
        }
    }
    return record({m, n}, std::move(C), {a, b}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const auto& G = self.grad;
        if (pa.requires_grad) {  // dA = G * B^T
            auto& gA = pa.grad_buffer();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        acc += G[i * n + j] * pb.data[p * n + j];
                    }
                    gA[i * k + p] += acc;
                }
            }
        }
        if (pb.requires_grad) {  // dB = A^T * G
            auto& gB = pb.grad_buffer();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = pa.data[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) {
                        gB[p * n + j] += aip * G[i * n + j];
                    }
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) {
        throw DimensionError("transpose: expects 2-D tensor");
    }
    const std::size_t r = a.dim(0), c = a.dim(1);
    const auto& A = node_of(a).data;
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[j * r + i] = A[i * c + j];
        }
    }
    return record({c, r}, std::move(out), {a}, [r, c](Node& self) {
        Node& p = *self.parents[0];
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                g[i * c + j] += self.grad[j * r + i];
            }
        }
    });
}

// ---------------------------------------------------------------- elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    const auto& A = node_of(a).data;
    const auto& B = node_of(b).data;
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = A[i] + B[i];
    }
    return record(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (auto& p : self.parents) {
            if (p->requires_grad) {
                auto& g = p->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += self.grad[i];
                }
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    const auto& A = node_of(a).data;
    const auto& B = node_of(b).data;
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = A[i] - B[i];
    }
    return record(a.shape(), std::move(out), {a, b}, [](Node& self) {
        const double sign[2] = {1.0, -1.0};
        for (std::size_t k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            if (p.requires_grad) {
                auto& g = p.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += sign[k] * self.grad[i];
                }
            }
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    const auto& A = node_of(a).data;
    const auto& B = node_of(b).data;
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = A[i] * B[i];
    }
    return record(a.shape(), std::move(out), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i] * pb.data[i];
            }
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i] * pa.data[i];
            }
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor square(const Tensor& a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor tanh(const Tensor& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0.0) {
                return 1.0 / (1.0 + std::exp(-x));
            }
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softplus(const Tensor& a) {
    return unary(
        a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
        [](double x, double) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) {
        throw ParameterError("clamp: lo must not exceed hi");
    }
    return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Tensor dropout(const Tensor& a, std::span<const double> mask) {
    if (mask.size() != a.numel()) {
        throw DimensionError("dropout: mask size does not match tensor");
    }
    const auto& A = node_of(a).data;
    std::vector<double> m(mask.begin(), mask.end());
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = A[i] * m[i];
    }
    return record(a.shape(), std::move(out), {a}, [m = std::move(m)](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += self.grad[i] * m[i];
        }
    });
}

// ---------------------------------------------------------------- reductions

Tensor sum(const Tensor& a) {
    const auto& A = node_of(a).data;
    const double s = std::accumulate(A.begin(), A.end(), 0.0);
    return record({}, {s}, {a}, [](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (auto& v : g) {
            v += self.grad[0];
        }
    });
}

Tensor mean(const Tensor& a) {
    const auto n = a.numel();
    if (n == 0) {
        throw DimensionError("mean: empty tensor");
    }
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

// ---------------------------------------------------------------- shapes

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    }
    return record(std::move(shape), node_of(a).data, {a}, [](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += self.grad[i];
        }
    });
}

Tensor concat(std::span<const Tensor> parts) {
    std::vector<double> out;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        if (p.rank() != 1) {
            throw DimensionError("concat: expects 1-D tensors");
        }
        offsets.push_back(out.size());
        const auto& d = node_of(p).data;
        out.insert(out.end(), d.begin(), d.end());
    }
    const std::size_t total = out.size();
    return record_many({total}, std::move(out), parts, [offsets](Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) {
                continue;
            }
            auto& g = p.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[offsets[k] + i];
            }
        }
    });
}

Tensor concat(std::initializer_list<Tensor> parts) {
    return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice(const Tensor& a, std::size_t start, std::size_t len) {
    if (a.rank() != 1 || start + len > a.numel()) {
        throw DimensionError("slice: range out of bounds for " + shape_str(a.shape()));
    }
    const auto& A = node_of(a).data;
    std::vector<double> out(A.begin() + static_cast<std::ptrdiff_t>(start),
                            A.begin() + static_cast<std::ptrdiff_t>(start + len));
    return record({len}, std::move(out), {a}, [start](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[start + i] += self.grad[i];
        }
    });
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
    if (a.rank() != 2 || start + count > a.dim(0)) {
        throw DimensionError("slice_rows: range out of bounds for " + shape_str(a.shape()));
    }
    const std::size_t cols = a.dim(1);
    const auto& A = node_of(a).data;
    std::vector<double> out(A.begin() + static_cast<std::ptrdiff_t>(start * cols),
                            A.begin() + static_cast<std::ptrdiff_t>((start + count) * cols));
    return record({count, cols}, std::move(out), {a}, [offset = start * cols](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            g[offset + i] += self.grad[i];
        }
    });
}

Tensor stack_columns(std::span<const Tensor> columns) {
    if (columns.empty()) {
        throw DimensionError("stack_columns: no columns");
    }
    const std::size_t f = columns[0].numel();
    const std::size_t n = columns.size();
    std::vector<double> out(f * n);
    for (std::size_t j = 0; j < n; ++j) {
        if (columns[j].rank() != 1 || columns[j].numel() != f) {
            throw DimensionError("stack_columns: columns must be 1-D of equal length");
        }
        const auto& d = node_of(columns[j]).data;
        for (std::size_t r = 0; r < f; ++r) {
            out[r * n + j] = d[r];
        }
    }
    return record_many({f, n}, std::move(out), columns, [f, n](Node& self) {
        for (std::size_t j = 0; j < n; ++j) {
            Node& p = *self.parents[j];
            if (!p.requires_grad) {
                continue;
            }
            auto& g = p.grad_buffer();
            for (std::size_t r = 0; r < f; ++r) {
                g[r] += self.grad[r * n + j];
            }
        }
    });
}

// ---------------------------------------------------------------- network primitives

Tensor add_row_bias(const Tensor& x, const Tensor& b) {
    if (x.rank() != 2 || b.rank() != 1 || b.numel() != x.dim(0)) {
        throw DimensionError("add_row_bias: bias length must equal row count");
    }
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    std::vector<double> out = node_of(x).data;
    const auto& B = node_of(b).data;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] += B[r];
        }
    }
    return record(x.shape(), std::move(out), {x, b}, [rows, cols](Node& self) {
        Node& px = *self.parents[0];
        Node& pb = *self.parents[1];
        if (px.requires_grad) {
            auto& g = px.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i];
            }
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    g[r] += self.grad[r * cols + c];
                }
            }
        }
    });
}

Tensor conv1d_dilated(const Tensor& x, const Tensor& w, std::size_t dilation) {
    if (dilation < 1) {
        throw ParameterError("conv1d_dilated: dilation must be >= 1");
    }
    if (w.rank() != 3 || w.dim(2) < 1) {
        throw ParameterError("conv1d_dilated: kernel must be F_out x F_in x k with k >= 1");
    }
    if (x.rank() != 2 || x.dim(0) != w.dim(1)) {
        throw DimensionError("conv1d_dilated: input " + shape_str(x.shape()) +
                             " incompatible with kernel " + shape_str(w.shape()));
    }
    const std::size_t fin = x.dim(0), T = x.dim(1), fout = w.dim(0), k = w.dim(2);
    const std::size_t d = dilation;
    const auto& X = node_of(x).data;
    const auto& W = node_of(w).data;
    std::vector<double> Y(fout * T, 0.0);
    for (std::size_t o = 0; o < fout; ++o) {
        for (std::size_t c = 0; c < fin; ++c) {
            for (std::size_t i = 0; i < k; ++i) {
                const double wv = W[(o * fin + c) * k + i];
                const std::size_t shift = d * i;
                for (std::size_t s = shift; s < T; ++s) {
                    Y[o * T + s] += wv * X[c * T + s - shift];
                }
            }
        }
    }
    return record({fout, T}, std::move(Y), {x, w}, [fin, T, fout, k, d](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        const auto& G = self.grad;
        if (px.requires_grad) {
            auto& gx = px.grad_buffer();
            for (std::size_t o = 0; o < fout; ++o) {
                for (std::size_t c = 0; c < fin; ++c) {
                    for (std::size_t i = 0; i < k; ++i) {
                        const double wv = pw.data[(o * fin + c) * k + i];
                        const std::size_t shift = d * i;
                        for (std::size_t s = shift; s < T; ++s) {
                            gx[c * T + s - shift] += wv * G[o * T + s];
                        }
                    }
                }
            }
        }
        if (pw.requires_grad) {
            auto& gw = pw.grad_buffer();
            for (std::size_t o = 0; o < fout; ++o) {
                for (std::size_t c = 0; c < fin; ++c) {
                    for (std::size_t i = 0; i < k; ++i) {
                        const std::size_t shift = d * i;
                        double acc = 0.0;
                        for (std::size_t s = shift; s < T; ++s) {
                            acc += px.data[c * T + s - shift] * G[o * T + s];
                        }
                        gw[(o * fin + c) * k + i] += acc;
                    }
                }
            }
        }
    });
}

std::vector<std::size_t> argmax_rows(const Tensor& x) {
    if (x.rank() != 2) {
        throw DimensionError("argmax_rows: expects C x T tensor");
    }
    const std::size_t C = x.dim(0), T = x.dim(1);
    if (T == 0) {
        throw DimensionError("argmax_rows: empty time axis");
    }
    const auto& X = node_of(x).data;
    std::vector<std::size_t> idx(C, 0);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 1; t < T; ++t) {
            if (X[c * T + t] > X[c * T + idx[c]]) {
                idx[c] = t;
            }
        }
    }
    return idx;
}

Tensor global_max_pool(const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) == 0) {
        throw DimensionError("global_max_pool: expects C x T tensor with T >= 1");
    }
    const std::size_t C = x.dim(0), T = x.dim(1);
    auto idx = argmax_rows(x);
    const auto& X = node_of(x).data;
    std::vector<double> out(C);
    for (std::size_t c = 0; c < C; ++c) {
        out[c] = X[c * T + idx[c]];
    }
    return record({C}, std::move(out), {x}, [idx = std::move(idx), T](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t c = 0; c < idx.size(); ++c) {
            g[c * T + idx[c]] += self.grad[c];
        }
    });
}

}  // namespace mlab::nd
