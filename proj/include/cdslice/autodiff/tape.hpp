#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "cdslice/autodiff/tensor.hpp"

namespace cdslice::ad {

template <class T>
class Tape;

/// Handle to one node of a tape.
template <class T>
struct Var {
    Tape<T>* tape = nullptr;
    std::size_t id = 0;

    const Tensor<T>& value() const { return tape->value(id); }
    const Shape& shape() const { return tape->value(id).shape(); }
};

/// Records the branch decisions of non-smooth ops (ReLU sign, max-pool
/// argmax) so the gradient checker can tell when a finite-difference probe
/// straddles a kink.
struct KinkProbe {
    std::vector<std::uint32_t> decisions;
    double min_relu_margin = std::numeric_limits<double>::infinity();

    void clear() {
        decisions.clear();
        min_relu_margin = std::numeric_limits<double>::infinity();
    }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so every
/// node's inputs precede it and backward() is a single reverse sweep.
template <class T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    /// When `record` is false no backward rules are stored and nothing
    /// requires a gradient (inference mode).
    explicit Tape(bool record = true) : record_(record) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const noexcept { return record_; }

    Var<T> constant(Tensor<T> value) {
        Node n;
        n.owned = std::move(value);
        return append(std::move(n));
    }

    /// Non-owning constant; `value` must outlive the tape.
    Var<T> constant_ref(const Tensor<T>& value) {
        Node n;
        n.external_value = &value;
        return append(std::move(n));
    }

    /// Trainable leaf. backward() accumulates into `p.grad`.
    Var<T> parameter(Parameter<T>& p) {
        Node n;
        n.external_value = &p.value;
        if (record_) {
            n.external_grad = &p.grad;
            n.requires_grad = true;
        }
        return append(std::move(n));
    }

    /// Appends an op result. `backward` runs only when some input requires
    /// a gradient and the tape is recording.
    Var<T> push(Tensor<T> value, std::initializer_list<std::size_t> inputs, BackwardFn backward) {
        return push(std::move(value), std::vector<std::size_t>(inputs), std::move(backward));
    }

    Var<T> push(Tensor<T> value, const std::vector<std::size_t>& inputs, BackwardFn backward) {
        Node n;
        n.owned = std::move(value);
        if (record_) {
            for (auto in : inputs) {
                if (nodes_[in].requires_grad) {
                    n.requires_grad = true;
                    break;
                }
            }
            if (n.requires_grad) n.backward = std::move(backward);
        }
        return append(std::move(n));
    }

    const Tensor<T>& value(std::size_t id) const {
        const Node& n = nodes_[id];
        return n.external_value ? *n.external_value : n.owned;
    }

    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Gradient buffer of a node, allocated as zeros on first access.
    Tensor<T>& grad(std::size_t id) {
        Node& n = nodes_[id];
        if (n.external_grad) return *n.external_grad;
        if (!n.grad) n.grad.emplace(value(id).shape());
        return *n.grad;
    }

    bool has_grad(std::size_t id) const {
        const Node& n = nodes_[id];
        return n.external_grad != nullptr || n.grad.has_value();
    }

    /// Row-major transpose of a rank-2 node value, cached for the tape's lifetime.
    const Tensor<T>& transposed(std::size_t id) {
        Node& n = nodes_[id];
        if (!n.transposed) {
            const Tensor<T>& v = value(id);
            const std::size_t r = v.rows(), c = v.cols();
            Tensor<T> t(Shape{c, r});
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) t[j * r + i] = v[i * c + j];
            n.transposed = std::make_unique<Tensor<T>>(std::move(t));
        }
        return *n.transposed;
    }

    /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse.
    void backward(Var<T> root) {
        if (!record_) throw Error("backward() on a tape that is not recording");
        if (value(root.id).size() != 1)
            throw DimensionError("backward() needs a scalar root, got shape " + shape_str(value(root.id).shape()));
        grad(root.id)[0] = T{1};
        backward_visits_ = 0;
        for (std::size_t i = root.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward || !n.grad) continue;
            ++backward_visits_;
            n.backward(*this, i);
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    /// Number of backward rules executed by the last backward().
    std::size_t backward_visits() const noexcept { return backward_visits_; }

    KinkProbe* probe = nullptr;

private:
    struct Node {
        Tensor<T> owned;
        const Tensor<T>* external_value = nullptr;
        Tensor<T>* external_grad = nullptr;
        std::optional<Tensor<T>> grad;
        std::unique_ptr<Tensor<T>> transposed;
        BackwardFn backward;
        bool requires_grad = false;
    };

    Var<T> append(Node n) {
        nodes_.push_back(std::move(n));
        return Var<T>{this, nodes_.size() - 1};
    }

    bool record_;
    std::size_t backward_visits_ = 0;
    std::deque<Node> nodes_;  // stable references across push
};

}  // namespace cdslice::ad
