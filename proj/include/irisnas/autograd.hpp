#pragma once

// Tape-based reverse-mode differentiation over NCHW tensors.

#include "irisnas/kernels.hpp"
#include "irisnas/tensor.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace irisnas {

class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A named trainable tensor with its gradient accumulator.
template <class T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad = Tensor<T>(value.shape()); }
};

/// Per-channel running statistics used by batch norm in evaluation mode.
template <class T>
struct RunningStats {
    Tensor<T> mean;
    Tensor<T> var;

    explicit RunningStats(std::size_t channels = 0)
        : mean(Shape{1, channels, 1, 1}, T(0)), var(Shape{1, channels, 1, 1}, T(1))
    {
    }
};

struct Var {
    std::size_t id = 0;
};

template <class T>
class Graph {
public:
    using Backward = std::function<void()>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor<T> value) { return record(std::move(value), false, {}); }
    Var input(Tensor<T> value, bool requires_grad = true) { return record(std::move(value), requires_grad, {}); }
    Var param(Parameter<T>& p);

    const Tensor<T>& value(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    /// Gradient of a recorded node; zero-filled when nothing flowed into it.
    const Tensor<T>& grad(Var v);
    /// Writable accumulator for backward closures.
    Tensor<T>& grad_slot(Var v);
    bool has_grad(Var v) const;

    Var record(Tensor<T> value, bool requires_grad, Backward backward);

    /// Runs the tape in exact reverse order starting from a scalar loss.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> value;
        Parameter<T>* param = nullptr;
        Tensor<T> grad;
        bool requires_grad = false;
        Backward backward;
    };
    std::vector<Node> nodes_;
};

template <class T>
struct BatchNormArgs {
    bool training = true;
    bool update_stats = true;
    T eps = T(1e-5);
    T momentum = T(0.1);
};

// Differentiable operations. Inputs that do not require gradients receive none.

template <class T>
Var conv2d(Graph<T>& g, Var x, Var kernel, int dilation);
template <class T>
Var pool2d(Graph<T>& g, Var x, kernels::PoolKind kind, int k = 2);
/// gamma/beta are [1,C,1,1]. In training mode the batch statistics are used and,
/// when `args.update_stats`, folded into `stats` with the given momentum.
template <class T>
Var batchnorm(Graph<T>& g, Var x, Var gamma, Var beta, RunningStats<T>* stats, const BatchNormArgs<T>& args);
template <class T>
Var identity_op(Graph<T>& g, Var x);
template <class T>
Var zero_op(Graph<T>& g, Var x);
template <class T>
Var relu(Graph<T>& g, Var x);
template <class T>
Var add(Graph<T>& g, std::span<const Var> xs);
template <class T>
Var mul(Graph<T>& g, Var a, Var b);
template <class T>
Var scale(Graph<T>& g, Var x, T factor);
/// Sum over all elements; returns a [1,1,1,1] scalar.
template <class T>
Var sum(Graph<T>& g, Var x);
/// softmax over the channel axis of a [1,n,1,1] logit vector.
template <class T>
Var softmax(Graph<T>& g, Var logits);
/// sum_k weights[slots[k]] * xs[k]; weights is a [1,n,1,1] vector.
template <class T>
Var weighted_sum(Graph<T>& g, std::span<const Var> xs, Var weights, std::span<const std::size_t> slots);
template <class T>
Var global_avg_pool(Graph<T>& g, Var x);
/// x: [N,F,1,1], weight: [O,F,1,1], bias: [1,O,1,1] -> [N,O,1,1].
template <class T>
Var linear(Graph<T>& g, Var x, Var weight, Var bias);
template <class T>
Var slice_batch(Graph<T>& g, Var x, std::size_t begin, std::size_t count);
/// Mean negative log-likelihood of `labels` under softmax(logits).
template <class T>
Var cross_entropy(Graph<T>& g, Var logits, std::span<const std::size_t> labels);
/// Mean of max(0, |a-p|^2 - |a-n|^2 + margin).
template <class T>
Var triplet_loss(Graph<T>& g, Var anchor, Var positive, Var negative, T margin);

/// Heavy-ball SGD over trainable parameters. Velocity buffers are created lazily.
template <class T>
class Sgd {
public:
    Sgd(T lr, T momentum) : lr_(lr), momentum_(momentum) {}

    void step(std::span<Parameter<T>* const> params);
    void set_lr(T lr) { lr_ = lr; }
    T lr() const { return lr_; }

private:
    T lr_;
    T momentum_;
    std::vector<Tensor<T>> velocity_;
};

/// w <- w - lr * grad, optionally with momentum, for one parameter set.
template <class T>
void sgd_step(std::span<Parameter<T>* const> params, T lr, T momentum, std::vector<Tensor<T>>& velocity);

}  // namespace irisnas
