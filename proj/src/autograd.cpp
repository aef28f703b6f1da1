#include "irisnas/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace irisnas {

template <class T>
Var Graph<T>::param(Parameter<T>& p)
{
    if (p.grad.shape() != p.value.shape())
        p.zero_grad();
    Node node;
    node.param = &p;
    node.requires_grad = p.trainable;
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <class T>
const Tensor<T>& Graph<T>::value(Var v) const
{
    const Node& n = nodes_.at(v.id);
    return n.param ? n.param->value : n.value;
}

template <class T>
bool Graph<T>::has_grad(Var v) const
{
    const Node& n = nodes_.at(v.id);
    return !n.grad.empty() || (n.param != nullptr);
}

template <class T>
Tensor<T>& Graph<T>::grad_slot(Var v)
{
    Node& n = nodes_.at(v.id);
    if (n.param)
        return n.param->grad;
    if (n.grad.shape() != n.value.shape())
        n.grad = Tensor<T>(n.value.shape());
    return n.grad;
}

template <class T>
const Tensor<T>& Graph<T>::grad(Var v)
{
    return grad_slot(v);
}

template <class T>
Var Graph<T>::record(Tensor<T> value, bool requires_grad, Backward backward)
{
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    if (requires_grad)
        node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <class T>
void Graph<T>::backward(Var loss)
{
    if (value(loss).size() != 1)
        throw ContractError("backward: loss must be a scalar, got shape " + value(loss).shape().str());
    if (!nodes_[loss.id].requires_grad)
        return;
    grad_slot(loss)[0] += T(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backward && !n.grad.empty())
            n.backward();
    }
}

namespace {

template <class T>
bool any_grad(const Graph<T>& g, std::initializer_list<Var> vs)
{
    return std::any_of(vs.begin(), vs.end(), [&](Var v) { return g.requires_grad(v); });
}

template <class T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src)
{
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] += src[i];
}

}  // namespace

template <class T>
Var conv2d(Graph<T>& g, Var x, Var kernel, int dilation)
{
    Tensor<T> y;
    kernels::conv2d_forward(g.value(x), g.value(kernel), dilation, y);
    const bool rg = any_grad(g, {x, kernel});
    Var out{g.size()};
    return g.record(std::move(y), rg, [&g, x, kernel, dilation, out] {
        Tensor<T>* gx = g.requires_grad(x) ? &g.grad_slot(x) : nullptr;
        Tensor<T>* gk = g.requires_grad(kernel) ? &g.grad_slot(kernel) : nullptr;
        kernels::conv2d_backward(g.value(x), g.value(kernel), dilation, g.grad_slot(out), gx, gk);
    });
}

template <class T>
Var pool2d(Graph<T>& g, Var x, kernels::PoolKind kind, int k)
{
    Tensor<T> y;
    auto argmax = std::make_shared<std::vector<std::uint32_t>>();
    kernels::pool2d_forward(g.value(x), kind, k, y, argmax.get());
    Var out{g.size()};
    return g.record(std::move(y), g.requires_grad(x), [&g, x, kind, k, out, argmax] {
        kernels::pool2d_backward(g.value(x), kind, k, g.grad_slot(out), argmax.get(), g.grad_slot(x));
    });
}

template <class T>
Var batchnorm(Graph<T>& g, Var x, Var gamma, Var beta, RunningStats<T>* stats, const BatchNormArgs<T>& args)
{
    const Tensor<T>& xv = g.value(x);
    const std::size_t C = xv.shape().c;
    const std::vector<T>& gv = g.value(gamma).values();
    const std::vector<T>& bv = g.value(beta).values();
    if (gv.size() != C || bv.size() != C)
        throw DimensionError("batchnorm: expected " + std::to_string(C) + " affine parameters");
    const bool rg = any_grad(g, {x, gamma, beta});
    Var out{g.size()};

    if (args.training) {
        Tensor<T> y;
        auto xhat = std::make_shared<Tensor<T>>();
        auto inv_std = std::make_shared<std::vector<T>>();
        std::vector<T> mean;
        std::vector<T> var;
        kernels::batchnorm_train_forward(xv, gv, bv, args.eps, y, *xhat, mean, *inv_std, var);
        if (stats && args.update_stats) {
            const auto count = static_cast<T>(xv.shape().n * xv.shape().plane());
            const T unbias = count > 1 ? count / (count - 1) : T(1);
            for (std::size_t c = 0; c < C; ++c) {
                stats->mean[c] = (1 - args.momentum) * stats->mean[c] + args.momentum * mean[c];
                stats->var[c] = (1 - args.momentum) * stats->var[c] + args.momentum * var[c] * unbias;
            }
        }
        return g.record(std::move(y), rg, [&g, x, gamma, beta, out, xhat, inv_std] {
            Tensor<T>* gx = g.requires_grad(x) ? &g.grad_slot(x) : nullptr;
            std::vector<T> dgamma(inv_std->size(), T(0));
            std::vector<T> dbeta(inv_std->size(), T(0));
            kernels::batchnorm_train_backward(*xhat, g.value(gamma).values(), *inv_std, g.grad_slot(out), gx,
                                              &dgamma, &dbeta);
            if (g.requires_grad(gamma))
                for (std::size_t c = 0; c < dgamma.size(); ++c)
                    g.grad_slot(gamma)[c] += dgamma[c];
            if (g.requires_grad(beta))
                for (std::size_t c = 0; c < dbeta.size(); ++c)
                    g.grad_slot(beta)[c] += dbeta[c];
        });
    }

    if (!stats)
        throw ContractError("batchnorm: evaluation mode requires running statistics");
    const Shape s = xv.shape();
    const std::size_t plane = s.plane();
    auto xhat = std::make_shared<Tensor<T>>(s);
    auto inv_std = std::make_shared<std::vector<T>>(C);
    Tensor<T> y(s);
    for (std::size_t c = 0; c < C; ++c)
        (*inv_std)[c] = T(1) / std::sqrt(stats->var[c] + args.eps);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t off = (n * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const T h = (xv[off + i] - stats->mean[c]) * (*inv_std)[c];
                (*xhat)[off + i] = h;
                y[off + i] = gv[c] * h + bv[c];
            }
        }
    return g.record(std::move(y), rg, [&g, x, gamma, beta, out, xhat, inv_std, C, plane] {
        const Tensor<T>& gy = g.grad_slot(out);
        const Shape s2 = gy.shape();
        const std::vector<T>& gam = g.value(gamma).values();
        for (std::size_t n = 0; n < s2.n; ++n)
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t off = (n * C + c) * plane;
                T sg = 0;
                T sgh = 0;
                for (std::size_t i = 0; i < plane; ++i) {
                    sg += gy[off + i];
                    sgh += gy[off + i] * (*xhat)[off + i];
                }
                if (g.requires_grad(gamma))
                    g.grad_slot(gamma)[c] += sgh;
                if (g.requires_grad(beta))
                    g.grad_slot(beta)[c] += sg;
                if (g.requires_grad(x)) {
                    Tensor<T>& gx = g.grad_slot(x);
                    const T sc = gam[c] * (*inv_std)[c];
                    for (std::size_t i = 0; i < plane; ++i)
                        gx[off + i] += sc * gy[off + i];
                }
            }
    });
}

template <class T>
Var identity_op(Graph<T>& g, Var x)
{
    Var out{g.size()};
    return g.record(g.value(x), g.requires_grad(x),
                    [&g, x, out] { accumulate(g.grad_slot(x), g.grad_slot(out)); });
}

template <class T>
Var zero_op(Graph<T>& g, Var x)
{
    return g.constant(Tensor<T>(g.value(x).shape()));
}

template <class T>
Var relu(Graph<T>& g, Var x)
{
    Tensor<T> y = g.value(x);
    for (auto& v : y.values())
        v = std::max(v, T(0));
    Var out{g.size()};
    return g.record(std::move(y), g.requires_grad(x), [&g, x, out] {
        const Tensor<T>& xv = g.value(x);
        const Tensor<T>& gy = g.grad_slot(out);
        Tensor<T>& gx = g.grad_slot(x);
        for (std::size_t i = 0; i < xv.size(); ++i)
            if (xv[i] > T(0))
                gx[i] += gy[i];
    });
}

template <class T>
Var add(Graph<T>& g, std::span<const Var> xs)
{
    if (xs.empty())
        throw ContractError("add: no operands");
    Tensor<T> y = g.value(xs[0]);
    bool rg = g.requires_grad(xs[0]);
    for (std::size_t k = 1; k < xs.size(); ++k) {
        const Tensor<T>& v = g.value(xs[k]);
        if (v.shape() != y.shape())
            throw DimensionError("add: shape mismatch " + v.shape().str() + " vs " + y.shape().str());
        accumulate(y, v);
        rg = rg || g.requires_grad(xs[k]);
    }
    std::vector<Var> in(xs.begin(), xs.end());
    Var out{g.size()};
    return g.record(std::move(y), rg, [&g, in, out] {
        for (Var v : in)
            if (g.requires_grad(v))
                accumulate(g.grad_slot(v), g.grad_slot(out));
    });
}

template <class T>
Var mul(Graph<T>& g, Var a, Var b)
{
    const Tensor<T>& av = g.value(a);
    const Tensor<T>& bv = g.value(b);
    if (av.shape() != bv.shape())
        throw DimensionError("mul: shape mismatch");
    Tensor<T> y(av.shape());
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = av[i] * bv[i];
    Var out{g.size()};
    return g.record(std::move(y), any_grad(g, {a, b}), [&g, a, b, out] {
        const Tensor<T>& gy = g.grad_slot(out);
        if (g.requires_grad(a)) {
            Tensor<T>& ga = g.grad_slot(a);
            const Tensor<T>& bv2 = g.value(b);
            for (std::size_t i = 0; i < gy.size(); ++i)
                ga[i] += gy[i] * bv2[i];
        }
        if (g.requires_grad(b)) {
            Tensor<T>& gb = g.grad_slot(b);
            const Tensor<T>& av2 = g.value(a);
            for (std::size_t i = 0; i < gy.size(); ++i)
                gb[i] += gy[i] * av2[i];
        }
    });
}

template <class T>
Var scale(Graph<T>& g, Var x, T factor)
{
    Tensor<T> y = g.value(x);
    for (auto& v : y.values())
        v *= factor;
    Var out{g.size()};
    return g.record(std::move(y), g.requires_grad(x), [&g, x, factor, out] {
        const Tensor<T>& gy = g.grad_slot(out);
        Tensor<T>& gx = g.grad_slot(x);
        for (std::size_t i = 0; i < gy.size(); ++i)
            gx[i] += factor * gy[i];
    });
}

template <class T>
Var sum(Graph<T>& g, Var x)
{
    T total = 0;
    for (T v : g.value(x).values())
        total += v;
    Var out{g.size()};
    return g.record(Tensor<T>(Shape{1, 1, 1, 1}, total), g.requires_grad(x), [&g, x, out] {
        const T gy = g.grad_slot(out)[0];
        for (auto& v : g.grad_slot(x).values())
            v += gy;
    });
}

template <class T>
Var softmax(Graph<T>& g, Var logits)
{
    const Tensor<T>& a = g.value(logits);
    Tensor<T> p(a.shape());
    const T mx = *std::max_element(a.values().begin(), a.values().end());
    T z = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        p[i] = std::exp(a[i] - mx);
        z += p[i];
    }
    for (auto& v : p.values())
        v /= z;
    Var out{g.size()};
    return g.record(std::move(p), g.requires_grad(logits), [&g, logits, out] {
        const Tensor<T>& pv = g.value(out);
        const Tensor<T>& gy = g.grad_slot(out);
        T dot = 0;
        for (std::size_t i = 0; i < pv.size(); ++i)
            dot += pv[i] * gy[i];
        Tensor<T>& ga = g.grad_slot(logits);
        for (std::size_t i = 0; i < pv.size(); ++i)
            ga[i] += pv[i] * (gy[i] - dot);
    });
}

template <class T>
Var weighted_sum(Graph<T>& g, std::span<const Var> xs, Var weights, std::span<const std::size_t> slots)
{
    if (xs.size() != slots.size() || xs.empty())
        throw ContractError("weighted_sum: operand/slot count mismatch");
    const Tensor<T>& w = g.value(weights);
    Tensor<T> y(g.value(xs[0]).shape());
    bool rg = g.requires_grad(weights);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const Tensor<T>& v = g.value(xs[k]);
        if (v.shape() != y.shape())
            throw DimensionError("weighted_sum: shape mismatch");
        const T wk = w[slots[k]];
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += wk * v[i];
        rg = rg || g.requires_grad(xs[k]);
    }
    std::vector<Var> in(xs.begin(), xs.end());
    std::vector<std::size_t> sl(slots.begin(), slots.end());
    Var out{g.size()};
    return g.record(std::move(y), rg, [&g, in, sl, weights, out] {
        const Tensor<T>& gy = g.grad_slot(out);
        const Tensor<T>& wv = g.value(weights);
        for (std::size_t k = 0; k < in.size(); ++k) {
            if (g.requires_grad(in[k])) {
                Tensor<T>& gx = g.grad_slot(in[k]);
                const T wk = wv[sl[k]];
                for (std::size_t i = 0; i < gy.size(); ++i)
                    gx[i] += wk * gy[i];
            }
            if (g.requires_grad(weights)) {
                const Tensor<T>& xv = g.value(in[k]);
                T dot = 0;
                for (std::size_t i = 0; i < gy.size(); ++i)
                    dot += xv[i] * gy[i];
                g.grad_slot(weights)[sl[k]] += dot;
            }
        }
    });
}

template <class T>
Var global_avg_pool(Graph<T>& g, Var x)
{
    const Tensor<T>& xv = g.value(x);
    const Shape s = xv.shape();
    const std::size_t plane = s.plane();
    Tensor<T> y(Shape{s.n, s.c, 1, 1});
    for (std::size_t p = 0; p < s.n * s.c; ++p) {
        T acc = 0;
        for (std::size_t i = 0; i < plane; ++i)
            acc += xv[p * plane + i];
        y[p] = acc / static_cast<T>(plane);
    }
    Var out{g.size()};
    return g.record(std::move(y), g.requires_grad(x), [&g, x, out, plane] {
        const Tensor<T>& gy = g.grad_slot(out);
        Tensor<T>& gx = g.grad_slot(x);
        for (std::size_t p = 0; p < gy.size(); ++p) {
            const T share = gy[p] / static_cast<T>(plane);
            for (std::size_t i = 0; i < plane; ++i)
                gx[p * plane + i] += share;
        }
    });
}

template <class T>
Var linear(Graph<T>& g, Var x, Var weight, Var bias)
{
    const Tensor<T>& xv = g.value(x);
    const Tensor<T>& wv = g.value(weight);
    const Tensor<T>& bv = g.value(bias);
    const std::size_t N = xv.shape().n;
    const std::size_t F = xv.size() / std::max<std::size_t>(N, 1);
    const std::size_t O = wv.shape().n;
    if (wv.size() != O * F)
        throw DimensionError("linear: weight " + wv.shape().str() + " does not accept " + std::to_string(F) +
                             " features");
    if (bv.size() != O)
        throw DimensionError("linear: bias length mismatch");
    Tensor<T> y(Shape{N, O, 1, 1});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            T acc = bv[o];
            for (std::size_t f = 0; f < F; ++f)
                acc += wv[o * F + f] * xv[n * F + f];
            y[n * O + o] = acc;
        }
    Var out{g.size()};
    return g.record(std::move(y), any_grad(g, {x, weight, bias}), [&g, x, weight, bias, out, N, F, O] {
        const Tensor<T>& gy = g.grad_slot(out);
        const Tensor<T>& xv2 = g.value(x);
        const Tensor<T>& wv2 = g.value(weight);
        if (g.requires_grad(x)) {
            Tensor<T>& gx = g.grad_slot(x);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t o = 0; o < O; ++o)
                    for (std::size_t f = 0; f < F; ++f)
                        gx[n * F + f] += gy[n * O + o] * wv2[o * F + f];
        }
        if (g.requires_grad(weight)) {
            Tensor<T>& gw = g.grad_slot(weight);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t o = 0; o < O; ++o)
                    for (std::size_t f = 0; f < F; ++f)
                        gw[o * F + f] += gy[n * O + o] * xv2[n * F + f];
        }
        if (g.requires_grad(bias)) {
            Tensor<T>& gb = g.grad_slot(bias);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t o = 0; o < O; ++o)
                    gb[o] += gy[n * O + o];
        }
    });
}

template <class T>
Var slice_batch(Graph<T>& g, Var x, std::size_t begin, std::size_t count)
{
    const Tensor<T>& xv = g.value(x);
    const Shape s = xv.shape();
    if (begin + count > s.n)
        throw DimensionError("slice_batch: range exceeds batch");
    const std::size_t per = s.c * s.h * s.w;
    Tensor<T> y(Shape{count, s.c, s.h, s.w});
    std::copy_n(xv.data() + begin * per, count * per, y.data());
    Var out{g.size()};
    return g.record(std::move(y), g.requires_grad(x), [&g, x, out, begin, per] {
        const Tensor<T>& gy = g.grad_slot(out);
        Tensor<T>& gx = g.grad_slot(x);
        for (std::size_t i = 0; i < gy.size(); ++i)
            gx[begin * per + i] += gy[i];
    });
}

template <class T>
Var cross_entropy(Graph<T>& g, Var logits, std::span<const std::size_t> labels)
{
    const Tensor<T>& z = g.value(logits);
    const std::size_t N = z.shape().n;
    const std::size_t K = z.size() / std::max<std::size_t>(N, 1);
    if (labels.size() != N)
        throw DimensionError("cross_entropy: label count does not match batch");
    auto probs = std::make_shared<std::vector<T>>(N * K);
    T loss = 0;
    for (std::size_t n = 0; n < N; ++n) {
        if (labels[n] >= K)
            throw std::out_of_range("cross_entropy: label " + std::to_string(labels[n]) + " outside [0," +
                                    std::to_string(K) + ")");
        const T* row = z.data() + n * K;
        const T mx = *std::max_element(row, row + K);
        T zsum = 0;
        for (std::size_t k = 0; k < K; ++k)
            zsum += std::exp(row[k] - mx);
        const T logz = mx + std::log(zsum);
        for (std::size_t k = 0; k < K; ++k)
            (*probs)[n * K + k] = std::exp(row[k] - logz);
        loss += logz - row[labels[n]];
    }
    loss /= static_cast<T>(N);
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    Var out{g.size()};
    return g.record(Tensor<T>(Shape{1, 1, 1, 1}, loss), g.requires_grad(logits), [&g, logits, out, probs, lab, N, K] {
        const T gy = g.grad_slot(out)[0] / static_cast<T>(N);
        Tensor<T>& gz = g.grad_slot(logits);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < K; ++k)
                gz[n * K + k] += gy * ((*probs)[n * K + k] - (k == lab[n] ? T(1) : T(0)));
    });
}

template <class T>
Var triplet_loss(Graph<T>& g, Var anchor, Var positive, Var negative, T margin)
{
    const Tensor<T>& a = g.value(anchor);
    const Tensor<T>& p = g.value(positive);
    const Tensor<T>& q = g.value(negative);
    if (a.shape() != p.shape() || a.shape() != q.shape())
        throw DimensionError("triplet_loss: embedding shapes differ");
    const std::size_t N = a.shape().n;
    const std::size_t D = a.size() / std::max<std::size_t>(N, 1);
    auto active = std::make_shared<std::vector<char>>(N, 0);
    T loss = 0;
    for (std::size_t n = 0; n < N; ++n) {
        T dap = 0;
        T dan = 0;
        for (std::size_t d = 0; d < D; ++d) {
            const T e1 = a[n * D + d] - p[n * D + d];
            const T e2 = a[n * D + d] - q[n * D + d];
            dap += e1 * e1;
            dan += e2 * e2;
        }
        const T h = dap - dan + margin;
        if (h > 0) {
            loss += h;
            (*active)[n] = 1;
        }
    }
    loss /= static_cast<T>(N);
    Var out{g.size()};
    return g.record(Tensor<T>(Shape{1, 1, 1, 1}, loss), any_grad(g, {anchor, positive, negative}),
                    [&g, anchor, positive, negative, out, active, N, D] {
                        const T gy = g.grad_slot(out)[0] / static_cast<T>(N);
                        const Tensor<T>& av = g.value(anchor);
                        const Tensor<T>& pv = g.value(positive);
                        const Tensor<T>& qv = g.value(negative);
                        for (std::size_t n = 0; n < N; ++n) {
                            if (!(*active)[n])
                                continue;
                            for (std::size_t d = 0; d < D; ++d) {
                                const std::size_t i = n * D + d;
                                // d/da = 2(a-p) - 2(a-n) = 2(n-p)
                                if (g.requires_grad(anchor))
                                    g.grad_slot(anchor)[i] += gy * T(2) * (qv[i] - pv[i]);
                                if (g.requires_grad(positive))
                                    g.grad_slot(positive)[i] += gy * T(-2) * (av[i] - pv[i]);
                                if (g.requires_grad(negative))
                                    g.grad_slot(negative)[i] += gy * T(2) * (av[i] - qv[i]);
                            }
                        }
                    });
}

template <class T>
void sgd_step(std::span<Parameter<T>* const> params, T lr, T momentum, std::vector<Tensor<T>>& velocity)
{
    if (velocity.size() != params.size())
        velocity.assign(params.size(), Tensor<T>());
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter<T>& p = *params[k];
        if (!p.trainable)
            continue;
        if (p.grad.shape() != p.value.shape())
            p.zero_grad();
        Tensor<T>& v = velocity[k];
        if (v.shape() != p.value.shape())
            v = Tensor<T>(p.value.shape());
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            v[i] = momentum * v[i] + p.grad[i];
            p.value[i] -= lr * v[i];
        }
    }
}

template <class T>
void Sgd<T>::step(std::span<Parameter<T>* const> params)
{
    sgd_step(params, lr_, momentum_, velocity_);
}

#define IRISNAS_INSTANTIATE(T)                                                                                   \
    template class Graph<T>;                                                                                     \
    template class Sgd<T>;                                                                                       \
    template Var conv2d<T>(Graph<T>&, Var, Var, int);                                                           \
    template Var pool2d<T>(Graph<T>&, Var, kernels::PoolKind, int);                                             \
    template Var batchnorm<T>(Graph<T>&, Var, Var, Var, RunningStats<T>*, const BatchNormArgs<T>&);             \
    template Var identity_op<T>(Graph<T>&, Var);                                                                \
    template Var zero_op<T>(Graph<T>&, Var);                                                                    \
    template Var relu<T>(Graph<T>&, Var);                                                                       \
    template Var add<T>(Graph<T>&, std::span<const Var>);                                                       \
    template Var mul<T>(Graph<T>&, Var, Var);                                                                   \
    template Var scale<T>(Graph<T>&, Var, T);                                                                   \
    template Var sum<T>(Graph<T>&, Var);                                                                        \
    template Var softmax<T>(Graph<T>&, Var);                                                                    \
    template Var weighted_sum<T>(Graph<T>&, std::span<const Var>, Var, std::span<const std::size_t>);           \
    template Var global_avg_pool<T>(Graph<T>&, Var);                                                            \
    template Var linear<T>(Graph<T>&, Var, Var, Var);                                                           \
    template Var slice_batch<T>(Graph<T>&, Var, std::size_t, std::size_t);                                      \
    template Var cross_entropy<T>(Graph<T>&, Var, std::span<const std::size_t>);                                \
    template Var triplet_loss<T>(Graph<T>&, Var, Var, Var, T);                                                  \
    template void sgd_step<T>(std::span<Parameter<T>* const>, T, T, std::vector<Tensor<T>>&);

IRISNAS_INSTANTIATE(float)
IRISNAS_INSTANTIATE(double)

#undef IRISNAS_INSTANTIATE

}  // namespace irisnas
