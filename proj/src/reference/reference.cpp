#include "irisnas/reference.hpp"

#include <cmath>
#include <limits>

namespace irisnas::reference {

Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& kernel, int dilation, OpCounter* counter)
{
    const Shape& xs = x.shape();
    const Shape& ks = kernel.shape();
    if (ks.c != xs.c)
        throw DimensionError("reference conv2d: channel mismatch");
    const long H = static_cast<long>(xs.h);
    const long W = static_cast<long>(xs.w);
    const long ph = dilation * (static_cast<long>(ks.h) - 1) / 2;
    const long pw = dilation * (static_cast<long>(ks.w) - 1) / 2;
    Tensor<double> y(Shape{xs.n, ks.n, xs.h, xs.w});
    for (std::size_t n = 0; n < xs.n; ++n)
        for (std::size_t co = 0; co < ks.n; ++co)
            for (long oy = 0; oy < H; ++oy)
                for (long ox = 0; ox < W; ++ox) {
                    double acc = 0.0;
                    for (std::size_t ci = 0; ci < xs.c; ++ci)
                        for (std::size_t ky = 0; ky < ks.h; ++ky)
                            for (std::size_t kx = 0; kx < ks.w; ++kx) {
                                const long iy = oy + static_cast<long>(ky) * dilation - ph;
                                const long ix = ox + static_cast<long>(kx) * dilation - pw;
                                const bool inside = iy >= 0 && iy < H && ix >= 0 && ix < W;
                                const double v = inside ? x.at(n, ci, static_cast<std::size_t>(iy),
                                                                static_cast<std::size_t>(ix))
                                                        : 0.0;
                                acc += kernel.at(co, ci, ky, kx) * v;
                                if (counter) {
                                    ++counter->mul;
                                    ++counter->add;
                                }
                            }
                    y.at(n, co, static_cast<std::size_t>(oy), static_cast<std::size_t>(ox)) = acc;
                }
    return y;
}

Tensor<double> channel_affine(const Tensor<double>& x, const std::vector<double>& scale,
                              const std::vector<double>& shift, OpCounter* counter)
{
    const Shape& s = x.shape();
    Tensor<double> y(s);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t i = 0; i < s.h; ++i)
                for (std::size_t j = 0; j < s.w; ++j) {
                    y.at(n, c, i, j) = scale[c] * x.at(n, c, i, j) + shift[c];
                    if (counter) {
                        ++counter->mul;
                        ++counter->add;
                    }
                }
    return y;
}

Tensor<double> pool2d(const Tensor<double>& x, kernels::PoolKind kind, int k, OpCounter* counter)
{
    const Shape& s = x.shape();
    const long H = static_cast<long>(s.h);
    const long W = static_cast<long>(s.w);
    const long off = (k - 1) / 2;
    Tensor<double> y(s);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (long oy = 0; oy < H; ++oy)
                for (long ox = 0; ox < W; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    double sum = 0.0;
                    int valid = 0;
                    for (long dy = 0; dy < k; ++dy)
                        for (long dx = 0; dx < k; ++dx) {
                            const long iy = oy - off + dy;
                            const long ix = ox - off + dx;
                            if (counter) {
                                if (kind == kernels::PoolKind::max)
                                    ++counter->cmp;
                                else
                                    ++counter->add;
                            }
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W)
                                continue;
                            const double v = x.at(n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                            best = v > best ? v : best;
                            sum += v;
                            ++valid;
                        }
                    y.at(n, c, static_cast<std::size_t>(oy), static_cast<std::size_t>(ox)) =
                        kind == kernels::PoolKind::max ? best : sum / valid;
                }
    return y;
}

Tensor<double> batchnorm_train(const Tensor<double>& x, const std::vector<double>& gamma,
                               const std::vector<double>& beta, double eps)
{
    const Shape& s = x.shape();
    Tensor<double> y(s);
    const double count = static_cast<double>(s.n * s.h * s.w);
    for (std::size_t c = 0; c < s.c; ++c) {
        double mean = 0.0;
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t i = 0; i < s.h; ++i)
                for (std::size_t j = 0; j < s.w; ++j)
                    mean += x.at(n, c, i, j);
        mean /= count;
        double var = 0.0;
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t i = 0; i < s.h; ++i)
                for (std::size_t j = 0; j < s.w; ++j)
                    var += (x.at(n, c, i, j) - mean) * (x.at(n, c, i, j) - mean);
        var /= count;
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t i = 0; i < s.h; ++i)
                for (std::size_t j = 0; j < s.w; ++j)
                    y.at(n, c, i, j) = gamma[c] * (x.at(n, c, i, j) - mean) / std::sqrt(var + eps) + beta[c];
    }
    return y;
}

Tensor<double> relu(const Tensor<double>& x, OpCounter* counter)
{
    Tensor<double> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = x[i] > 0.0 ? x[i] : 0.0;
        if (counter)
            ++counter->cmp;
    }
    return y;
}

Tensor<double> global_avg_pool(const Tensor<double>& x, OpCounter* counter)
{
    const Shape& s = x.shape();
    Tensor<double> y(Shape{s.n, s.c, 1, 1});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s.h; ++i)
                for (std::size_t j = 0; j < s.w; ++j) {
                    acc += x.at(n, c, i, j);
                    if (counter)
                        ++counter->add;
                }
            y.at(n, c, 0, 0) = acc / static_cast<double>(s.h * s.w);
        }
    return y;
}

Tensor<double> linear(const Tensor<double>& x, const Tensor<double>& weight, const Tensor<double>& bias,
                      OpCounter* counter)
{
    const std::size_t N = x.shape().n;
    const std::size_t F = x.size() / N;
    const std::size_t O = weight.shape().n;
    if (weight.size() != O * F || bias.size() != O)
        throw DimensionError("reference linear: dimension mismatch");
    Tensor<double> y(Shape{N, O, 1, 1});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            double acc = 0.0;
            for (std::size_t f = 0; f < F; ++f) {
                acc += weight[o * F + f] * x[n * F + f];
                if (counter) {
                    ++counter->mul;
                    ++counter->add;
                }
            }
            acc += bias[o];
            if (counter)
                ++counter->add;
            y[n * O + o] = acc;
        }
    return y;
}

}  // namespace irisnas::reference
