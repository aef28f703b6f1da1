#include "irisnas/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irisnas::kernels {

namespace {

struct Tap {
    std::ptrdiff_t dy;
    std::ptrdiff_t dx;
    std::size_t y0, y1;  // output rows [y0, y1) whose input row is in range
    std::size_t x0, x1;
};

Tap make_tap(std::ptrdiff_t dy, std::ptrdiff_t dx, std::size_t h, std::size_t w)
{
    const auto H = static_cast<std::ptrdiff_t>(h);
    const auto W = static_cast<std::ptrdiff_t>(w);
    Tap t{dy, dx, 0, 0, 0, 0};
    t.y0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(-dy, 0, H));
    t.y1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(H - dy, 0, H));
    t.x0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(-dx, 0, W));
    t.x1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(W - dx, 0, W));
    return t;
}

std::vector<Tap> conv_taps(const Shape& ks, int dilation, std::size_t h, std::size_t w)
{
    const int ph = same_pad(static_cast<int>(ks.h), dilation);
    const int pw = same_pad(static_cast<int>(ks.w), dilation);
    std::vector<Tap> taps;
    taps.reserve(ks.h * ks.w);
    for (std::size_t ky = 0; ky < ks.h; ++ky)
        for (std::size_t kx = 0; kx < ks.w; ++kx)
            taps.push_back(make_tap(static_cast<std::ptrdiff_t>(ky) * dilation - ph,
                                    static_cast<std::ptrdiff_t>(kx) * dilation - pw, h, w));
    return taps;
}

void check_conv(const Shape& xs, const Shape& ks, int dilation)
{
    if (dilation < 1)
        throw DimensionError("conv2d: dilation must be >= 1");
    if (ks.c != xs.c)
        throw DimensionError("conv2d: kernel expects " + std::to_string(ks.c) + " input channels, got " +
                             std::to_string(xs.c));
}

}  // namespace

namespace {

// Gathers the receptive field of every output pixel: col[t][p] for tap
// t = (ci, ky, kx) and pixel p, zero where the tap falls in the padding.
template <class T>
void im2col(const T* in, std::size_t channels, std::size_t h, std::size_t w, const std::vector<Tap>& taps,
            T* col)
{
    const std::size_t plane = h * w;
    const auto Wd = static_cast<std::ptrdiff_t>(w);
    std::size_t row = 0;
    for (std::size_t ci = 0; ci < channels; ++ci) {
        const T* src = in + ci * plane;
        for (const Tap& tp : taps) {
            T* dst = col + row * plane;
            std::fill(dst, dst + plane, T(0));
            for (std::size_t yy = tp.y0; yy < tp.y1; ++yy) {
                const T* irow = src + (static_cast<std::ptrdiff_t>(yy) + tp.dy) * Wd;
                T* orow = dst + yy * w;
                for (std::size_t xx = tp.x0; xx < tp.x1; ++xx)
                    orow[xx] = irow[static_cast<std::ptrdiff_t>(xx) + tp.dx];
            }
            ++row;
        }
    }
}

// Scatter-adds col back onto the input planes (adjoint of im2col).
template <class T>
void col2im_add(const T* col, std::size_t channels, std::size_t h, std::size_t w, const std::vector<Tap>& taps,
                T* in)
{
    const std::size_t plane = h * w;
    const auto Wd = static_cast<std::ptrdiff_t>(w);
    std::size_t row = 0;
    for (std::size_t ci = 0; ci < channels; ++ci) {
        T* dst = in + ci * plane;
        for (const Tap& tp : taps) {
            const T* src = col + row * plane;
            for (std::size_t yy = tp.y0; yy < tp.y1; ++yy) {
                T* irow = dst + (static_cast<std::ptrdiff_t>(yy) + tp.dy) * Wd;
                const T* crow = src + yy * w;
                for (std::size_t xx = tp.x0; xx < tp.x1; ++xx)
                    irow[static_cast<std::ptrdiff_t>(xx) + tp.dx] += crow[xx];
            }
            ++row;
        }
    }
}

}  // namespace

template <class T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, int dilation, Tensor<T>& y)
{
    const Shape& xs = x.shape();
    const Shape& ks = kernel.shape();
    check_conv(xs, ks, dilation);
    const Shape ys{xs.n, ks.n, xs.h, xs.w};
    if (y.shape() != ys)
        y = Tensor<T>(ys);
    const auto taps = conv_taps(ks, dilation, xs.h, xs.w);
    const std::size_t plane = xs.plane();
    const std::size_t depth = xs.c * taps.size();
    const auto batch = static_cast<std::ptrdiff_t>(xs.n);

#pragma omp parallel
    {
        std::vector<T> col(depth * plane);
#pragma omp for schedule(static)
        for (std::ptrdiff_t nn = 0; nn < batch; ++nn) {
            const auto n = static_cast<std::size_t>(nn);
            im2col(x.data() + n * xs.c * plane, xs.c, xs.h, xs.w, taps, col.data());
            for (std::size_t co = 0; co < ks.n; ++co) {
                T* __restrict out = y.data() + (n * ks.n + co) * plane;
                std::fill(out, out + plane, T(0));
                const T* kw = kernel.data() + co * depth;
                for (std::size_t r = 0; r < depth; ++r) {
                    const T wv = kw[r];
                    const T* __restrict c = col.data() + r * plane;
#pragma omp simd
                    for (std::size_t p = 0; p < plane; ++p)
                        out[p] += wv * c[p];
                }
            }
        }
    }
}

template <class T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, int dilation, const Tensor<T>& grad_y,
                     Tensor<T>* grad_x, Tensor<T>* grad_kernel)
{
    const Shape& xs = x.shape();
    const Shape& ks = kernel.shape();
    check_conv(xs, ks, dilation);
    const auto taps = conv_taps(ks, dilation, xs.h, xs.w);
    const std::size_t plane = xs.plane();
    const std::size_t depth = xs.c * taps.size();
    const std::size_t kernel_size = ks.n * depth;
    const auto batch = static_cast<std::ptrdiff_t>(xs.n);
    // Per-sample kernel gradients, summed afterwards in sample order.
    std::vector<T> partial(grad_kernel ? xs.n * kernel_size : 0);

#pragma omp parallel
    {
        std::vector<T> col(depth * plane);
#pragma omp for schedule(static)
        for (std::ptrdiff_t nn = 0; nn < batch; ++nn) {
            const auto n = static_cast<std::size_t>(nn);
            const T* gy = grad_y.data() + n * ks.n * plane;
            if (grad_kernel) {
                im2col(x.data() + n * xs.c * plane, xs.c, xs.h, xs.w, taps, col.data());
                T* gk = partial.data() + n * kernel_size;
                for (std::size_t co = 0; co < ks.n; ++co) {
                    const T* __restrict g = gy + co * plane;
                    for (std::size_t r = 0; r < depth; ++r) {
                        const T* __restrict c = col.data() + r * plane;
                        T acc = 0;
#pragma omp simd reduction(+ : acc)
                        for (std::size_t p = 0; p < plane; ++p)
                            acc += g[p] * c[p];
                        gk[co * depth + r] = acc;
                    }
                }
            }
            if (grad_x) {
                std::fill(col.begin(), col.end(), T(0));
                for (std::size_t co = 0; co < ks.n; ++co) {
                    const T* __restrict g = gy + co * plane;
                    const T* kw = kernel.data() + co * depth;
                    for (std::size_t r = 0; r < depth; ++r) {
                        const T wv = kw[r];
                        T* __restrict c = col.data() + r * plane;
#pragma omp simd
                        for (std::size_t p = 0; p < plane; ++p)
                            c[p] += wv * g[p];
                    }
                }
                col2im_add(col.data(), xs.c, xs.h, xs.w, taps, grad_x->data() + n * xs.c * plane);
            }
        }
    }

    if (grad_kernel)
        for (std::size_t n = 0; n < xs.n; ++n) {
            const T* src = partial.data() + n * kernel_size;
            for (std::size_t i = 0; i < kernel_size; ++i)
                (*grad_kernel)[i] += src[i];
        }
}

template <class T>
void pool2d_forward(const Tensor<T>& x, PoolKind kind, int k, Tensor<T>& y, std::vector<std::uint32_t>* argmax)
{
    if (k < 1)
        throw DimensionError("pool2d: window must be >= 1");
    const Shape& xs = x.shape();
    if (y.shape() != xs)
        y = Tensor<T>(xs);
    if (kind == PoolKind::max && argmax)
        argmax->assign(xs.numel(), 0);
    const auto H = static_cast<std::ptrdiff_t>(xs.h);
    const auto W = static_cast<std::ptrdiff_t>(xs.w);
    const std::ptrdiff_t off = pool_offset(k);
    const auto planes = static_cast<std::ptrdiff_t>(xs.n * xs.c);
    const std::size_t plane = xs.plane();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < planes; ++p) {
        const std::size_t base = static_cast<std::size_t>(p) * plane;
        const T* in = x.data() + base;
        T* out = y.data() + base;
        for (std::ptrdiff_t yy = 0; yy < H; ++yy) {
            const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(yy - off, 0);
            const std::ptrdiff_t r1 = std::min<std::ptrdiff_t>(yy - off + k, H);
            for (std::ptrdiff_t xx = 0; xx < W; ++xx) {
                const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(xx - off, 0);
                const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(xx - off + k, W);
                const std::size_t o = static_cast<std::size_t>(yy * W + xx);
                if (kind == PoolKind::max) {
                    T best = -std::numeric_limits<T>::infinity();
                    std::size_t besti = 0;
                    for (std::ptrdiff_t r = r0; r < r1; ++r)
                        for (std::ptrdiff_t c = c0; c < c1; ++c) {
                            const auto i = static_cast<std::size_t>(r * W + c);
                            if (in[i] > best) {
                                best = in[i];
                                besti = i;
                            }
                        }
                    out[o] = best;
                    if (argmax)
                        (*argmax)[base + o] = static_cast<std::uint32_t>(base + besti);
                } else {
                    T sum = 0;
                    for (std::ptrdiff_t r = r0; r < r1; ++r)
                        for (std::ptrdiff_t c = c0; c < c1; ++c)
                            sum += in[r * W + c];
                    out[o] = sum / static_cast<T>((r1 - r0) * (c1 - c0));
                }
            }
        }
    }
}

template <class T>
void pool2d_backward(const Tensor<T>& x, PoolKind kind, int k, const Tensor<T>& grad_y,
                     const std::vector<std::uint32_t>* argmax, Tensor<T>& grad_x)
{
    const Shape& xs = x.shape();
    const auto H = static_cast<std::ptrdiff_t>(xs.h);
    const auto W = static_cast<std::ptrdiff_t>(xs.w);
    const std::ptrdiff_t off = pool_offset(k);
    const auto planes = static_cast<std::ptrdiff_t>(xs.n * xs.c);
    const std::size_t plane = xs.plane();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < planes; ++p) {
        const std::size_t base = static_cast<std::size_t>(p) * plane;
        const T* g = grad_y.data() + base;
        if (kind == PoolKind::max) {
            // Each output routes to an input in the same plane, so planes are independent.
            for (std::size_t o = 0; o < plane; ++o)
                grad_x[(*argmax)[base + o]] += g[o];
            continue;
        }
        T* gin = grad_x.data() + base;
        for (std::ptrdiff_t yy = 0; yy < H; ++yy) {
            const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(yy - off, 0);
            const std::ptrdiff_t r1 = std::min<std::ptrdiff_t>(yy - off + k, H);
            for (std::ptrdiff_t xx = 0; xx < W; ++xx) {
                const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(xx - off, 0);
                const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(xx - off + k, W);
                const T share = g[yy * W + xx] / static_cast<T>((r1 - r0) * (c1 - c0));
                for (std::ptrdiff_t r = r0; r < r1; ++r)
                    for (std::ptrdiff_t c = c0; c < c1; ++c)
                        gin[r * W + c] += share;
            }
        }
    }
}

template <class T>
void batchnorm_train_forward(const Tensor<T>& x, const std::vector<T>& gamma, const std::vector<T>& beta, T eps,
                             Tensor<T>& y, Tensor<T>& xhat, std::vector<T>& mean, std::vector<T>& inv_std,
                             std::vector<T>& var)
{
    const Shape& xs = x.shape();
    if (gamma.size() != xs.c || beta.size() != xs.c)
        throw DimensionError("batchnorm: affine parameters do not match channel count");
    if (y.shape() != xs)
        y = Tensor<T>(xs);
    if (xhat.shape() != xs)
        xhat = Tensor<T>(xs);
    mean.assign(xs.c, 0);
    inv_std.assign(xs.c, 0);
    var.assign(xs.c, 0);
    const std::size_t plane = xs.plane();
    const T count = static_cast<T>(xs.n * plane);
    const auto channels = static_cast<std::ptrdiff_t>(xs.c);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t cc = 0; cc < channels; ++cc) {
        const auto c = static_cast<std::size_t>(cc);
        T sum = 0;
        for (std::size_t n = 0; n < xs.n; ++n) {
            const T* in = x.data() + (n * xs.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
                sum += in[i];
        }
        const T mu = sum / count;
        T sq = 0;
        for (std::size_t n = 0; n < xs.n; ++n) {
            const T* in = x.data() + (n * xs.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const T d = in[i] - mu;
                sq += d * d;
            }
        }
        const T v = sq / count;
        const T is = T(1) / std::sqrt(v + eps);
        mean[c] = mu;
        var[c] = v;
        inv_std[c] = is;
        for (std::size_t n = 0; n < xs.n; ++n) {
            const std::size_t off = (n * xs.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const T h = (x[off + i] - mu) * is;
                xhat[off + i] = h;
                y[off + i] = gamma[c] * h + beta[c];
            }
        }
    }
}

template <class T>
void batchnorm_train_backward(const Tensor<T>& xhat, const std::vector<T>& gamma, const std::vector<T>& inv_std,
                              const Tensor<T>& grad_y, Tensor<T>* grad_x, std::vector<T>* grad_gamma,
                              std::vector<T>* grad_beta)
{
    const Shape& xs = xhat.shape();
    const std::size_t plane = xs.plane();
    const T count = static_cast<T>(xs.n * plane);
    const auto channels = static_cast<std::ptrdiff_t>(xs.c);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t cc = 0; cc < channels; ++cc) {
        const auto c = static_cast<std::size_t>(cc);
        T sum_g = 0;
        T sum_gh = 0;
        for (std::size_t n = 0; n < xs.n; ++n) {
            const std::size_t off = (n * xs.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_g += grad_y[off + i];
                sum_gh += grad_y[off + i] * xhat[off + i];
            }
        }
        if (grad_gamma)
            (*grad_gamma)[c] += sum_gh;
        if (grad_beta)
            (*grad_beta)[c] += sum_g;
        if (!grad_x)
            continue;
        const T scale = gamma[c] * inv_std[c];
        const T mg = sum_g / count;
        const T mgh = sum_gh / count;
        for (std::size_t n = 0; n < xs.n; ++n) {
            const std::size_t off = (n * xs.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
                (*grad_x)[off + i] += scale * (grad_y[off + i] - mg - xhat[off + i] * mgh);
        }
    }
}

#define IRISNAS_INSTANTIATE(T)                                                                                      \
    template void conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, int, Tensor<T>&);                          \
    template void conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, int, const Tensor<T>&, Tensor<T>*,        \
                                     Tensor<T>*);                                                                  \
    template void pool2d_forward<T>(const Tensor<T>&, PoolKind, int, Tensor<T>&, std::vector<std::uint32_t>*);    \
    template void pool2d_backward<T>(const Tensor<T>&, PoolKind, int, const Tensor<T>&,                            \
                                     const std::vector<std::uint32_t>*, Tensor<T>&);                               \
    template void batchnorm_train_forward<T>(const Tensor<T>&, const std::vector<T>&, const std::vector<T>&, T,    \
                                             Tensor<T>&, Tensor<T>&, std::vector<T>&, std::vector<T>&,             \
                                             std::vector<T>&);                                                     \
    template void batchnorm_train_backward<T>(const Tensor<T>&, const std::vector<T>&, const std::vector<T>&,      \
                                              const Tensor<T>&, Tensor<T>*, std::vector<T>*, std::vector<T>*);

IRISNAS_INSTANTIATE(float)
IRISNAS_INSTANTIATE(double)

#undef IRISNAS_INSTANTIATE

}  // namespace irisnas::kernels
