#pragma once

// Parallel forward/backward kernels. Each loop nest is partitioned over
// independent outputs so results do not depend on the thread count.

#include "irisnas/tensor.hpp"

#include <cstdint>
#include <vector>

namespace irisnas::kernels {

enum class PoolKind { max, avg };

/// Zero padding so that the output keeps the input's spatial extent.
inline int same_pad(int kernel, int dilation) { return dilation * (kernel - 1) / 2; }
/// Top/left offset of a stride-1 pooling window of size k.
inline int pool_offset(int k) { return (k - 1) / 2; }

/// y = x (*) kernel, stride 1, "same" zero padding, no bias.
template <class T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, int dilation, Tensor<T>& y);

/// Accumulates input and kernel gradients. Either output may be null.
template <class T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, int dilation, const Tensor<T>& grad_y,
                     Tensor<T>* grad_x, Tensor<T>* grad_kernel);

/// Stride-1 pooling; `argmax` receives the flat input index chosen for each output (max only).
template <class T>
void pool2d_forward(const Tensor<T>& x, PoolKind kind, int k, Tensor<T>& y, std::vector<std::uint32_t>* argmax);

template <class T>
void pool2d_backward(const Tensor<T>& x, PoolKind kind, int k, const Tensor<T>& grad_y,
                     const std::vector<std::uint32_t>* argmax, Tensor<T>& grad_x);

/// Training-mode batch norm. Fills the normalized activations and per-channel
/// batch mean / inverse standard deviation for the backward pass.
template <class T>
void batchnorm_train_forward(const Tensor<T>& x, const std::vector<T>& gamma, const std::vector<T>& beta, T eps,
                             Tensor<T>& y, Tensor<T>& xhat, std::vector<T>& mean, std::vector<T>& inv_std,
                             std::vector<T>& var);

template <class T>
void batchnorm_train_backward(const Tensor<T>& xhat, const std::vector<T>& gamma, const std::vector<T>& inv_std,
                              const Tensor<T>& grad_y, Tensor<T>* grad_x, std::vector<T>* grad_gamma,
                              std::vector<T>* grad_beta);

}  // namespace irisnas::kernels
