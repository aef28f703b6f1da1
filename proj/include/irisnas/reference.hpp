#pragma once

// Serial naive-loop implementations kept as oracles for the parallel kernels
// and as instrumented op counters for the cost model. Not linked into the
// main library.

#include "irisnas/kernels.hpp"
#include "irisnas/tensor.hpp"

#include <cstdint>
#include <vector>

namespace irisnas::reference {

/// Arithmetic events observed while a loop nest runs. 1 MAC = mul + add.
struct OpCounter {
    std::uint64_t mul = 0;
    std::uint64_t add = 0;
    std::uint64_t cmp = 0;

    std::uint64_t flops() const { return mul + add + cmp; }
};

/// Direct convolution: every output element visits every kernel tap,
/// padded taps included (they multiply a zero).
Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& kernel, int dilation,
                      OpCounter* counter = nullptr);

/// Per-channel y = scale*x + shift (a folded batch norm).
Tensor<double> channel_affine(const Tensor<double>& x, const std::vector<double>& scale,
                              const std::vector<double>& shift, OpCounter* counter = nullptr);

/// Stride-1 k x k pooling; one comparison/add per window element, padded ones included.
Tensor<double> pool2d(const Tensor<double>& x, kernels::PoolKind kind, int k, OpCounter* counter = nullptr);

Tensor<double> batchnorm_train(const Tensor<double>& x, const std::vector<double>& gamma,
                               const std::vector<double>& beta, double eps);

Tensor<double> relu(const Tensor<double>& x, OpCounter* counter = nullptr);
Tensor<double> global_avg_pool(const Tensor<double>& x, OpCounter* counter = nullptr);
/// x: [N,F,1,1], weight [O,F,1,1], bias [1,O,1,1].
Tensor<double> linear(const Tensor<double>& x, const Tensor<double>& weight, const Tensor<double>& bias,
                      OpCounter* counter = nullptr);

}  // namespace irisnas::reference
