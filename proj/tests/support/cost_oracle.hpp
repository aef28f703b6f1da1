#pragma once

// Operation counts measured by running the naive loop nests with counters.

#include "irisnas/cost_model.hpp"

namespace irisnas::testing {

/// FLOPs observed while executing the op once on one sample; params are the
/// sizes of the tensors the op would own.
OpCost counted_op_cost(OpKind op, std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t w);

/// ReLU, GAP, folded batch norm and the affine output layer.
OpCost counted_head_cost(std::size_t channels, std::size_t outputs, std::size_t h, std::size_t w);

}  // namespace irisnas::testing
