#pragma once

// Analytic FLOPs / parameter counts. Convention: one multiply-accumulate is
// two FLOPs, a folded batch norm is a per-element scale and shift, and a
// pooling window costs one operation per element.

#include "irisnas/architecture.hpp"
#include "irisnas/ops.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace irisnas {

struct OpCost {
    std::uint64_t flops = 0;
    std::uint64_t params = 0;

    OpCost& operator+=(const OpCost& o)
    {
        flops += o.flops;
        params += o.params;
        return *this;
    }
    friend OpCost operator+(OpCost a, const OpCost& b) { return a += b; }
    friend bool operator==(const OpCost&, const OpCost&) = default;
};

/// Softmax-weighted cost of a mixed network.
struct ExpectedCost {
    double flops = 0.0;
    double params = 0.0;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// FLOPs (K) and parameter (P) limits; infinity means unbounded.
struct Budget {
    double flops = kUnbounded;
    double params = kUnbounded;
};

/// Reference budget of the handcrafted IrisCode pipeline.
inline constexpr double kIrisCodeFlops = 0.5e6;
inline constexpr double kIrisCodeParams = 5.0;

/// Per-sample cost of one candidate operation. Throws std::invalid_argument on
/// non-positive extents.
OpCost op_cost(OpKind op, std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t w);

/// 3x3 conv from one input channel to `channels`, with batch norm.
OpCost stem_cost(std::size_t channels, std::size_t h, std::size_t w);
/// ReLU, global average pool, batch norm, then an affine map to `outputs`.
OpCost head_cost(std::size_t channels, std::size_t outputs, std::size_t h, std::size_t w);
/// Stem plus head: the cost of an architecture with every edge removed.
OpCost base_cost(const DiscreteArchitecture& a);

OpCost discrete_cost(const DiscreteArchitecture& a);

/// Candidate costs and logits of one mixed edge.
struct EdgeCandidates {
    std::vector<double> logits;
    std::vector<OpCost> costs;
};

std::vector<double> softmax(std::span<const double> logits);
ExpectedCost expected_cost(const OpCost& base, std::span<const EdgeCandidates> edges);

struct Violation {
    std::string resource;  // "flops" or "params"
    double limit = 0.0;
    double value = 0.0;
    double margin = 0.0;  // limit - value; negative when violated
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<Violation> violations;

    std::string describe() const;
};

FeasibilityReport check_constraints(double flops, double params, const Budget& b, double rel_tol = 0.0);
inline FeasibilityReport check_constraints(const OpCost& c, const Budget& b)
{
    return check_constraints(static_cast<double>(c.flops), static_cast<double>(c.params), b);
}
inline FeasibilityReport check_constraints(const ExpectedCost& c, const Budget& b, double rel_tol = 0.0)
{
    return check_constraints(c.flops, c.params, b, rel_tol);
}

}  // namespace irisnas
