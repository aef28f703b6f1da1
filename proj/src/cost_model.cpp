#include "irisnas/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace irisnas {

OpCost op_cost(OpKind op, std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t w)
{
    if (c_in == 0 || c_out == 0 || h == 0 || w == 0)
        throw std::invalid_argument("op_cost: extents must be positive");
    const OpInfo& info = op_info(op);
    const std::uint64_t pixels = static_cast<std::uint64_t>(h) * w;
    if (info.is_conv) {
        // Dilation spreads the taps but does not change their number.
        const std::uint64_t taps = static_cast<std::uint64_t>(info.kernel_h) * info.kernel_w;
        const std::uint64_t weights = taps * c_in * c_out;
        return {2 * weights * pixels + 2 * pixels * c_out, weights + 2 * c_out};
    }
    if (info.is_pool) {
        const std::uint64_t window = static_cast<std::uint64_t>(info.pool_size) * info.pool_size;
        return {window * pixels * c_in, 0};
    }
    return {0, 0};
}

OpCost stem_cost(std::size_t channels, std::size_t h, std::size_t w)
{
    return op_cost(OpKind::conv3x3, 1, channels, h, w);
}

OpCost head_cost(std::size_t channels, std::size_t outputs, std::size_t h, std::size_t w)
{
    const std::uint64_t elems = static_cast<std::uint64_t>(channels) * h * w;
    const std::uint64_t dense = static_cast<std::uint64_t>(channels) * outputs;
    return {2 * elems + 2 * channels + 2 * dense + outputs, 2 * channels + dense + outputs};
}

OpCost base_cost(const DiscreteArchitecture& a)
{
    return stem_cost(a.channels, a.input_h, a.input_w) + head_cost(a.channels, a.outputs, a.input_h, a.input_w);
}

OpCost discrete_cost(const DiscreteArchitecture& a)
{
    OpCost total = base_cost(a);
    for (const auto& e : a.edges)
        total += op_cost(e.op, a.channels, a.channels, a.input_h, a.input_w);
    return total;
}

std::vector<double> softmax(std::span<const double> logits)
{
    std::vector<double> p(logits.size());
    if (logits.empty())
        return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (auto& v : p)
        v /= z;
    return p;
}

ExpectedCost expected_cost(const OpCost& base, std::span<const EdgeCandidates> edges)
{
    ExpectedCost total{static_cast<double>(base.flops), static_cast<double>(base.params)};
    for (const auto& e : edges) {
        if (e.logits.size() != e.costs.size())
            throw std::invalid_argument("expected_cost: logits/costs length mismatch");
        const auto p = softmax(e.logits);
        for (std::size_t o = 0; o < p.size(); ++o) {
            total.flops += p[o] * static_cast<double>(e.costs[o].flops);
            total.params += p[o] * static_cast<double>(e.costs[o].params);
        }
    }
    return total;
}

FeasibilityReport check_constraints(double flops, double params, const Budget& b, double rel_tol)
{
    FeasibilityReport r;
    auto check = [&](const char* name, double value, double limit) {
        if (std::isinf(limit))
            return;
        if (value > limit * (1.0 + rel_tol)) {
            r.feasible = false;
            r.violations.push_back({name, limit, value, limit - value});
        }
    };
    check("flops", flops, b.flops);
    check("params", params, b.params);
    return r;
}

std::string FeasibilityReport::describe() const
{
    if (feasible)
        return "feasible";
    std::ostringstream os;
    os << "infeasible:";
    for (const auto& v : violations)
        os << " " << v.resource << " " << v.value << " > " << v.limit << " (margin " << v.margin << ")";
    return os.str();
}

}  // namespace irisnas
