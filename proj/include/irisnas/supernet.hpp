#pragma once

// Flat DAG of L nodes. Node 0 is the stem output; node j sums one operation
// output per incoming edge i -> j; node L-1 feeds the head. A mixed edge
// weighs every candidate by softmax(logits), a fixed edge runs one operation.

#include "irisnas/architecture.hpp"
#include "irisnas/autograd.hpp"
#include "irisnas/checkpoint.hpp"
#include "irisnas/cost_model.hpp"
#include "irisnas/ops.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace irisnas {

/// conv (no bias) followed by batch norm.
template <class T>
struct ConvUnit {
    Parameter<T> kernel;
    Parameter<T> gamma;
    Parameter<T> beta;
    RunningStats<T> stats;
    int dilation = 1;
};

template <class T>
struct ArchEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    std::vector<OpKind> candidates;
    bool mixed = true;
    Parameter<T> logits;                          // [1, |candidates|, 1, 1]
    std::vector<std::optional<ConvUnit<T>>> units;  // one slot per candidate
};

struct ForwardOptions {
    bool training = true;
    bool update_stats = true;
    /// Sum each node's predecessors from last to first.
    bool reverse_predecessors = false;
};

struct NetworkConfig {
    std::size_t nodes = 4;
    std::size_t channels = 8;
    HeadKind head = HeadKind::softmax;
    std::size_t outputs = 32;
    std::size_t input_h = 8;
    std::size_t input_w = 64;
    OperationSet ops = OperationSet::plain();
};

template <class T>
class Network {
public:
    /// Every edge i<j mixes the whole operation set.
    static Network supernet(const NetworkConfig& cfg, std::uint64_t seed);
    /// One fixed operation per listed edge.
    static Network from_architecture(const DiscreteArchitecture& a, std::uint64_t seed);

    Var forward(Graph<T>& g, Var input, const ForwardOptions& opt);

    const NetworkConfig& config() const { return cfg_; }
    std::vector<ArchEdge<T>>& edges() { return edges_; }
    const std::vector<ArchEdge<T>>& edges() const { return edges_; }
    ArchEdge<T>* find_edge(std::size_t from, std::size_t to);

    std::vector<Parameter<T>*> weights();
    std::vector<Parameter<T>*> arch_parameters();
    void set_weights_trainable(bool trainable);
    void zero_grad();

    /// Per-edge candidate costs and logits (mixed edges only).
    std::vector<EdgeCandidates> cost_view() const;
    OpCost base() const;
    ExpectedCost expected_cost() const;

    /// argmax per edge; zero removes the edge; ties go to the cheaper op, then set order.
    DiscreteArchitecture discretize() const;
    /// Architecture of a fixed network.
    DiscreteArchitecture architecture() const;

    SupernetState state() const;
    /// Copies logits from a saved search state; the edge structure must match.
    void load_state(const SupernetState& s);

    std::vector<CheckpointEntry> checkpoint() const;
    /// Throws FormatError if a tensor is missing or mis-shaped.
    void load_checkpoint(const std::vector<CheckpointEntry>& entries);

private:
    Network() = default;
    void init_edge(ArchEdge<T>& e, std::vector<OpKind> candidates, bool mixed, std::mt19937_64& rng);

    NetworkConfig cfg_;
    ConvUnit<T> stem_;
    std::vector<ArchEdge<T>> edges_;
    Parameter<T> head_gamma_;  // batch norm on the pooled features
    Parameter<T> head_beta_;
    RunningStats<T> head_stats_;
    Parameter<T> head_weight_;
    Parameter<T> head_bias_;

    void init_head(std::size_t channels, std::size_t outputs, std::mt19937_64& rng);
};

/// Runs one candidate on x. `unit` must be set for convolutions.
template <class T>
Var apply_op(Graph<T>& g, OpKind op, ConvUnit<T>* unit, Var x, const ForwardOptions& opt);

/// sum_o softmax(logits)_o * o(x), or the single op of a fixed edge.
template <class T>
Var mixed_op_forward(Graph<T>& g, ArchEdge<T>& edge, Var x, const ForwardOptions& opt);

std::vector<double> edge_softmax(std::span<const double> logits);

/// Candidate index kept by discretization: highest logit, then lower cost, then set order.
std::size_t select_candidate(std::span<const double> logits, std::span<const OpCost> costs);

}  // namespace irisnas
