#pragma once

// Constrained bi-level architecture search: alternating weight descent on the
// training loss, architecture descent on the validation loss, and projection
// of the logits onto the FLOPs/parameter budget.

#include "irisnas/autograd.hpp"
#include "irisnas/cost_model.hpp"
#include "irisnas/dataset.hpp"
#include "irisnas/supernet.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace irisnas {

enum class LossKind { cross_entropy, triplet };

struct SearchConfig {
    Budget budget;
    double xi = 0.0;
    double lr_w = 0.2;
    double lr_alpha = 3.0;
    double alpha_l1 = 1e-3;
    double momentum = 0.9;
    double margin = 1.0;
    std::size_t epochs = 8;
    /// Leading epochs that train weights only; logits stay put.
    std::size_t warmup_epochs = 2;
    std::size_t batch_size = 32;
    /// Minibatch steps per epoch; 0 means one full pass over the training split.
    std::size_t steps_per_epoch = 20;
    std::size_t patience = 10;
    double min_delta = 1e-4;
    LossKind loss = LossKind::cross_entropy;
    std::uint64_t seed = 0;
    double projection_tol = 1e-6;

    void validate() const;
};

class InfeasibleBudget : public std::runtime_error {
public:
    InfeasibleBudget(const std::string& what, ExpectedCost minimum)
        : std::runtime_error(what), minimum_(minimum)
    {
    }
    ExpectedCost minimum() const { return minimum_; }

private:
    ExpectedCost minimum_;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A minibatch. For triplet batches images are stacked [anchors; positives; negatives].
template <class T>
struct Batch {
    Tensor<T> images;
    std::vector<std::size_t> labels;
    bool triplet = false;
};

template <class T>
Var batch_loss(Graph<T>& g, Network<T>& net, const Batch<T>& batch, LossKind loss, double margin,
               const ForwardOptions& opt);

/// One SGD step on the weights; logits are untouched. Returns the batch loss.
template <class T>
double weight_step(Network<T>& net, const Batch<T>& train, Sgd<T>& opt, LossKind loss, double margin);

struct ArchStepResult {
    double val_loss = 0.0;
    std::vector<std::vector<double>> gradient;  // per mixed edge
};

/// Descends the logits along the validation-loss gradient. With xi > 0 the
/// gradient is taken at w - xi*grad_w L_train and corrected by the implicit
/// term via central differences.
template <class T>
ArchStepResult arch_step(Network<T>& net, const Batch<T>& train, const Batch<T>& val, double lr_alpha, double xi,
                         double alpha_l1, LossKind loss, double margin);

struct ProjectionResult {
    double lambda = 0.0;
    bool changed = false;
    ExpectedCost cost;
};

/// Shifts logits by -lambda * (op cost / edge max cost) with one global lambda
/// found by bisection. Feasible inputs come back untouched. Throws
/// InfeasibleBudget if even the cheapest mixture is over budget.
ProjectionResult project_logits(const OpCost& base, std::vector<EdgeCandidates>& edges, const Budget& budget,
                                double tol = 1e-6);

template <class T>
ProjectionResult project(Network<T>& net, const Budget& budget, double tol = 1e-6);

/// Downgrades the costliest edge to its best cheaper candidate until the
/// discrete cost fits. `logits` are keyed by edge as in SupernetState.
DiscreteArchitecture repair(DiscreteArchitecture a, const SupernetState& state, const Budget& budget);

/// True when a path of edges links node 0 to the output node.
bool reaches_output(const DiscreteArchitecture& a);

/// If the output is cut off from the stem, adds the most probable missing
/// path (non-zero ops that still fit the budget, identity otherwise). Nodes
/// with outputs but no input get their best affordable input edge or lose
/// their outputs; edges that cannot influence the output are dropped.
DiscreteArchitecture connect(DiscreteArchitecture a, const SupernetState& state, const Budget& budget);

struct TraceRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double flops = 0.0;
    double params = 0.0;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

std::string trace_csv(const std::vector<TraceRow>& trace);

struct SearchResult {
    DiscreteArchitecture architecture;
    Network<float> supernet;
    std::vector<TraceRow> trace;
};

SearchResult run_search(const SearchConfig& cfg, const NetworkConfig& net_cfg, const LabeledImages& train,
                        const LabeledImages& val);

struct TrainResult {
    Network<float> network;
    std::vector<TraceRow> trace;
};

/// Trains a discrete architecture from scratch. The learning rate follows a
/// cosine decay from lr_w to zero over the epochs.
TrainResult train_final(const DiscreteArchitecture& a, const LabeledImages& train, const SearchConfig& cfg);

/// Uniformly samples one candidate per edge until the architecture fits the budget.
DiscreteArchitecture random_architecture(const NetworkConfig& cfg, const Budget& budget, std::mt19937_64& rng,
                                         std::size_t max_tries = 100000);

/// Evaluation-mode outputs, [N, outputs].
std::vector<std::vector<float>> predict(Network<float>& net, const Tensor<float>& images,
                                        std::size_t batch_size = 64);
double accuracy(Network<float>& net, const LabeledImages& data);
double mean_loss(Network<float>& net, const LabeledImages& data, LossKind loss, double margin,
                 std::uint64_t seed);

/// Draws a training batch from `data` following `loss`.
Batch<float> sample_batch(const LabeledImages& data, const std::vector<std::size_t>& order, std::size_t begin,
                          std::size_t size, LossKind loss, std::mt19937_64& rng);

}  // namespace irisnas
