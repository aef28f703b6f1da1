#include "irisnas/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace irisnas {

void SearchConfig::validate() const
{
    if (!(lr_w > 0.0) || !(lr_alpha >= 0.0))
        throw std::invalid_argument("learning rates must be positive");
    if (xi < 0.0)
        throw std::invalid_argument("xi must be non-negative");
    if (epochs < 1)
        throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1)
        throw std::invalid_argument("batch size must be >= 1");
    if (!(budget.flops > 0.0) || !(budget.params > 0.0))
        throw std::invalid_argument("budgets must be positive or unbounded");
}

template <class T>
Var batch_loss(Graph<T>& g, Network<T>& net, const Batch<T>& batch, LossKind loss, double margin,
               const ForwardOptions& opt)
{
    Var x = g.input(batch.images, false);
    Var out = net.forward(g, x, opt);
    if (loss == LossKind::cross_entropy)
        return cross_entropy<T>(g, out, batch.labels);
    const std::size_t n = batch.images.shape().n / 3;
    if (n == 0 || n * 3 != batch.images.shape().n)
        throw ContractError("triplet batch must hold anchors, positives and negatives");
    return triplet_loss(g, slice_batch(g, out, 0, n), slice_batch(g, out, n, n), slice_batch(g, out, 2 * n, n),
                        static_cast<T>(margin));
}

namespace {

template <class T>
struct TrainableGuard {
    std::vector<Parameter<T>*> params;
    std::vector<bool> saved;

    explicit TrainableGuard(std::vector<Parameter<T>*> p) : params(std::move(p))
    {
        for (auto* q : params)
            saved.push_back(q->trainable);
    }
    ~TrainableGuard()
    {
        for (std::size_t k = 0; k < params.size(); ++k)
            params[k]->trainable = saved[k];
    }
    void set(bool v)
    {
        for (auto* q : params)
            q->trainable = v;
    }
    void restore_into(bool mask_with)
    {
        for (std::size_t k = 0; k < params.size(); ++k)
            params[k]->trainable = saved[k] && mask_with;
    }
};

template <class T>
bool finite_grads(const std::vector<Parameter<T>*>& ps)
{
    for (auto* p : ps)
        if (!p->grad.all_finite())
            return false;
    return true;
}

}  // namespace

template <class T>
double weight_step(Network<T>& net, const Batch<T>& train, Sgd<T>& opt, LossKind loss, double margin)
{
    TrainableGuard<T> arch(net.arch_parameters());
    arch.set(false);
    auto weights = net.weights();
    for (auto* p : weights)
        p->zero_grad();
    Graph<T> g;
    Var l = batch_loss(g, net, train, loss, margin, ForwardOptions{true, true, false});
    const double value = static_cast<double>(g.value(l)[0]);
    if (!std::isfinite(value))
        throw TrainingDiverged("weight step: non-finite training loss");
    g.backward(l);
    if (!finite_grads(weights))
        throw TrainingDiverged("weight step: non-finite weight gradient");
    opt.step(weights);
    return value;
}

namespace {

template <class T>
struct Gradients {
    double loss = 0.0;
    std::vector<std::vector<double>> alpha;
    std::vector<Tensor<T>> weights;  // aligned with Network::weights(), empty tensors if frozen
};

// One forward/backward pass. Weight gradients only flow into parameters that
// are trainable in `weight_mask`.
template <class T>
Gradients<T> gradients(Network<T>& net, const Batch<T>& batch, LossKind loss, double margin, bool want_alpha,
                       bool want_weights, const std::vector<bool>& weight_mask)
{
    auto weights = net.weights();
    auto arch = net.arch_parameters();
    for (std::size_t k = 0; k < weights.size(); ++k)
        weights[k]->trainable = want_weights && weight_mask[k];
    for (auto* a : arch)
        a->trainable = want_alpha;
    net.zero_grad();
    Graph<T> g;
    Var l = batch_loss(g, net, batch, loss, margin, ForwardOptions{true, false, false});
    Gradients<T> out;
    out.loss = static_cast<double>(g.value(l)[0]);
    g.backward(l);
    if (want_alpha)
        for (auto* a : arch) {
            std::vector<double> v(a->grad.size());
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] = static_cast<double>(a->grad[i]);
            out.alpha.push_back(std::move(v));
        }
    if (want_weights)
        for (std::size_t k = 0; k < weights.size(); ++k)
            out.weights.push_back(weight_mask[k] ? weights[k]->grad : Tensor<T>());
    return out;
}

}  // namespace

template <class T>
ArchStepResult arch_step(Network<T>& net, const Batch<T>& train, const Batch<T>& val, double lr_alpha, double xi,
                         double alpha_l1, LossKind loss, double margin)
{
    TrainableGuard<T> wguard(net.weights());
    TrainableGuard<T> aguard(net.arch_parameters());
    auto weights = net.weights();
    auto arch = net.arch_parameters();
    const std::vector<bool>& mask = wguard.saved;

    ArchStepResult result;
    if (xi == 0.0) {
        auto gv = gradients(net, val, loss, margin, true, false, mask);
        result.val_loss = gv.loss;
        result.gradient = std::move(gv.alpha);
    } else {
        std::vector<Tensor<T>> w0;
        for (auto* p : weights)
            w0.push_back(p->value);
        auto axpy = [&](const std::vector<Tensor<T>>& dir, double step) {
            for (std::size_t k = 0; k < weights.size(); ++k) {
                if (!mask[k] || dir[k].empty())
                    continue;
                for (std::size_t i = 0; i < w0[k].size(); ++i)
                    weights[k]->value[i] = static_cast<T>(static_cast<double>(w0[k][i]) + step * dir[k][i]);
            }
        };
        // Virtual step w' = w - xi * grad_w L_train(w, alpha).
        auto gt = gradients(net, train, loss, margin, false, true, mask);
        axpy(gt.weights, -xi);
        auto gv = gradients(net, val, loss, margin, true, true, mask);
        result.val_loss = gv.loss;
        result.gradient = gv.alpha;
        double norm2 = 0.0;
        for (const auto& t : gv.weights)
            for (T v : t.values())
                norm2 += static_cast<double>(v) * static_cast<double>(v);
        if (norm2 > 0.0) {
            const double eps = 0.01 / std::sqrt(norm2);
            axpy(gv.weights, eps);
            auto gp = gradients(net, train, loss, margin, true, false, mask);
            axpy(gv.weights, -eps);
            auto gm = gradients(net, train, loss, margin, true, false, mask);
            for (std::size_t e = 0; e < result.gradient.size(); ++e)
                for (std::size_t o = 0; o < result.gradient[e].size(); ++o)
                    result.gradient[e][o] -= xi * (gp.alpha[e][o] - gm.alpha[e][o]) / (2.0 * eps);
        }
        for (std::size_t k = 0; k < weights.size(); ++k)
            weights[k]->value = w0[k];
    }

    for (std::size_t e = 0; e < arch.size(); ++e)
        for (std::size_t o = 0; o < result.gradient[e].size(); ++o) {
            const double a = static_cast<double>(arch[e]->value[o]);
            double& gr = result.gradient[e][o];
            gr += alpha_l1 * (a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0));
            if (!std::isfinite(gr))
                throw TrainingDiverged("architecture step: non-finite gradient");
        }
    if (!std::isfinite(result.val_loss))
        throw TrainingDiverged("architecture step: non-finite validation loss");
    for (std::size_t e = 0; e < arch.size(); ++e)
        for (std::size_t o = 0; o < result.gradient[e].size(); ++o)
            arch[e]->value[o] = static_cast<T>(static_cast<double>(arch[e]->value[o]) - lr_alpha * result.gradient[e][o]);
    for (auto* p : weights)
        p->zero_grad();
    return result;
}

namespace {

enum class Resource { flops, params };

double resource_of(const ExpectedCost& c, Resource r)
{
    return r == Resource::flops ? c.flops : c.params;
}

double resource_of(const OpCost& c, Resource r)
{
    return static_cast<double>(r == Resource::flops ? c.flops : c.params);
}

// Costs normalized by the edge's most expensive candidate.
std::vector<std::vector<double>> normalized_costs(const std::vector<EdgeCandidates>& edges, Resource r)
{
    std::vector<std::vector<double>> out;
    for (const auto& e : edges) {
        double mx = 0.0;
        for (const auto& c : e.costs)
            mx = std::max(mx, resource_of(c, r));
        std::vector<double> n(e.costs.size(), 0.0);
        if (mx > 0.0)
            for (std::size_t o = 0; o < n.size(); ++o)
                n[o] = resource_of(e.costs[o], r) / mx;
        out.push_back(std::move(n));
    }
    return out;
}

std::vector<EdgeCandidates> shifted(const std::vector<EdgeCandidates>& edges,
                                    const std::vector<std::vector<double>>& norm, double lambda)
{
    std::vector<EdgeCandidates> out = edges;
    if (lambda == 0.0)
        return out;
    for (std::size_t e = 0; e < out.size(); ++e)
        for (std::size_t o = 0; o < out[e].logits.size(); ++o)
            out[e].logits[o] = edges[e].logits[o] - lambda * norm[e][o];
    return out;
}

// Cost when every edge puts all mass on its cheapest candidates.
ExpectedCost minimum_cost(const OpCost& base, const std::vector<EdgeCandidates>& edges, Resource r)
{
    ExpectedCost c{static_cast<double>(base.flops), static_cast<double>(base.params)};
    for (const auto& e : edges) {
        std::size_t best = 0;
        for (std::size_t o = 1; o < e.costs.size(); ++o)
            if (resource_of(e.costs[o], r) < resource_of(e.costs[best], r))
                best = o;
        c.flops += static_cast<double>(e.costs[best].flops);
        c.params += static_cast<double>(e.costs[best].params);
    }
    return c;
}

double solve_lambda(const OpCost& base, const std::vector<EdgeCandidates>& edges, Resource r, double limit,
                    double tol)
{
    const auto norm = normalized_costs(edges, r);
    auto cost_at = [&](double lambda) { return resource_of(expected_cost(base, shifted(edges, norm, lambda)), r); };
    const ExpectedCost floor_cost = minimum_cost(base, edges, r);
    if (resource_of(floor_cost, r) > limit * (1.0 + tol)) {
        std::ostringstream os;
        os << "budget infeasible: minimum achievable " << (r == Resource::flops ? "FLOPs " : "params ")
           << resource_of(floor_cost, r) << " exceeds limit " << limit;
        throw InfeasibleBudget(os.str(), floor_cost);
    }
    // Aim for the exact limit; fall back to the tolerance band when the
    // limit is only reached asymptotically.
    double target = limit;
    double hi = 1.0;
    while (cost_at(hi) > target) {
        hi *= 2.0;
        if (hi > 1e6) {
            target = limit * (1.0 + tol);
            if (cost_at(hi) > target)
                throw InfeasibleBudget("projection did not converge", floor_cost);
            break;
        }
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cost_at(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

}  // namespace

ProjectionResult project_logits(const OpCost& base, std::vector<EdgeCandidates>& edges, const Budget& budget,
                                double tol)
{
    ProjectionResult res;
    res.cost = expected_cost(base, edges);
    for (int round = 0; round < 16; ++round) {
        const auto report = check_constraints(res.cost, budget, tol);
        if (report.feasible)
            return res;
        double best_lambda = -1.0;
        Resource best = Resource::flops;
        for (const auto& v : report.violations) {
            const Resource r = v.resource == "flops" ? Resource::flops : Resource::params;
            const double lam = solve_lambda(base, edges, r, v.limit, tol);
            if (lam > best_lambda) {
                best_lambda = lam;
                best = r;
            }
        }
        edges = shifted(edges, normalized_costs(edges, best), best_lambda);
        res.lambda += best_lambda;
        res.changed = true;
        res.cost = expected_cost(base, edges);
        if (check_constraints(res.cost, budget, tol).feasible)
            return res;
    }
    if (!check_constraints(res.cost, budget, tol).feasible)
        throw InfeasibleBudget("projection failed to satisfy both budgets", res.cost);
    return res;
}

template <class T>
ProjectionResult project(Network<T>& net, const Budget& budget, double tol)
{
    auto view = net.cost_view();
    std::vector<std::size_t> mixed;
    std::vector<EdgeCandidates> edges;
    OpCost base = net.base();
    for (std::size_t k = 0; k < net.edges().size(); ++k) {
        if (net.edges()[k].mixed) {
            mixed.push_back(k);
            edges.push_back(view[k]);
        } else {
            base += view[k].costs.front();
        }
    }
    ProjectionResult res = project_logits(base, edges, budget, tol);
    if (!res.changed)
        return res;
    for (std::size_t m = 0; m < mixed.size(); ++m) {
        auto& logits = net.edges()[mixed[m]].logits.value;
        for (std::size_t o = 0; o < logits.size(); ++o)
            logits[o] = static_cast<T>(edges[m].logits[o]);
    }
    res.cost = net.expected_cost();
    // Storage rounding can leave the cost a hair above the limit; nudge until it fits.
    for (int k = 0; k < 8 && !check_constraints(res.cost, budget, tol).feasible; ++k) {
        auto again = net.cost_view();
        std::vector<EdgeCandidates> sub;
        for (std::size_t m : mixed)
            sub.push_back(again[m]);
        Budget tighter{budget.flops * (1.0 - 1e-6), budget.params * (1.0 - 1e-6)};
        project_logits(base, sub, tighter, tol);
        for (std::size_t m = 0; m < mixed.size(); ++m) {
            auto& logits = net.edges()[mixed[m]].logits.value;
            for (std::size_t o = 0; o < logits.size(); ++o)
                logits[o] = static_cast<T>(sub[m].logits[o]);
        }
        res.cost = net.expected_cost();
    }
    return res;
}

DiscreteArchitecture repair(DiscreteArchitecture a, const SupernetState& state, const Budget& budget)
{
    auto cost_of = [&](OpKind op) { return op_cost(op, a.channels, a.channels, a.input_h, a.input_w); };
    for (;;) {
        const auto report = check_constraints(discrete_cost(a), budget);
        if (report.feasible)
            return a;
        const Resource r = report.violations.front().resource == "flops" ? Resource::flops : Resource::params;
        std::size_t worst = a.edges.size();
        double worst_cost = 0.0;
        for (std::size_t k = 0; k < a.edges.size(); ++k) {
            const double c = resource_of(cost_of(a.edges[k].op), r);
            if (c > worst_cost) {
                worst_cost = c;
                worst = k;
            }
        }
        if (worst == a.edges.size())
            throw InfeasibleBudget("budget infeasible even with every edge removed",
                                   ExpectedCost{static_cast<double>(base_cost(a).flops),
                                                static_cast<double>(base_cost(a).params)});
        EdgeChoice& e = a.edges[worst];
        const OperationSet& ops = state.ops.size() ? state.ops : OperationSet(std::vector<OpKind>(
                                                                    kAllOps.begin(), kAllOps.end()));
        auto it = state.logits.find({e.from, e.to});
        std::optional<std::size_t> pick;
        for (std::size_t o = 0; o < ops.size(); ++o) {
            if (resource_of(cost_of(ops[o]), r) >= worst_cost)
                continue;
            if (!pick) {
                pick = o;
                continue;
            }
            const double lo = it != state.logits.end() ? it->second[o] : 0.0;
            const double lb = it != state.logits.end() ? it->second[*pick] : 0.0;
            const bool cheaper = resource_of(cost_of(ops[o]), r) < resource_of(cost_of(ops[*pick]), r);
            if (lo > lb || (lo == lb && cheaper))
                pick = o;
        }
        if (!pick || ops[*pick] == OpKind::zero)
            a.edges.erase(a.edges.begin() + static_cast<std::ptrdiff_t>(worst));
        else
            e.op = ops[*pick];
    }
}

bool reaches_output(const DiscreteArchitecture& a)
{
    std::vector<bool> live(a.nodes, false);
    live[0] = true;
    // edges may come in any order; nodes are topologically numbered
    for (std::size_t j = 1; j < a.nodes; ++j)
        for (const auto& e : a.edges)
            if (e.to == j && live[e.from])
                live[j] = true;
    return live[a.nodes - 1];
}

namespace {

std::vector<bool> fed_from_input(const DiscreteArchitecture& a)
{
    std::vector<bool> live(a.nodes, false);
    live[0] = true;
    for (std::size_t j = 1; j < a.nodes; ++j)
        for (const auto& e : a.edges)
            if (e.to == j && live[e.from])
                live[j] = true;
    return live;
}

std::vector<bool> feeds_output(const DiscreteArchitecture& a)
{
    std::vector<bool> used(a.nodes, false);
    used[a.nodes - 1] = true;
    for (std::size_t i = a.nodes - 1; i-- > 0;)
        for (const auto& e : a.edges)
            if (e.from == i && used[e.to])
                used[i] = true;
    return used;
}

void sort_edges(DiscreteArchitecture& a)
{
    std::sort(a.edges.begin(), a.edges.end(),
              [](const EdgeChoice& x, const EdgeChoice& y) { return std::pair{x.to, x.from} < std::pair{y.to, y.from}; });
}

// Highest log-softmax non-zero op on (i, j) that fits in the remaining budget.
// An edge the supernet never held scores 0 with identity.
std::optional<std::pair<OpKind, double>> best_affordable(const DiscreteArchitecture& a, const SupernetState& state,
                                                         const Budget& budget, std::size_t i, std::size_t j)
{
    auto it = state.logits.find({i, j});
    if (it == state.logits.end())
        return std::pair{OpKind::identity, 0.0};
    const OpCost used = discrete_cost(a);
    const double slack_flops = budget.flops - static_cast<double>(used.flops);
    const double slack_params = budget.params - static_cast<double>(used.params);
    const auto p = edge_softmax(it->second);
    std::optional<std::pair<OpKind, double>> pick;
    for (std::size_t o = 0; o < state.ops.size(); ++o) {
        const OpKind op = state.ops[o];
        if (op == OpKind::zero)
            continue;
        const OpCost c = op_cost(op, a.channels, a.channels, a.input_h, a.input_w);
        if (static_cast<double>(c.flops) > slack_flops || static_cast<double>(c.params) > slack_params)
            continue;
        const double sc = std::log(std::max(p[o], 1e-300));
        if (!pick || sc > pick->second)
            pick = std::pair{op, sc};
    }
    return pick;
}

DiscreteArchitecture connect_output(DiscreteArchitecture a, const SupernetState& state, const Budget& budget)
{
    if (reaches_output(a))
        return a;
    // Longest path in the DAG; existing edges are free.
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> best(a.nodes, ninf);
    std::vector<std::size_t> prev(a.nodes, 0);
    std::vector<OpKind> via(a.nodes, OpKind::zero);
    best[0] = 0.0;
    for (std::size_t j = 1; j < a.nodes; ++j)
        for (std::size_t i = 0; i < j; ++i) {
            if (best[i] == ninf)
                continue;
            const EdgeChoice* have = a.find(i, j);
            std::pair<OpKind, double> step{OpKind::zero, 0.0};
            if (!have)
                step = best_affordable(a, state, budget, i, j).value_or(std::pair{OpKind::identity, std::log(1e-300)});
            if (best[i] + step.second > best[j]) {
                best[j] = best[i] + step.second;
                prev[j] = i;
                via[j] = have ? OpKind::zero : step.first;
            }
        }
    std::vector<EdgeChoice> added;
    for (std::size_t j = a.nodes - 1; j != 0; j = prev[j])
        if (via[j] != OpKind::zero)
            added.push_back({prev[j], j, via[j]});
    const DiscreteArchitecture before = a;
    a.edges.insert(a.edges.end(), added.begin(), added.end());
    if (!check_constraints(discrete_cost(a), budget).feasible) {
        // the individually affordable picks overshoot together; identities cost nothing
        a = before;
        for (auto e : added) {
            e.op = OpKind::identity;
            a.edges.push_back(e);
        }
    }
    sort_edges(a);
    return a;
}

}  // namespace

DiscreteArchitecture connect(DiscreteArchitecture a, const SupernetState& state, const Budget& budget)
{
    if (a.nodes < 2)
        return a;
    a = connect_output(std::move(a), state, budget);

    // A node with outputs but no input only emits constants; give it its best
    // affordable input, or cut its outputs.
    for (std::size_t j = 1; j + 1 < a.nodes; ++j) {
        const auto live = fed_from_input(a);
        const bool has_out = std::any_of(a.edges.begin(), a.edges.end(), [&](const EdgeChoice& e) { return e.from == j; });
        if (live[j] || !has_out)
            continue;
        std::optional<EdgeChoice> pick;
        double score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < j; ++i) {
            if (!live[i] || a.find(i, j))
                continue;
            const auto c = best_affordable(a, state, budget, i, j);
            if (c && c->second > score) {
                score = c->second;
                pick = EdgeChoice{i, j, c->first};
            }
        }
        if (pick)
            a.edges.push_back(*pick);
        else
            std::erase_if(a.edges, [&](const EdgeChoice& e) { return e.from == j; });
    }

    // Whatever cannot reach the output is computed for nothing.
    const auto live = fed_from_input(a);
    const auto used = feeds_output(a);
    std::erase_if(a.edges, [&](const EdgeChoice& e) { return !live[e.from] || !used[e.to]; });
    sort_edges(a);
    return a;
}

std::string trace_csv(const std::vector<TraceRow>& trace)
{
    std::ostringstream os;
    os.precision(9);
    os << "epoch,train_loss,val_loss,expected_flops,expected_params\n";
    for (const auto& r : trace)
        os << r.epoch << "," << r.train_loss << "," << r.val_loss << "," << r.flops << "," << r.params << "\n";
    return os.str();
}

Batch<float> sample_batch(const LabeledImages& data, const std::vector<std::size_t>& order, std::size_t begin,
                          std::size_t size, LossKind loss, std::mt19937_64& rng)
{
    const std::size_t n = data.size();
    size = std::min(size, n);
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < size; ++k)
        rows.push_back(order[(begin + k) % n]);
    Batch<float> b;
    if (loss == LossKind::cross_entropy) {
        b.images = gather(data.images, rows);
        for (std::size_t r : rows)
            b.labels.push_back(data.labels[r]);
        return b;
    }
    std::map<std::size_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < n; ++i)
        by_label[data.labels[i]].push_back(i);
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t r : rows) {
        const auto& same = by_label[data.labels[r]];
        std::size_t p = r;
        if (same.size() > 1) {
            std::uniform_int_distribution<std::size_t> pick(0, same.size() - 2);
            p = same[pick(rng)];
            if (p == r)
                p = same.back();
        }
        pos.push_back(p);
        std::size_t q = r;
        if (by_label.size() > 1) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            do
                q = pick(rng);
            while (data.labels[q] == data.labels[r]);
        }
        neg.push_back(q);
    }
    std::vector<std::size_t> all = rows;
    all.insert(all.end(), pos.begin(), pos.end());
    all.insert(all.end(), neg.begin(), neg.end());
    b.images = gather(data.images, all);
    for (std::size_t r : all)
        b.labels.push_back(data.labels[r]);
    b.triplet = true;
    return b;
}

std::vector<std::vector<float>> predict(Network<float>& net, const Tensor<float>& images, std::size_t batch_size)
{
    const std::size_t n = images.shape().n;
    std::vector<std::vector<float>> out;
    out.reserve(n);
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        std::vector<std::size_t> rows;
        for (std::size_t k = begin; k < std::min(n, begin + batch_size); ++k)
            rows.push_back(k);
        Graph<float> g;
        Var x = g.input(gather(images, rows), false);
        Var y = net.forward(g, x, ForwardOptions{false, false, false});
        const Tensor<float>& v = g.value(y);
        const std::size_t k = v.size() / rows.size();
        for (std::size_t r = 0; r < rows.size(); ++r)
            out.emplace_back(v.data() + r * k, v.data() + (r + 1) * k);
    }
    return out;
}

double accuracy(Network<float>& net, const LabeledImages& data)
{
    const auto out = predict(net, data.images);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto best = static_cast<std::size_t>(std::max_element(out[i].begin(), out[i].end()) - out[i].begin());
        hit += best == data.labels[i] ? 1 : 0;
    }
    return out.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(out.size());
}

double mean_loss(Network<float>& net, const LabeledImages& data, LossKind loss, double margin, std::uint64_t seed)
{
    if (data.size() == 0)
        return 0.0;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    double total = 0.0;
    std::size_t count = 0;
    const std::size_t chunk = 64;
    for (std::size_t begin = 0; begin < data.size(); begin += chunk) {
        const std::size_t size = std::min(chunk, data.size() - begin);
        Batch<float> b = sample_batch(data, order, begin, size, loss, rng);
        Graph<float> g;
        Var l = batch_loss(g, net, b, loss, margin, ForwardOptions{false, false, false});
        total += static_cast<double>(g.value(l)[0]) * static_cast<double>(size);
        count += size;
    }
    return total / static_cast<double>(count);
}

namespace {

std::size_t steps_for(const SearchConfig& cfg, std::size_t n)
{
    if (cfg.steps_per_epoch > 0)
        return cfg.steps_per_epoch;
    return (n + cfg.batch_size - 1) / cfg.batch_size;
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

}  // namespace

SearchResult run_search(const SearchConfig& cfg, const NetworkConfig& net_cfg_in, const LabeledImages& train,
                        const LabeledImages& val)
{
    cfg.validate();
    if (val.size() == 0)
        throw std::invalid_argument("search needs a non-empty validation split");
    if (train.size() == 0)
        throw std::invalid_argument("search needs a non-empty training split");
    NetworkConfig net_cfg = net_cfg_in;
    net_cfg.input_h = train.height();
    net_cfg.input_w = train.width();
    if (cfg.loss == LossKind::cross_entropy) {
        net_cfg.head = HeadKind::softmax;
        net_cfg.outputs = train.classes.size();
    } else {
        net_cfg.head = HeadKind::embedding;
    }

    SearchResult result{DiscreteArchitecture{}, Network<float>::supernet(net_cfg, cfg.seed), {}};
    Network<float>& net = result.supernet;
    const OpCost base = net.base();
    const auto base_report = check_constraints(base, cfg.budget);
    if (!base_report.feasible)
        throw InfeasibleBudget("budget is below the stem+head cost: " + base_report.describe(),
                               ExpectedCost{static_cast<double>(base.flops), static_cast<double>(base.params)});
    project(net, cfg.budget, cfg.projection_tol);

    Sgd<float> opt(static_cast<float>(cfg.lr_w), static_cast<float>(cfg.momentum));
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    std::size_t val_cursor = 0;
    std::vector<std::size_t> val_order = shuffled(val.size(), rng);
    const std::size_t steps = steps_for(cfg, train.size());

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = shuffled(train.size(), rng);
        double train_sum = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            Batch<float> tb = sample_batch(train, order, s * cfg.batch_size, cfg.batch_size, cfg.loss, rng);
            train_sum += weight_step(net, tb, opt, cfg.loss, cfg.margin);
            if (epoch <= cfg.warmup_epochs)
                continue;
            if (val_cursor >= val.size()) {
                val_order = shuffled(val.size(), rng);
                val_cursor = 0;
            }
            Batch<float> vb = sample_batch(val, val_order, val_cursor, cfg.batch_size, cfg.loss, rng);
            val_cursor += cfg.batch_size;
            arch_step(net, tb, vb, cfg.lr_alpha, cfg.xi, cfg.alpha_l1, cfg.loss, cfg.margin);
            project(net, cfg.budget, cfg.projection_tol);
        }
        TraceRow row;
        row.epoch = epoch;
        row.train_loss = train_sum / static_cast<double>(steps);
        row.val_loss = mean_loss(net, val, cfg.loss, cfg.margin, cfg.seed + epoch);
        const auto c = net.expected_cost();
        row.flops = c.flops;
        row.params = c.params;
        result.trace.push_back(row);
        if (epoch <= cfg.warmup_epochs)
            continue;
        if (row.val_loss < best_val - cfg.min_delta) {
            best_val = row.val_loss;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    const SupernetState final_state = net.state();
    result.architecture = connect(repair(net.discretize(), final_state, cfg.budget), final_state, cfg.budget);
    return result;
}

TrainResult train_final(const DiscreteArchitecture& a, const LabeledImages& train, const SearchConfig& cfg)
{
    if (train.size() == 0)
        throw std::invalid_argument("training split is empty");
    TrainResult result{Network<float>::from_architecture(a, cfg.seed), {}};
    Network<float>& net = result.network;
    Sgd<float> opt(static_cast<float>(cfg.lr_w), static_cast<float>(cfg.momentum));
    std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
    const std::size_t steps = steps_for(cfg, train.size());
    const OpCost cost = discrete_cost(a);
    const double pi = std::acos(-1.0);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double progress = static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs);
        opt.set_lr(static_cast<float>(cfg.lr_w * 0.5 * (1.0 + std::cos(pi * progress))));
        const auto order = shuffled(train.size(), rng);
        double sum = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            Batch<float> tb = sample_batch(train, order, s * cfg.batch_size, cfg.batch_size, cfg.loss, rng);
            sum += weight_step(net, tb, opt, cfg.loss, cfg.margin);
        }
        TraceRow row;
        row.epoch = epoch;
        row.train_loss = sum / static_cast<double>(steps);
        row.val_loss = std::numeric_limits<double>::quiet_NaN();
        row.flops = static_cast<double>(cost.flops);
        row.params = static_cast<double>(cost.params);
        result.trace.push_back(row);
    }
    return result;
}

DiscreteArchitecture random_architecture(const NetworkConfig& cfg, const Budget& budget, std::mt19937_64& rng,
                                         std::size_t max_tries)
{
    std::uniform_int_distribution<std::size_t> pick(0, cfg.ops.size() - 1);
    for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
        DiscreteArchitecture a;
        a.nodes = cfg.nodes;
        a.channels = cfg.channels;
        a.head = cfg.head;
        a.outputs = cfg.outputs;
        a.input_h = cfg.input_h;
        a.input_w = cfg.input_w;
        for (std::size_t j = 1; j < cfg.nodes; ++j)
            for (std::size_t i = 0; i < j; ++i) {
                const OpKind op = cfg.ops[pick(rng)];
                if (op != OpKind::zero)
                    a.edges.push_back({i, j, op});
            }
        if (reaches_output(a) && check_constraints(discrete_cost(a), budget).feasible)
            return a;
    }
    throw InfeasibleBudget("no random architecture met the budget", {});
}

template Var batch_loss<float>(Graph<float>&, Network<float>&, const Batch<float>&, LossKind, double,
                               const ForwardOptions&);
template Var batch_loss<double>(Graph<double>&, Network<double>&, const Batch<double>&, LossKind, double,
                                const ForwardOptions&);
template double weight_step<float>(Network<float>&, const Batch<float>&, Sgd<float>&, LossKind, double);
template double weight_step<double>(Network<double>&, const Batch<double>&, Sgd<double>&, LossKind, double);
template ArchStepResult arch_step<float>(Network<float>&, const Batch<float>&, const Batch<float>&, double, double,
                                         double, LossKind, double);
template ArchStepResult arch_step<double>(Network<double>&, const Batch<double>&, const Batch<double>&, double,
                                          double, double, LossKind, double);
template ProjectionResult project<float>(Network<float>&, const Budget&, double);
template ProjectionResult project<double>(Network<double>&, const Budget&, double);

}  // namespace irisnas
