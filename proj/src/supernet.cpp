#include "irisnas/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace irisnas {

namespace {

template <class T>
Parameter<T> normal_param(std::string name, Shape s, double stddev, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd(0.0, stddev);
    Tensor<T> t(s);
    for (auto& v : t.values())
        v = static_cast<T>(nd(rng));
    return Parameter<T>(std::move(name), std::move(t));
}

template <class T>
ConvUnit<T> make_conv(const std::string& prefix, const OpInfo& info, std::size_t c_in, std::size_t c_out,
                      std::mt19937_64& rng)
{
    const auto kh = static_cast<std::size_t>(info.kernel_h);
    const auto kw = static_cast<std::size_t>(info.kernel_w);
    ConvUnit<T> u;
    u.kernel = normal_param<T>(prefix + ".kernel", {c_out, c_in, kh, kw},
                               std::sqrt(2.0 / static_cast<double>(c_in * kh * kw)), rng);
    u.gamma = Parameter<T>(prefix + ".bn.gamma", Tensor<T>({1, c_out, 1, 1}, T(1)));
    u.beta = Parameter<T>(prefix + ".bn.beta", Tensor<T>({1, c_out, 1, 1}, T(0)));
    u.stats = RunningStats<T>(c_out);
    u.dilation = info.dilation;
    return u;
}

std::string edge_prefix(std::size_t from, std::size_t to)
{
    return "edge." + edge_key(from, to);
}

}  // namespace

std::vector<double> edge_softmax(std::span<const double> logits)
{
    return softmax(logits);
}

std::size_t select_candidate(std::span<const double> logits, std::span<const OpCost> costs)
{
    std::size_t best = 0;
    for (std::size_t o = 1; o < logits.size(); ++o) {
        if (logits[o] > logits[best]) {
            best = o;
        } else if (logits[o] == logits[best]) {
            const bool cheaper = costs[o].flops < costs[best].flops ||
                                 (costs[o].flops == costs[best].flops && costs[o].params < costs[best].params);
            if (cheaper)
                best = o;
        }
    }
    return best;
}

template <class T>
void Network<T>::init_edge(ArchEdge<T>& e, std::vector<OpKind> candidates, bool mixed, std::mt19937_64& rng)
{
    const std::string prefix = edge_prefix(e.from, e.to);
    e.candidates = std::move(candidates);
    e.mixed = mixed;
    e.units.assign(e.candidates.size(), std::nullopt);
    for (std::size_t o = 0; o < e.candidates.size(); ++o) {
        const OpInfo& info = op_info(e.candidates[o]);
        if (info.is_conv)
            e.units[o] = make_conv<T>(prefix + "." + std::string(info.name), info, cfg_.channels, cfg_.channels, rng);
    }
    if (mixed)
        e.logits = normal_param<T>(prefix + ".logits", {1, e.candidates.size(), 1, 1}, 1e-3, rng);
}

template <class T>
Network<T> Network<T>::supernet(const NetworkConfig& cfg, std::uint64_t seed)
{
    if (cfg.nodes < 2)
        throw std::invalid_argument("supernet needs at least 2 nodes");
    Network net;
    net.cfg_ = cfg;
    std::mt19937_64 rng(seed);
    net.stem_ = make_conv<T>("stem", op_info(OpKind::conv3x3), 1, cfg.channels, rng);
    for (std::size_t j = 1; j < cfg.nodes; ++j)
        for (std::size_t i = 0; i < j; ++i) {
            ArchEdge<T> e;
            e.from = i;
            e.to = j;
            net.init_edge(e, cfg.ops.ops(), true, rng);
            net.edges_.push_back(std::move(e));
        }
    net.init_head(cfg.channels, cfg.outputs, rng);
    return net;
}

template <class T>
Network<T> Network<T>::from_architecture(const DiscreteArchitecture& a, std::uint64_t seed)
{
    a.validate();
    Network net;
    net.cfg_.nodes = a.nodes;
    net.cfg_.channels = a.channels;
    net.cfg_.head = a.head;
    net.cfg_.outputs = a.outputs;
    net.cfg_.input_h = a.input_h;
    net.cfg_.input_w = a.input_w;
    std::mt19937_64 rng(seed);
    net.stem_ = make_conv<T>("stem", op_info(OpKind::conv3x3), 1, a.channels, rng);
    // Deterministic edge order regardless of file order.
    std::vector<EdgeChoice> sorted = a.edges;
    std::sort(sorted.begin(), sorted.end(),
              [](const EdgeChoice& l, const EdgeChoice& r) { return std::pair{l.to, l.from} < std::pair{r.to, r.from}; });
    for (const auto& c : sorted) {
        ArchEdge<T> e;
        e.from = c.from;
        e.to = c.to;
        net.init_edge(e, {c.op}, false, rng);
        net.edges_.push_back(std::move(e));
    }
    net.init_head(a.channels, a.outputs, rng);
    return net;
}

template <class T>
void Network<T>::init_head(std::size_t channels, std::size_t outputs, std::mt19937_64& rng)
{
    head_gamma_ = Parameter<T>("head.bn.gamma", Tensor<T>({1, channels, 1, 1}, T(1)));
    head_beta_ = Parameter<T>("head.bn.beta", Tensor<T>({1, channels, 1, 1}, T(0)));
    head_stats_ = RunningStats<T>(channels);
    head_weight_ = normal_param<T>("head.weight", {outputs, channels, 1, 1}, std::sqrt(1.0 / static_cast<double>(channels)),
                                   rng);
    head_bias_ = Parameter<T>("head.bias", Tensor<T>({1, outputs, 1, 1}));
}

template <class T>
Var apply_op(Graph<T>& g, OpKind op, ConvUnit<T>* unit, Var x, const ForwardOptions& opt)
{
    const OpInfo& info = op_info(op);
    if (info.is_conv) {
        if (!unit)
            throw ContractError("apply_op: convolution without weights");
        Var y = conv2d(g, x, g.param(unit->kernel), unit->dilation);
        BatchNormArgs<T> bn;
        bn.training = opt.training;
        bn.update_stats = opt.update_stats;
        return batchnorm(g, y, g.param(unit->gamma), g.param(unit->beta), &unit->stats, bn);
    }
    if (info.is_pool)
        return pool2d(g, x, info.pool, info.pool_size);
    if (op == OpKind::identity)
        return identity_op(g, x);
    return zero_op(g, x);
}

template <class T>
Var mixed_op_forward(Graph<T>& g, ArchEdge<T>& edge, Var x, const ForwardOptions& opt)
{
    if (!edge.mixed)
        return apply_op(g, edge.candidates.front(), edge.units.front() ? &*edge.units.front() : nullptr, x, opt);
    Var weights = softmax(g, g.param(edge.logits));
    std::vector<Var> outs;
    std::vector<std::size_t> slots;
    for (std::size_t o = 0; o < edge.candidates.size(); ++o) {
        if (edge.candidates[o] == OpKind::zero)
            continue;
        outs.push_back(apply_op(g, edge.candidates[o], edge.units[o] ? &*edge.units[o] : nullptr, x, opt));
        slots.push_back(o);
    }
    if (outs.empty())
        return zero_op(g, x);
    return weighted_sum<T>(g, outs, weights, slots);
}

template <class T>
Var Network<T>::forward(Graph<T>& g, Var input, const ForwardOptions& opt)
{
    const Shape& s = g.value(input).shape();
    if (s.c != 1 || s.h != cfg_.input_h || s.w != cfg_.input_w)
        throw DimensionError("network expects [N,1," + std::to_string(cfg_.input_h) + "," +
                             std::to_string(cfg_.input_w) + "] input, got " + s.str());
    std::vector<Var> nodes(cfg_.nodes);
    nodes[0] = apply_op(g, OpKind::conv3x3, &stem_, input, opt);
    std::vector<std::vector<ArchEdge<T>*>> incoming(cfg_.nodes);
    for (auto& e : edges_)
        incoming[e.to].push_back(&e);
    for (std::size_t j = 1; j < cfg_.nodes; ++j) {
        auto& in = incoming[j];
        std::sort(in.begin(), in.end(), [](const ArchEdge<T>* a, const ArchEdge<T>* b) { return a->from < b->from; });
        if (opt.reverse_predecessors)
            std::reverse(in.begin(), in.end());
        std::vector<Var> terms;
        for (ArchEdge<T>* e : in)
            terms.push_back(mixed_op_forward(g, *e, nodes[e->from], opt));
        if (terms.empty())
            nodes[j] = g.constant(Tensor<T>(g.value(nodes[0]).shape()));
        else if (terms.size() == 1)
            nodes[j] = terms.front();
        else
            nodes[j] = add<T>(g, terms);
    }
    Var h = relu(g, nodes.back());
    h = global_avg_pool(g, h);
    BatchNormArgs<T> bn;
    bn.training = opt.training;
    bn.update_stats = opt.update_stats;
    h = batchnorm(g, h, g.param(head_gamma_), g.param(head_beta_), &head_stats_, bn);
    return linear(g, h, g.param(head_weight_), g.param(head_bias_));
}

template <class T>
ArchEdge<T>* Network<T>::find_edge(std::size_t from, std::size_t to)
{
    for (auto& e : edges_)
        if (e.from == from && e.to == to)
            return &e;
    return nullptr;
}

template <class T>
std::vector<Parameter<T>*> Network<T>::weights()
{
    std::vector<Parameter<T>*> out{&stem_.kernel, &stem_.gamma, &stem_.beta};
    for (auto& e : edges_)
        for (auto& u : e.units)
            if (u) {
                out.push_back(&u->kernel);
                out.push_back(&u->gamma);
                out.push_back(&u->beta);
            }
    out.push_back(&head_gamma_);
    out.push_back(&head_beta_);
    out.push_back(&head_weight_);
    out.push_back(&head_bias_);
    return out;
}

template <class T>
std::vector<Parameter<T>*> Network<T>::arch_parameters()
{
    std::vector<Parameter<T>*> out;
    for (auto& e : edges_)
        if (e.mixed)
            out.push_back(&e.logits);
    return out;
}

template <class T>
void Network<T>::set_weights_trainable(bool trainable)
{
    for (auto* p : weights())
        p->trainable = trainable;
}

template <class T>
void Network<T>::zero_grad()
{
    for (auto* p : weights())
        p->zero_grad();
    for (auto* p : arch_parameters())
        p->zero_grad();
}

template <class T>
std::vector<EdgeCandidates> Network<T>::cost_view() const
{
    std::vector<EdgeCandidates> out;
    for (const auto& e : edges_) {
        EdgeCandidates c;
        for (std::size_t o = 0; o < e.candidates.size(); ++o) {
            c.costs.push_back(op_cost(e.candidates[o], cfg_.channels, cfg_.channels, cfg_.input_h, cfg_.input_w));
            c.logits.push_back(e.mixed ? static_cast<double>(e.logits.value[o]) : 0.0);
        }
        out.push_back(std::move(c));
    }
    return out;
}

template <class T>
OpCost Network<T>::base() const
{
    return stem_cost(cfg_.channels, cfg_.input_h, cfg_.input_w) +
           head_cost(cfg_.channels, cfg_.outputs, cfg_.input_h, cfg_.input_w);
}

template <class T>
ExpectedCost Network<T>::expected_cost() const
{
    return irisnas::expected_cost(base(), cost_view());
}

template <class T>
DiscreteArchitecture Network<T>::discretize() const
{
    DiscreteArchitecture a;
    a.nodes = cfg_.nodes;
    a.channels = cfg_.channels;
    a.head = cfg_.head;
    a.outputs = cfg_.outputs;
    a.input_h = cfg_.input_h;
    a.input_w = cfg_.input_w;
    const auto view = cost_view();
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        const auto& e = edges_[k];
        const std::size_t o = e.mixed ? select_candidate(view[k].logits, view[k].costs) : 0;
        if (e.candidates[o] != OpKind::zero)
            a.edges.push_back({e.from, e.to, e.candidates[o]});
    }
    return a;
}

template <class T>
DiscreteArchitecture Network<T>::architecture() const
{
    return discretize();
}

template <class T>
SupernetState Network<T>::state() const
{
    SupernetState s;
    s.arch = discretize();
    s.ops = cfg_.ops;
    for (const auto& e : edges_) {
        if (!e.mixed)
            continue;
        std::vector<double> v(e.logits.value.size());
        for (std::size_t o = 0; o < v.size(); ++o)
            v[o] = static_cast<double>(e.logits.value[o]);
        s.logits[{e.from, e.to}] = std::move(v);
    }
    return s;
}

template <class T>
void Network<T>::load_state(const SupernetState& s)
{
    if (!(s.ops == cfg_.ops))
        throw FormatError("search state uses a different operation set");
    for (auto& e : edges_) {
        if (!e.mixed)
            continue;
        auto it = s.logits.find({e.from, e.to});
        if (it == s.logits.end())
            throw FormatError("search state lacks logits for edge " + edge_key(e.from, e.to));
        for (std::size_t o = 0; o < it->second.size(); ++o)
            e.logits.value[o] = static_cast<T>(it->second[o]);
    }
}

namespace {

template <class T>
void push(std::vector<CheckpointEntry>& out, const std::string& name, const Tensor<T>& t)
{
    out.push_back({name, t});
}

template <class T>
void push_unit(std::vector<CheckpointEntry>& out, const ConvUnit<T>& u)
{
    push(out, u.kernel.name, u.kernel.value);
    push(out, u.gamma.name, u.gamma.value);
    push(out, u.beta.name, u.beta.value);
    const std::string base = u.gamma.name.substr(0, u.gamma.name.size() - std::string(".gamma").size());
    push(out, base + ".mean", u.stats.mean);
    push(out, base + ".var", u.stats.var);
}

}  // namespace

template <class T>
std::vector<CheckpointEntry> Network<T>::checkpoint() const
{
    std::vector<CheckpointEntry> out;
    push_unit(out, stem_);
    for (const auto& e : edges_) {
        for (const auto& u : e.units)
            if (u)
                push_unit(out, *u);
        if (e.mixed)
            push(out, e.logits.name, e.logits.value);
    }
    push(out, head_gamma_.name, head_gamma_.value);
    push(out, head_beta_.name, head_beta_.value);
    push(out, "head.bn.mean", head_stats_.mean);
    push(out, "head.bn.var", head_stats_.var);
    push(out, head_weight_.name, head_weight_.value);
    push(out, head_bias_.name, head_bias_.value);
    return out;
}

template <class T>
void Network<T>::load_checkpoint(const std::vector<CheckpointEntry>& entries)
{
    std::map<std::string, const CheckpointEntry*> by_name;
    for (const auto& e : entries)
        by_name[e.name] = &e;
    auto assign = [&](const std::string& name, Tensor<T>& dst) {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw FormatError("checkpoint lacks tensor \"" + name + "\"");
        Tensor<T> src = std::visit([](const auto& t) { return t.template cast<T>(); }, it->second->tensor);
        if (src.shape() != dst.shape())
            throw FormatError("tensor \"" + name + "\" has shape " + src.shape().str() + ", expected " +
                              dst.shape().str());
        dst = std::move(src);
    };
    auto unit = [&](ConvUnit<T>& u) {
        assign(u.kernel.name, u.kernel.value);
        assign(u.gamma.name, u.gamma.value);
        assign(u.beta.name, u.beta.value);
        const std::string base = u.gamma.name.substr(0, u.gamma.name.size() - std::string(".gamma").size());
        assign(base + ".mean", u.stats.mean);
        assign(base + ".var", u.stats.var);
    };
    unit(stem_);
    for (auto& e : edges_) {
        for (auto& u : e.units)
            if (u)
                unit(*u);
        if (e.mixed)
            assign(e.logits.name, e.logits.value);
    }
    assign(head_gamma_.name, head_gamma_.value);
    assign(head_beta_.name, head_beta_.value);
    assign("head.bn.mean", head_stats_.mean);
    assign("head.bn.var", head_stats_.var);
    assign(head_weight_.name, head_weight_.value);
    assign(head_bias_.name, head_bias_.value);
}

template class Network<float>;
template class Network<double>;
template Var apply_op<float>(Graph<float>&, OpKind, ConvUnit<float>*, Var, const ForwardOptions&);
template Var apply_op<double>(Graph<double>&, OpKind, ConvUnit<double>*, Var, const ForwardOptions&);
template Var mixed_op_forward<float>(Graph<float>&, ArchEdge<float>&, Var, const ForwardOptions&);
template Var mixed_op_forward<double>(Graph<double>&, ArchEdge<double>&, Var, const ForwardOptions&);

}  // namespace irisnas
