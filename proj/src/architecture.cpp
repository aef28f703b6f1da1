#include "irisnas/architecture.hpp"

#include <json.hpp>

#include <set>

namespace irisnas {

using nlohmann::json;

std::string_view head_name(HeadKind h)
{
    return h == HeadKind::softmax ? "softmax" : "embedding";
}

HeadKind parse_head(std::string_view name)
{
    if (name == "softmax")
        return HeadKind::softmax;
    if (name == "embedding")
        return HeadKind::embedding;
    throw ParseError("unknown head \"" + std::string(name) + "\"");
}

std::string edge_key(std::size_t from, std::size_t to)
{
    return std::to_string(from) + "-" + std::to_string(to);
}

void DiscreteArchitecture::validate() const
{
    if (nodes < 2)
        throw ParseError("architecture needs at least 2 nodes");
    if (channels == 0 || outputs == 0 || input_h == 0 || input_w == 0)
        throw ParseError("architecture extents must be positive");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges) {
        if (e.from >= e.to || e.to >= nodes)
            throw ParseError("invalid edge " + edge_key(e.from, e.to) + " for " + std::to_string(nodes) + " nodes");
        if (e.op == OpKind::zero)
            throw ParseError("edge " + edge_key(e.from, e.to) + " uses the zero op; omit the edge instead");
        if (!seen.insert({e.from, e.to}).second)
            throw ParseError("duplicate edge " + edge_key(e.from, e.to));
    }
}

const EdgeChoice* DiscreteArchitecture::find(std::size_t from, std::size_t to) const
{
    for (const auto& e : edges)
        if (e.from == from && e.to == to)
            return &e;
    return nullptr;
}

namespace {

json arch_to_json(const DiscreteArchitecture& a)
{
    json j;
    j["nodes"] = a.nodes;
    j["channels"] = a.channels;
    j["head"] = head_name(a.head);
    j["outputs"] = a.outputs;
    j["input"] = {a.input_h, a.input_w};
    json edges = json::array();
    for (const auto& e : a.edges)
        edges.push_back({{"from", e.from}, {"to", e.to}, {"op", op_name(e.op)}});
    j["edges"] = std::move(edges);
    return j;
}

template <class U>
U required(const json& j, const char* key)
{
    if (!j.contains(key))
        throw ParseError(std::string("missing field \"") + key + "\"");
    try {
        return j.at(key).get<U>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad field \"") + key + "\": " + e.what());
    }
}

DiscreteArchitecture arch_from_json(const json& j)
{
    if (!j.is_object())
        throw ParseError("architecture must be a JSON object");
    DiscreteArchitecture a;
    a.nodes = required<std::size_t>(j, "nodes");
    a.channels = required<std::size_t>(j, "channels");
    a.head = parse_head(required<std::string>(j, "head"));
    if (j.contains("outputs"))
        a.outputs = required<std::size_t>(j, "outputs");
    if (j.contains("input")) {
        const auto in = required<std::vector<std::size_t>>(j, "input");
        if (in.size() != 2)
            throw ParseError("\"input\" must be [height, width]");
        a.input_h = in[0];
        a.input_w = in[1];
    }
    const json& edges = j.contains("edges") ? j.at("edges") : throw ParseError("missing field \"edges\"");
    if (!edges.is_array())
        throw ParseError("\"edges\" must be an array");
    for (const auto& e : edges) {
        EdgeChoice c;
        c.from = required<std::size_t>(e, "from");
        c.to = required<std::size_t>(e, "to");
        const auto name = required<std::string>(e, "op");
        const auto op = try_parse_op(name);
        if (!op)
            throw ParseError("unknown op \"" + name + "\"");
        c.op = *op;
        a.edges.push_back(c);
    }
    a.validate();
    return a;
}

json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace

std::string serialize_arch(const DiscreteArchitecture& a)
{
    return arch_to_json(a).dump(2);
}

DiscreteArchitecture deserialize_arch(std::string_view text)
{
    return arch_from_json(parse_json(text));
}

std::string serialize_supernet(const SupernetState& s)
{
    json j = arch_to_json(s.arch);
    json ops = json::array();
    for (OpKind k : s.ops)
        ops.push_back(op_name(k));
    j["ops"] = std::move(ops);
    json logits = json::object();
    for (const auto& [key, v] : s.logits)
        logits[edge_key(key.first, key.second)] = v;
    j["logits"] = std::move(logits);
    return j.dump(2);
}

SupernetState deserialize_supernet(std::string_view text)
{
    const json j = parse_json(text);
    SupernetState s;
    s.arch = arch_from_json(j);
    std::vector<OpKind> ops;
    for (const auto& name : required<std::vector<std::string>>(j, "ops")) {
        const auto op = try_parse_op(name);
        if (!op)
            throw ParseError("unknown op \"" + name + "\"");
        ops.push_back(*op);
    }
    try {
        s.ops = OperationSet(std::move(ops));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    if (!j.contains("logits") || !j.at("logits").is_object())
        throw ParseError("missing field \"logits\"");
    for (const auto& [key, v] : j.at("logits").items()) {
        const auto dash = key.find('-');
        if (dash == std::string::npos)
            throw ParseError("bad logits key \"" + key + "\"");
        std::size_t from = 0;
        std::size_t to = 0;
        try {
            from = std::stoul(key.substr(0, dash));
            to = std::stoul(key.substr(dash + 1));
        } catch (const std::exception&) {
            throw ParseError("bad logits key \"" + key + "\"");
        }
        if (from >= to || to >= s.arch.nodes)
            throw ParseError("logits for invalid edge \"" + key + "\"");
        auto values = v.get<std::vector<double>>();
        if (values.size() != s.ops.size())
            throw ParseError("edge \"" + key + "\" has " + std::to_string(values.size()) + " logits, expected " +
                             std::to_string(s.ops.size()));
        if (!s.logits.emplace(std::pair{from, to}, std::move(values)).second)
            throw ParseError("duplicate edge \"" + key + "\"");
    }
    return s;
}

}  // namespace irisnas
