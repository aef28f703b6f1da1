#pragma once

#include "irisnas/ops.hpp"

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace irisnas {

enum class HeadKind { softmax, embedding };

std::string_view head_name(HeadKind h);
HeadKind parse_head(std::string_view name);

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EdgeChoice {
    std::size_t from = 0;
    std::size_t to = 0;
    OpKind op = OpKind::identity;

    friend bool operator==(const EdgeChoice&, const EdgeChoice&) = default;
};

/// A discretized network: node 0 is the stem output, node `nodes-1` feeds the head.
/// Edges not listed are absent.
struct DiscreteArchitecture {
    std::size_t nodes = 2;
    std::size_t channels = 8;
    HeadKind head = HeadKind::softmax;
    std::size_t outputs = 32;
    std::size_t input_h = 8;
    std::size_t input_w = 64;
    std::vector<EdgeChoice> edges;

    /// Throws ParseError on self-loops, backward edges, out-of-range nodes,
    /// duplicate edges or zero ops.
    void validate() const;
    const EdgeChoice* find(std::size_t from, std::size_t to) const;

    friend bool operator==(const DiscreteArchitecture&, const DiscreteArchitecture&) = default;
};

/// Continuous search state: the discretized view plus per-edge logits.
struct SupernetState {
    DiscreteArchitecture arch;
    OperationSet ops;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> logits;
};

std::string edge_key(std::size_t from, std::size_t to);

std::string serialize_arch(const DiscreteArchitecture& a);
DiscreteArchitecture deserialize_arch(std::string_view text);

std::string serialize_supernet(const SupernetState& s);
SupernetState deserialize_supernet(std::string_view text);

}  // namespace irisnas
