#pragma once

#include "irisnas/kernels.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace irisnas {

/// Candidate operations that may sit on a supernet edge.
enum class OpKind { conv3x3, conv3x5, dilconv3x3, dilconv3x5, maxpool2x2, avgpool2x2, identity, zero };

struct OpInfo {
    OpKind kind;
    std::string_view name;
    int kernel_h = 0;
    int kernel_w = 0;
    int dilation = 1;
    bool is_conv = false;
    bool is_pool = false;
    kernels::PoolKind pool = kernels::PoolKind::max;
    int pool_size = 0;
};

const OpInfo& op_info(OpKind kind);
std::string_view op_name(OpKind kind);
/// Throws std::invalid_argument naming the op when unknown.
OpKind parse_op(std::string_view name);
std::optional<OpKind> try_parse_op(std::string_view name);

constexpr std::array<OpKind, 8> kAllOps = {OpKind::conv3x3,    OpKind::conv3x5,    OpKind::dilconv3x3,
                                           OpKind::dilconv3x5, OpKind::maxpool2x2, OpKind::avgpool2x2,
                                           OpKind::identity,   OpKind::zero};

/// Ordered, duplicate-free list of candidate operations. Position k is logit k.
class OperationSet {
public:
    OperationSet() = default;
    explicit OperationSet(std::vector<OpKind> ops);

    /// conv 3x3 / 3x5, max / avg pool, identity, zero.
    static OperationSet plain();
    /// plain() plus the dilated 3x3 / 3x5 convolutions.
    static OperationSet with_dilated();

    std::size_t size() const { return ops_.size(); }
    OpKind operator[](std::size_t i) const { return ops_[i]; }
    const std::vector<OpKind>& ops() const { return ops_; }
    std::optional<std::size_t> index_of(OpKind k) const;
    bool contains(OpKind k) const { return index_of(k).has_value(); }

    auto begin() const { return ops_.begin(); }
    auto end() const { return ops_.end(); }

    friend bool operator==(const OperationSet&, const OperationSet&) = default;

private:
    std::vector<OpKind> ops_;
};

}  // namespace irisnas
