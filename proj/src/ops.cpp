#include "irisnas/ops.hpp"

#include <algorithm>

namespace irisnas {

namespace {

using kernels::PoolKind;

const std::array<OpInfo, 8> kTable = {{
    {OpKind::conv3x3, "conv3x3", 3, 3, 1, true, false, PoolKind::max, 0},
    {OpKind::conv3x5, "conv3x5", 3, 5, 1, true, false, PoolKind::max, 0},
    {OpKind::dilconv3x3, "dilconv3x3", 3, 3, 2, true, false, PoolKind::max, 0},
    {OpKind::dilconv3x5, "dilconv3x5", 3, 5, 2, true, false, PoolKind::max, 0},
    {OpKind::maxpool2x2, "maxpool2x2", 0, 0, 1, false, true, PoolKind::max, 2},
    {OpKind::avgpool2x2, "avgpool2x2", 0, 0, 1, false, true, PoolKind::avg, 2},
    {OpKind::identity, "identity", 0, 0, 1, false, false, PoolKind::max, 0},
    {OpKind::zero, "zero", 0, 0, 1, false, false, PoolKind::max, 0},
}};

}  // namespace

const OpInfo& op_info(OpKind kind)
{
    return kTable[static_cast<std::size_t>(kind)];
}

std::string_view op_name(OpKind kind)
{
    return op_info(kind).name;
}

std::optional<OpKind> try_parse_op(std::string_view name)
{
    for (const auto& info : kTable)
        if (info.name == name)
            return info.kind;
    return std::nullopt;
}

OpKind parse_op(std::string_view name)
{
    if (auto k = try_parse_op(name))
        return *k;
    throw std::invalid_argument("unknown operation \"" + std::string(name) + "\"");
}

OperationSet::OperationSet(std::vector<OpKind> ops) : ops_(std::move(ops))
{
    if (ops_.empty())
        throw std::invalid_argument("operation set must not be empty");
    for (std::size_t i = 0; i < ops_.size(); ++i)
        for (std::size_t j = i + 1; j < ops_.size(); ++j)
            if (ops_[i] == ops_[j])
                throw std::invalid_argument("duplicate operation \"" + std::string(op_name(ops_[i])) +
                                            "\" in operation set");
}

OperationSet OperationSet::plain()
{
    return OperationSet({OpKind::conv3x3, OpKind::conv3x5, OpKind::maxpool2x2, OpKind::avgpool2x2,
                         OpKind::identity, OpKind::zero});
}

OperationSet OperationSet::with_dilated()
{
    return OperationSet({OpKind::conv3x3, OpKind::conv3x5, OpKind::dilconv3x3, OpKind::dilconv3x5,
                         OpKind::maxpool2x2, OpKind::avgpool2x2, OpKind::identity, OpKind::zero});
}

std::optional<std::size_t> OperationSet::index_of(OpKind k) const
{
    auto it = std::find(ops_.begin(), ops_.end(), k);
    if (it == ops_.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - ops_.begin());
}

}  // namespace irisnas
