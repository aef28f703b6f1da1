#include "cost_oracle.hpp"

#include "irisnas/cost_model.hpp"
#include "irisnas/supernet.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace irisnas;
using irisnas::testing::counted_head_cost;
using irisnas::testing::counted_op_cost;

TEST(OpCost, SpecExamples)
{
    EXPECT_EQ(op_cost(OpKind::identity, 4, 4, 8, 16), (OpCost{0, 0}));
    EXPECT_EQ(op_cost(OpKind::zero, 4, 4, 8, 16), (OpCost{0, 0}));
    EXPECT_EQ(op_cost(OpKind::maxpool2x2, 4, 4, 8, 16), (OpCost{2048, 0}));
    // 148,480 FLOPs / 584 params needs 16 input and 4 output channels
    EXPECT_EQ(op_cost(OpKind::conv3x3, 16, 4, 8, 16), (OpCost{148480, 584}));
    EXPECT_EQ(counted_op_cost(OpKind::conv3x3, 16, 4, 8, 16), (OpCost{148480, 584}));
    EXPECT_EQ(counted_op_cost(OpKind::maxpool2x2, 4, 4, 8, 16), (OpCost{2048, 0}));
}

TEST(OpCost, DilationDoesNotChangeCost)
{
    EXPECT_EQ(op_cost(OpKind::dilconv3x3, 3, 5, 7, 9), op_cost(OpKind::conv3x3, 3, 5, 7, 9));
    EXPECT_EQ(op_cost(OpKind::dilconv3x5, 3, 5, 7, 9), op_cost(OpKind::conv3x5, 3, 5, 7, 9));
}

TEST(OpCost, RejectsEmptyExtents)
{
    EXPECT_THROW(op_cost(OpKind::conv3x3, 0, 4, 8, 8), std::invalid_argument);
}

TEST(OpCost, MatchesLoopCountOracle)
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> ch(1, 6), ext(1, 9);
    for (int trial = 0; trial < 40; ++trial) {
        const OpKind op = kAllOps[trial % kAllOps.size()];
        const std::size_t cin = ch(rng);
        const std::size_t cout = op_info(op).is_conv ? ch(rng) : cin;
        const std::size_t h = ext(rng), w = ext(rng);
        EXPECT_EQ(op_cost(op, cin, cout, h, w), counted_op_cost(op, cin, cout, h, w))
            << op_name(op) << " " << cin << "->" << cout << " " << h << "x" << w;
    }
}

TEST(HeadCost, MatchesLoopCountOracle)
{
    for (std::size_t c : {1u, 3u, 8u})
        for (std::size_t outputs : {2u, 5u})
            EXPECT_EQ(head_cost(c, outputs, 4, 6), counted_head_cost(c, outputs, 4, 6));
}

TEST(ExpectedCost, UniformThirdOfCostliest)
{
    const EdgeCandidates e{{0.0, 0.0, 0.0}, {{300, 30}, {0, 0}, {0, 0}}};
    const auto c = expected_cost(OpCost{}, std::span(&e, 1));
    EXPECT_DOUBLE_EQ(c.flops, 100.0);
    EXPECT_DOUBLE_EQ(c.params, 10.0);
}

TEST(ExpectedCost, RandomLogitsMatchDirectSum)
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    NetworkConfig cfg;
    auto net = Network<double>::supernet(cfg, 9);
    for (auto& e : net.edges())
        for (auto& v : e.logits.value.values())
            v = 2.0 * nd(rng);
    double flops = static_cast<double>(net.base().flops), params = static_cast<double>(net.base().params);
    for (const auto& e : net.edges()) {
        double z = 0.0;
        for (double v : e.logits.value.values())
            z += std::exp(v);
        for (std::size_t o = 0; o < e.candidates.size(); ++o) {
            const auto c = op_cost(e.candidates[o], cfg.channels, cfg.channels, cfg.input_h, cfg.input_w);
            flops += std::exp(e.logits.value[o]) / z * static_cast<double>(c.flops);
            params += std::exp(e.logits.value[o]) / z * static_cast<double>(c.params);
        }
    }
    const auto c = net.expected_cost();
    EXPECT_NEAR(c.flops, flops, 1e-9 * flops);
    EXPECT_NEAR(c.params, params, 1e-9 * params);
}

TEST(ExpectedCost, OneHotEqualsDiscreteCost)
{
    NetworkConfig cfg;
    auto net = Network<double>::supernet(cfg, 10);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> pick(0, cfg.ops.size() - 1);
    for (int trial = 0; trial < 10; ++trial) {
        for (auto& e : net.edges()) {
            e.logits.value.fill(-1000.0);
            e.logits.value[pick(rng)] = 1000.0;
        }
        const auto c = net.expected_cost();
        const auto d = discrete_cost(net.discretize());
        EXPECT_EQ(c.flops, static_cast<double>(d.flops));
        EXPECT_EQ(c.params, static_cast<double>(d.params));
    }
}

TEST(ExpectedCost, MovingMassToCheaperOpNeverIncreasesCost)
{
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    const std::vector<OpCost> costs{{598016, 592}, {991232, 976}, {16384, 0}, {16384, 0}, {0, 0}, {0, 0}};
    for (int trial = 0; trial < 200; ++trial) {
        EdgeCandidates e;
        e.costs = costs;
        for (std::size_t o = 0; o < costs.size(); ++o)
            e.logits.push_back(nd(rng));
        const auto before = expected_cost(OpCost{}, std::span(&e, 1));
        const std::size_t hi = trial % 2, lo = 2 + trial % 4;  // costlier, cheaper
        const double shift = std::abs(nd(rng));
        e.logits[hi] -= shift;
        e.logits[lo] += shift;
        const auto after = expected_cost(OpCost{}, std::span(&e, 1));
        EXPECT_LE(after.flops, before.flops * (1 + 1e-12));
    }
}

TEST(DiscreteCost, EmptyAndSingleConv)
{
    DiscreteArchitecture a;
    a.nodes = 2;
    a.channels = 8;
    a.outputs = 10;
    EXPECT_EQ(discrete_cost(a), stem_cost(8, 8, 64) + head_cost(8, 10, 8, 64));
    EXPECT_EQ(discrete_cost(a), counted_op_cost(OpKind::conv3x3, 1, 8, 8, 64) + counted_head_cost(8, 10, 8, 64));
    a.edges.push_back({0, 1, OpKind::conv3x3});
    EXPECT_EQ(discrete_cost(a), stem_cost(8, 8, 64) + op_cost(OpKind::conv3x3, 8, 8, 8, 64) + head_cost(8, 10, 8, 64));
}

TEST(CheckConstraints, ReportsMargins)
{
    const auto r = check_constraints(OpCost{10, 10}, Budget{5, kUnbounded});
    EXPECT_FALSE(r.feasible);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].resource, "flops");
    EXPECT_DOUBLE_EQ(r.violations[0].margin, -5.0);
    EXPECT_TRUE(check_constraints(OpCost{5, 5}, Budget{5, 5}).feasible);
    const auto both = check_constraints(OpCost{10, 10}, Budget{5, 6});
    EXPECT_EQ(both.violations.size(), 2u);
}
