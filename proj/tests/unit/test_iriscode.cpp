#include "irisnas/iriscode.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace irisnas;

namespace {

NormalizedIris constant_iris(std::uint8_t v)
{
    NormalizedIris n;
    n.image = GrayImage(kNormCols, kNormRows, v);
    n.mask = GrayImage(kNormCols, kNormRows, kMaskValid);
    return n;
}

NormalizedIris textured(std::uint64_t identity, double rotation = 0.0, double noise = 0.0, std::uint64_t seed = 1)
{
    SynthParams p;
    p.identity = identity;
    p.rotation = rotation;
    p.noise_sigma = noise;
    return synth_normalized(seed, p);
}

IrisTemplate random_template(std::mt19937_64& rng, TemplateGeometry g = {})
{
    IrisTemplate t;
    t.geometry = g;
    t.code.resize(g.bits());
    t.mask.assign(g.bits(), 1);
    std::bernoulli_distribution coin(0.5);
    for (auto& b : t.code)
        b = coin(rng);
    return t;
}

}  // namespace

TEST(Encode, ConstantImageMasksEverything)
{
    const auto t = encode(constant_iris(120));
    EXPECT_EQ(t.code.size(), t.geometry.bits());
    for (auto m : t.mask)
        EXPECT_EQ(m, 0);
}

TEST(Encode, DeterministicAndSized)
{
    const auto n = textured(3);
    const auto a = encode(n), b = encode(n);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.code.size(), 2u * 8 * 128);
    EXPECT_EQ(a.mask.size(), a.code.size());
}

TEST(Encode, InvalidPolarMaskPropagates)
{
    auto n = textured(4);
    for (std::size_t y = 0; y < kNormRows; ++y)
        for (std::size_t x = 0; x < kNormCols / 2; ++x)
            n.mask.at(x, y) = kMaskInvalid;
    const auto t = encode(n);
    const auto& g = t.geometry;
    for (std::uint32_t r = 0; r < g.rows; ++r)
        for (std::uint32_t c = 0; c < g.cols / 2; ++c)
            for (int k = 0; k < 2; ++k)
                EXPECT_EQ(t.mask[(r * g.cols + c) * 2 + k], 0);
    std::size_t usable = 0;
    for (auto m : t.mask)
        usable += m;
    EXPECT_GT(usable, 0u);
}

TEST(Encode, DefaultBankHasFiveParameters)
{
    EXPECT_EQ(GaborBank{}.parameter_count(), 5u);
}

TEST(Encode, WrongSizeRejected)
{
    NormalizedIris n;
    n.image = GrayImage(100, 20, 1);
    n.mask = GrayImage(100, 20, kMaskValid);
    EXPECT_THROW(encode(n), std::invalid_argument);
}

TEST(Match, SelfIsZeroAtShiftZero)
{
    const auto t = encode(textured(5));
    const auto r = match(t, t);
    EXPECT_EQ(r.hd, 0.0);
    EXPECT_EQ(r.best_shift, 0);
    EXPECT_GT(r.valid_bits, 0u);
}

TEST(Match, ComplementIsOne)
{
    const auto t = encode(textured(6));
    auto c = t;
    for (auto& b : c.code)
        b ^= 1;
    EXPECT_EQ(match(t, c, 0).hd, 1.0);
}

TEST(Match, Symmetric)
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        auto a = random_template(rng), b = random_template(rng);
        std::bernoulli_distribution drop(0.2);
        for (auto& m : a.mask)
            m = !drop(rng);
        EXPECT_DOUBLE_EQ(match(a, b).hd, match(b, a).hd);
    }
}

TEST(Match, ShiftedCopyFoundAtNegatedShift)
{
    const auto t = encode(textured(7));
    for (int s : {-16, -5, -1, 1, 7, 16}) {
        const auto r = match(shift_columns(t, s), t);
        EXPECT_EQ(r.hd, 0.0) << s;
        EXPECT_EQ(r.best_shift, -s) << s;
    }
}

TEST(Match, MaskedBitsNeverCount)
{
    std::mt19937_64 rng(2);
    auto a = random_template(rng), b = a;
    for (std::size_t i = 0; i < b.code.size(); i += 3) {
        b.code[i] ^= 1;
        b.mask[i] = 0;
    }
    const auto r = match(a, b, 0);
    EXPECT_EQ(r.hd, 0.0);
    EXPECT_EQ(r.valid_bits, a.code.size() - (a.code.size() + 2) / 3);
}

TEST(Match, NoOverlapIsAnError)
{
    std::mt19937_64 rng(3);
    auto a = random_template(rng), b = random_template(rng);
    std::fill(b.mask.begin(), b.mask.end(), 0);
    EXPECT_THROW(match(a, b), MatchError);
    TemplateGeometry other;
    other.rows = 4;
    EXPECT_THROW(match(a, random_template(rng, other)), MatchError);
}

TEST(Match, IndependentTemplatesAverageOneHalf)
{
    std::mt19937_64 rng(4);
    double sum = 0;
    const int n = 1000;
    for (int i = 0; i < n; ++i)
        sum += match(random_template(rng), random_template(rng), 0).hd;
    EXPECT_NEAR(sum / n, 0.5, 0.02);
}

TEST(Match, GenuineBelowImpostor)
{
    const double deg = std::numbers::pi / 180.0;
    double genuine = 0, impostor = 0;
    for (std::uint64_t id = 0; id < 10; ++id) {
        const auto a = encode(textured(id, 0.0, 5.0, 10 + id));
        const auto b = encode(textured(id, 8.0 * deg, 5.0, 20 + id));
        const auto c = encode(textured(id + 100, 0.0, 5.0, 30 + id));
        genuine += match(a, b).hd;
        impostor += match(a, c).hd;
    }
    EXPECT_LT(genuine / 10, 0.3);
    EXPECT_GT(impostor / 10, genuine / 10 + 0.1);
}

TEST(Flops, CountersAgreeWithAnalyticCounts)
{
    IrisCodeCounter enc, mat;
    const auto a = encode(textured(8), GaborBank{}, &enc);
    const auto b = encode(textured(9), GaborBank{});
    match(a, b, kDefaultMaxShift, &mat);
    EXPECT_EQ(enc.flops(), encode_flops(GaborBank{}));
    EXPECT_EQ(mat.flops(), match_flops(a.geometry));
    const double total = static_cast<double>(enc.flops() + mat.flops());
    EXPECT_GT(total, 0.25e6);
    EXPECT_LT(total, 1.0e6);
}

TEST(TemplateIo, RoundTripAndBadMagic)
{
    auto t = encode(textured(10));
    std::stringstream ss;
    write_template(ss, t);
    EXPECT_EQ(read_template(ss), t);
    std::stringstream bad("XXXX0000");
    EXPECT_THROW(read_template(bad), std::runtime_error);
    std::stringstream cut;
    write_template(cut, t);
    std::string s = cut.str();
    std::stringstream shortened(s.substr(0, s.size() / 2));
    EXPECT_THROW(read_template(shortened), std::runtime_error);
}
