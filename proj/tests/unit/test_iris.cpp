#include "polar_shift.hpp"

#include "irisnas/corpus.hpp"
#include "irisnas/iris.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace irisnas;
using irisnas::testing::correlation;
using irisnas::testing::correlation_shift;

namespace {

constexpr double kPi = std::numbers::pi;

GrayImage disk(std::size_t size, double cx, double cy, double r, std::uint8_t in, std::uint8_t out)
{
    GrayImage img(size, size, out);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x)
            if (std::hypot(x - cx, y - cy) <= r)
                img.at(x, y) = in;
    return img;
}

Segmentation concentric(double cx, double cy, double rp, double rl)
{
    return Segmentation{{cx, cy, rp}, {cx, cy, rl}};
}

bool close(const CircleParams& a, const CircleParams& b, double tol)
{
    return std::abs(a.x0 - b.x0) <= tol && std::abs(a.y0 - b.y0) <= tol && std::abs(a.r - b.r) <= tol;
}

}  // namespace

TEST(Idiff, UniformImageHasNoResponse)
{
    const GrayImage img(128, 128, 90);
    for (double r : {10.0, 25.0, 40.0})
        EXPECT_NEAR(idiff_response(img, {64, 64, r}), 0.0, 1e-12);
}

TEST(Idiff, DiskEdgeIsStrictMaximum)
{
    const auto img = disk(128, 64, 64, 30, 200, 50);
    const double at = idiff_response(img, {64, 64, 30});
    EXPECT_GT(at, idiff_response(img, {64, 64, 25}));
    EXPECT_GT(at, idiff_response(img, {64, 64, 35}));
}

TEST(Idiff, InvariantToIntensityOffset)
{
    const auto a = disk(128, 64, 64, 30, 150, 50);
    const auto b = disk(128, 64, 64, 30, 190, 90);
    for (double r : {20.0, 30.0, 37.5})
        EXPECT_NEAR(idiff_response(a, {64, 64, r}), idiff_response(b, {64, 64, r}), 1e-9);
}

TEST(Idiff, CircleOutsideImageRejected)
{
    const GrayImage img(64, 64, 10);
    EXPECT_THROW(idiff_response(img, {500, 500, 10}), std::invalid_argument);
    ContourOptions few;
    few.n_theta = 8;
    EXPECT_THROW(idiff_response(img, {32, 32, 10}, few), std::invalid_argument);
}

TEST(Segment, RecoversSpecGeometry)
{
    SynthParams p;
    p.geometry = concentric(128, 128, 40, 100);
    p.identity = 3;
    const auto eye = synth_iris(1, p);
    const auto seg = segment(eye.eye.image);
    EXPECT_TRUE(close(seg.pupil, eye.truth.pupil, 2.0));
    EXPECT_TRUE(close(seg.limbus, eye.truth.limbus, 2.0));
    EXPECT_EQ(segment(eye.eye.image), seg);
}

TEST(Segment, UniformImageHasNoEdge)
{
    try {
        segment(GrayImage(256, 256, 128));
        FAIL() << "expected SegmentationError";
    } catch (const SegmentationError& e) {
        EXPECT_NE(std::string(e.what()).find("no circular edge found"), std::string::npos);
    }
}

TEST(Segment, InvalidRangesRejected)
{
    SegmentOptions o;
    o.pupil_r_max = 130.0;  // above the whole limbus range
    EXPECT_THROW(segment(GrayImage(256, 256, 128), o), std::invalid_argument);
}

TEST(Segment, RandomEyesWithinTwoPixels)
{
    std::size_t ok = 0;
    const std::size_t n = 20;
    for (std::size_t s = 0; s < n; ++s) {
        SynthParams p;
        p.identity = s;
        p.noise_sigma = 5.0;
        p.rotation = 0.1 * static_cast<double>(s);
        const auto eye = synth_iris(100 + s, p);
        const auto seg = segment(eye.eye.image);
        ok += close(seg.pupil, eye.truth.pupil, 2.0) && close(seg.limbus, eye.truth.limbus, 2.0);
    }
    EXPECT_GE(ok, 19u);
}

TEST(Segment, ScalingIntensityKeepsArgmax)
{
    SynthParams p;
    p.identity = 5;
    p.texture.mean = 80.0;
    p.texture.contrast = 20.0;
    const auto eye = synth_iris(7, p);
    GrayImage half = eye.eye.image;
    for (auto& v : half.pixels)
        v = static_cast<std::uint8_t>(v / 2);
    // halving rounds to the nearest lower integer so allow a pixel of drift
    const auto a = segment(eye.eye.image), b = segment(half);
    EXPECT_TRUE(close(a.pupil, b.pupil, 1.0));
    EXPECT_TRUE(close(a.limbus, b.limbus, 1.0));
}

TEST(RubberSheet, EndpointsLieOnCircles)
{
    const Segmentation g{{101.3, 98.7, 33.0}, {103.1, 97.2, 104.5}};
    for (std::size_t col = 0; col < kNormCols; col += 37) {
        const double th = column_angle(col);
        const auto p0 = rubber_sheet_point(g, row_radius(0), th);
        const auto p1 = rubber_sheet_point(g, row_radius(kNormRows - 1), th);
        EXPECT_NEAR(std::hypot(p0.x - g.pupil.x0, p0.y - g.pupil.y0), g.pupil.r, 1e-9);
        EXPECT_NEAR(std::hypot(p1.x - g.limbus.x0, p1.y - g.limbus.y0), g.limbus.r, 1e-9);
    }
    EXPECT_EQ(row_radius(0), 0.0);
    EXPECT_EQ(row_radius(63), 1.0);
    EXPECT_NEAR(column_angle(128), kPi / 2, 1e-15);
}

TEST(Normalize, BoundaryRowsSampleTheCircles)
{
    SynthParams p;
    p.identity = 2;
    const auto eye = synth_iris(3, p);
    const auto& img = eye.eye.image;
    const auto n = normalize(img, eye.truth);
    ASSERT_EQ(n.image.width, kNormCols);
    ASSERT_EQ(n.image.height, kNormRows);
    for (std::size_t col = 0; col < kNormCols; col += 13) {
        const auto a = circle_point(eye.truth.pupil, column_angle(col));
        const auto b = circle_point(eye.truth.limbus, column_angle(col));
        EXPECT_NEAR(n.image.at(col, 0), bilinear(img, a.x, a.y), 0.5 + 1e-9);
        EXPECT_NEAR(n.image.at(col, kNormRows - 1), bilinear(img, b.x, b.y), 0.5 + 1e-9);
    }
}

TEST(Normalize, OutOfBoundsMarkedInvalid)
{
    const GrayImage img(100, 100, 70);
    const auto n = normalize(img, concentric(50, 50, 20, 70));
    std::size_t invalid = 0;
    for (auto v : n.mask.pixels) {
        EXPECT_TRUE(v == kMaskValid || v == kMaskInvalid);
        invalid += v == kMaskInvalid;
    }
    EXPECT_GT(invalid, 0u);
    for (std::size_t col = 0; col < kNormCols; ++col)
        EXPECT_EQ(n.mask.at(col, 0), kMaskValid);
}

TEST(Normalize, RotationBecomesColumnShift)
{
    for (double deg : {-20.0, -10.0, -5.0, 5.0, 10.0, 20.0}) {
        SynthParams p;
        p.geometry = concentric(128, 128, 40, 100);
        p.identity = 11;
        const auto ref = synth_iris(4, p);
        p.rotation = deg * kPi / 180.0;
        const auto rot = synth_iris(4, p);
        const auto a = normalize(ref.eye.image, ref.truth);
        const auto b = normalize(rot.eye.image, rot.truth);
        const int expected = static_cast<int>(std::lround(512.0 * p.rotation / (2 * kPi)));
        EXPECT_LE(std::abs(correlation_shift(a.image, b.image) - expected), 1) << deg << " degrees";
    }
}

TEST(NormalizeMask, AllValidStaysValid)
{
    const GrayImage mask(256, 256, kMaskValid);
    const auto m = normalize_mask(mask, concentric(128, 128, 40, 100));
    for (auto v : m.pixels)
        EXPECT_EQ(v, kMaskValid);
    EXPECT_EQ(normalize_mask(mask, concentric(128, 128, 40, 100)), m);
}

TEST(NormalizeMask, TopOcclusionCentredOnQuarterTurn)
{
    SynthParams p;
    p.geometry = concentric(128, 128, 40, 100);
    p.occlusion = 0.3;
    const auto eye = synth_iris(5, p);
    const auto m = normalize_mask(*eye.eye.mask, eye.truth);
    const std::size_t outer = kNormRows - 1;
    double sum_col = 0;
    std::size_t count = 0;
    for (std::size_t col = 0; col < kNormCols; ++col)
        if (m.at(col, outer) == kMaskInvalid) {
            sum_col += static_cast<double>(col);
            ++count;
        }
    ASSERT_GT(count, 0u);
    EXPECT_NEAR(sum_col / count, 128.0, 3.0);  // theta = pi/2
    EXPECT_EQ(m.at(384, outer), kMaskValid);   // bottom of the eye untouched
}

TEST(Synth, DeterministicPerSeed)
{
    SynthParams p;
    p.identity = 9;
    p.noise_sigma = 10.0;
    p.occlusion = 0.2;
    const auto a = synth_iris(42, p), b = synth_iris(42, p);
    EXPECT_EQ(a.eye.image, b.eye.image);
    EXPECT_EQ(*a.eye.mask, *b.eye.mask);
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_NE(synth_iris(43, p).eye.image, a.eye.image);
}

TEST(Synth, SameIdentityCorrelatesMoreThanDifferent)
{
    CorpusParams cp;
    cp.identities = 50;
    cp.captures = 2;
    cp.noise_sigma = 10.0;
    cp.phase_jitter = 0.3;
    cp.max_rotation_deg = 0.0;
    const auto items = plan_corpus(cp);
    const auto irises = render_normalized(items);
    double same = 0, diff = 0;
    for (std::size_t i = 0; i < cp.identities; ++i) {
        same += correlation(irises[2 * i].image, irises[2 * i + 1].image);
        diff += std::abs(correlation(irises[2 * i].image, irises[(2 * i + 2) % irises.size()].image));
    }
    EXPECT_LT(diff / cp.identities, same / cp.identities);
}

TEST(Synth, NormalizedRenderMatchesPipeline)
{
    SynthParams p;
    p.identity = 4;
    p.geometry = concentric(128, 128, 40, 100);
    const auto direct = synth_normalized(8, p);
    const auto eye = synth_iris(8, p);
    const auto via = normalize(eye.eye.image, eye.truth);
    EXPECT_GT(correlation(direct.image, via.image), 0.9);
}

TEST(Pgm, RoundTrip)
{
    GrayImage img(5, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(i * 17);
    const auto path = std::filesystem::temp_directory_path() / "irisnas_pgm_roundtrip.pgm";
    write_pgm(path, img);
    EXPECT_EQ(read_pgm(path), img);
    std::filesystem::remove(path);
    EXPECT_THROW(read_pgm(path), std::runtime_error);
}
