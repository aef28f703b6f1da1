#pragma once

// Circle segmentation, rubber-sheet normalization and a synthetic eye
// generator.

#include "irisnas/image.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace irisnas {

inline constexpr std::size_t kNormRows = 64;
inline constexpr std::size_t kNormCols = 512;
inline constexpr std::uint8_t kMaskValid = 255;
inline constexpr std::uint8_t kMaskInvalid = 0;

struct EyeImage {
    GrayImage image;
    std::optional<GrayImage> mask;  // 0 invalid, 255 valid

    void validate() const;
};

struct CircleParams {
    double x0 = 0.0;
    double y0 = 0.0;
    double r = 0.0;

    friend bool operator==(const CircleParams&, const CircleParams&) = default;
};

struct Segmentation {
    CircleParams pupil;
    CircleParams limbus;

    void validate() const;
    friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

struct NormalizedIris {
    GrayImage image;  // kNormCols wide, kNormRows high
    GrayImage mask;
    Segmentation source;
};

class SegmentationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bilinear sample; caller guarantees 0 <= x <= w-1 and 0 <= y <= h-1.
double bilinear(const GrayImage& img, double x, double y);
bool inside(const GrayImage& img, double x, double y);

struct ContourOptions {
    double sigma = 1.5;         // in ladder steps
    std::size_t n_theta = 64;
    double step = 1.0;          // radius ladder spacing, px
    double theta_begin = 0.0;   // contour arc; full circle by default
    double theta_end = 6.283185307179586;
};

/// Mean intensity along a circle, sampling positions clamped to the image.
double contour_mean(const GrayImage& img, double x0, double y0, double r, const ContourOptions& opt);

/// |G_sigma * d/dr (contour mean)| at radius c.r.
double idiff_response(const GrayImage& img, const CircleParams& c, const ContourOptions& opt = {});

struct SegmentOptions {
    double pupil_r_min = 20.0;
    double pupil_r_max = 60.0;
    double limbus_r_min = 70.0;
    double limbus_r_max = 125.0;
    double limbus_center_range = 10.0;
    double coarse_step = 4.0;
    double noise_floor = 2.0;
    ContourOptions contour;
};

Segmentation segment(const GrayImage& img, const SegmentOptions& opt = {});

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Boundary point at angle theta on a circle. Angles run counter-clockwise
/// with image rows growing downward, so theta = pi/2 is the top of the eye.
Point2 circle_point(const CircleParams& c, double theta);

/// (1 - r) * pupil point + r * limbus point.
Point2 rubber_sheet_point(const Segmentation& seg, double r, double theta);

double row_radius(std::size_t row);
double column_angle(std::size_t col);

/// Image mask marks only out-of-bounds samples; the source mask is ignored.
NormalizedIris normalize(const GrayImage& img, const Segmentation& seg);
/// Nearest-neighbour remap of a 0/255 mask.
GrayImage normalize_mask(const GrayImage& mask, const Segmentation& seg);
/// normalize + normalize_mask of the eye's own mask, combined.
NormalizedIris normalize_eye(const EyeImage& eye, const Segmentation& seg);

struct TextureParams {
    std::size_t components = 12;
    double radial_min = 0.25;   // cycles across the annulus
    double radial_max = 2.0;
    int angular_min = 1;        // cycles around the circle
    int angular_max = 12;
    double mean = 110.0;
    double contrast = 45.0;
};

struct TextureComponent {
    double amplitude = 0.0;
    double radial = 0.0;
    int angular = 0;
    double phase = 0.0;
};

/// Band-limited sinusoid mixture fixed by identity.
class IrisTexture {
public:
    IrisTexture(std::uint64_t identity, const TextureParams& p);
    /// rho in [0,1] across the annulus, phi in radians.
    double value(double rho, double phi) const;
    /// value() on rows evenly spaced over rho in [0,1] times the given angles, row-major.
    std::vector<double> grid(std::size_t rows, const std::vector<double>& phis) const;
    /// Same texture with every component's phase perturbed by N(0, sd).
    IrisTexture jittered(std::uint64_t seed, double sd) const;

private:
    IrisTexture() = default;
    std::vector<TextureComponent> comps_;
    double mean_ = 0.0;
    double scale_ = 0.0;
};

struct SynthParams {
    std::size_t width = 256;
    std::size_t height = 256;
    std::optional<Segmentation> geometry;  // drawn from the seed when absent
    std::uint64_t identity = 0;
    double rotation = 0.0;        // radians, counter-clockwise
    double noise_sigma = 0.0;     // gray levels
    double occlusion = 0.0;       // fraction of the limbus height covered from the top
    double phase_jitter = 0.0;    // per-capture texture perturbation
    TextureParams texture;
};

struct SynthEye {
    EyeImage eye;  // mask always present
    Segmentation truth;
};

/// Geometry draw used when SynthParams::geometry is absent.
Segmentation random_geometry(std::uint64_t seed, std::size_t width, std::size_t height);

SynthEye synth_iris(std::uint64_t seed, const SynthParams& p);

/// Renders the normalized 64x512 view of synth_iris(seed, p) directly in polar
/// coordinates, skipping segmentation.
NormalizedIris synth_normalized(std::uint64_t seed, const SynthParams& p);

}  // namespace irisnas
