#include "irisnas/iris.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace irisnas {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPupilLevel = 20.0;
constexpr double kScleraLevel = 190.0;
constexpr double kEyelidLevel = 150.0;

double row_radius_of(std::size_t k, std::size_t rows)
{
    return rows > 1 ? static_cast<double>(k) / static_cast<double>(rows - 1) : 0.0;
}

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

bool circle_fits(const GrayImage& img, const CircleParams& c)
{
    return c.r > 0.0 && c.x0 - c.r >= 0.0 && c.y0 - c.r >= 0.0 && c.x0 + c.r <= static_cast<double>(img.width - 1) &&
           c.y0 + c.r <= static_cast<double>(img.height - 1);
}

std::vector<double> gaussian_weights(double sigma, int& half)
{
    half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> g(2 * half + 1);
    double sum = 0.0;
    for (int k = -half; k <= half; ++k) {
        g[k + half] = sigma > 0.0 ? std::exp(-0.5 * k * k / (sigma * sigma)) : (k == 0 ? 1.0 : 0.0);
        sum += g[k + half];
    }
    for (double& v : g)
        v /= sum;
    return g;
}

}  // namespace

void EyeImage::validate() const
{
    if (image.empty())
        throw std::invalid_argument("eye image is empty");
    if (mask && (mask->width != image.width || mask->height != image.height))
        throw std::invalid_argument("mask dimensions differ from the image");
}

void Segmentation::validate() const
{
    if (!(pupil.r > 0.0) || !(limbus.r > pupil.r))
        throw std::invalid_argument("segmentation needs 0 < pupil radius < limbus radius");
    if (std::hypot(pupil.x0 - limbus.x0, pupil.y0 - limbus.y0) >= limbus.r)
        throw std::invalid_argument("pupil center lies outside the limbus circle");
}

double bilinear(const GrayImage& img, double x, double y)
{
    const auto x0 = std::min(static_cast<std::size_t>(x), img.width - 1);
    const auto y0 = std::min(static_cast<std::size_t>(y), img.height - 1);
    const std::size_t x1 = std::min(x0 + 1, img.width - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
    const double bot = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
    return (1.0 - fy) * top + fy * bot;
}

bool inside(const GrayImage& img, double x, double y)
{
    return x >= 0.0 && y >= 0.0 && x <= static_cast<double>(img.width - 1) && y <= static_cast<double>(img.height - 1);
}

double contour_mean(const GrayImage& img, double x0, double y0, double r, const ContourOptions& opt)
{
    const double xmax = static_cast<double>(img.width - 1);
    const double ymax = static_cast<double>(img.height - 1);
    const double span = opt.theta_end - opt.theta_begin;
    double sum = 0.0;
    for (std::size_t t = 0; t < opt.n_theta; ++t) {
        const double th = opt.theta_begin + span * static_cast<double>(t) / static_cast<double>(opt.n_theta);
        const double x = std::clamp(x0 + r * std::cos(th), 0.0, xmax);
        const double y = std::clamp(y0 - r * std::sin(th), 0.0, ymax);
        sum += bilinear(img, x, y);
    }
    return sum / static_cast<double>(opt.n_theta);
}

double idiff_response(const GrayImage& img, const CircleParams& c, const ContourOptions& opt)
{
    if (opt.n_theta < 16)
        throw std::invalid_argument("n_theta must be at least 16");
    if (img.empty() || !circle_fits(img, c))
        throw std::invalid_argument("circle outside image");
    int half = 0;
    const auto g = gaussian_weights(opt.sigma, half);
    std::vector<double> profile(2 * half + 3);
    for (int j = 0; j < static_cast<int>(profile.size()); ++j)
        profile[j] = contour_mean(img, c.x0, c.y0, c.r + (j - half - 1) * opt.step, opt);
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) {
        const int j = k + half + 1;
        acc += g[k + half] * (profile[j + 1] - profile[j - 1]) / (2.0 * opt.step);
    }
    return std::abs(acc);
}

namespace {

struct Candidate {
    CircleParams c;
    double response = -1.0;
};

// Exhaustive search over a center grid; radii on the integer ladder.
Candidate grid_search(const GrayImage& img, double cx_lo, double cx_hi, double cy_lo, double cy_hi, double step,
                      double r_lo, double r_hi, const ContourOptions& opt)
{
    int half = 0;
    const auto g = gaussian_weights(opt.sigma, half);
    const int n_r = static_cast<int>(std::floor((r_hi - r_lo) / opt.step)) + 1;
    Candidate best;
    std::vector<double> profile(static_cast<std::size_t>(n_r + 2 * half + 2));
    for (double cy = cy_lo; cy <= cy_hi + 1e-9; cy += step)
        for (double cx = cx_lo; cx <= cx_hi + 1e-9; cx += step) {
            for (std::size_t j = 0; j < profile.size(); ++j)
                profile[j] = contour_mean(img, cx, cy, r_lo + (static_cast<double>(j) - half - 1) * opt.step, opt);
            for (int i = 0; i < n_r; ++i) {
                const CircleParams c{cx, cy, r_lo + i * opt.step};
                if (!circle_fits(img, c))
                    continue;
                double acc = 0.0;
                for (int k = -half; k <= half; ++k) {
                    const int j = i + k + half + 1;
                    acc += g[k + half] * (profile[j + 1] - profile[j - 1]) / (2.0 * opt.step);
                }
                acc = std::abs(acc);
                if (acc > best.response) {
                    best.response = acc;
                    best.c = c;
                }
            }
        }
    return best;
}

Candidate refine(const GrayImage& img, Candidate best, std::initializer_list<double> steps, double cx_lo, double cx_hi,
                 double cy_lo, double cy_hi, double r_lo, double r_hi, const ContourOptions& opt)
{
    for (double s : steps) {
        const CircleParams centre = best.c;
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx)
                for (int dr = -2; dr <= 2; ++dr) {
                    const CircleParams c{centre.x0 + dx * s, centre.y0 + dy * s, centre.r + dr * s};
                    if (c.x0 < cx_lo || c.x0 > cx_hi || c.y0 < cy_lo || c.y0 > cy_hi || c.r < r_lo || c.r > r_hi ||
                        !circle_fits(img, c))
                        continue;
                    const double v = idiff_response(img, c, opt);
                    if (v > best.response) {
                        best.response = v;
                        best.c = c;
                    }
                }
    }
    return best;
}

}  // namespace

Segmentation segment(const GrayImage& img, const SegmentOptions& opt)
{
    if (img.empty())
        throw std::invalid_argument("cannot segment an empty image");
    if (!(opt.pupil_r_min > 0.0) || opt.pupil_r_max < opt.pupil_r_min || opt.limbus_r_max < opt.limbus_r_min ||
        opt.pupil_r_max >= opt.limbus_r_max)
        throw std::invalid_argument("radius ranges must be non-empty with the pupil range below the limbus range");
    if (opt.contour.n_theta < 16)
        throw std::invalid_argument("n_theta must be at least 16");
    const double w = static_cast<double>(img.width - 1);
    const double h = static_cast<double>(img.height - 1);
    const double rmin = opt.pupil_r_min;

    Candidate pupil = grid_search(img, rmin, w - rmin, rmin, h - rmin, opt.coarse_step, opt.pupil_r_min,
                                  opt.pupil_r_max, opt.contour);
    if (pupil.response < opt.noise_floor)
        throw SegmentationError("no circular edge found");
    pupil = refine(img, pupil, {opt.coarse_step / 2.0, 1.0, 0.5}, 0.0, w, 0.0, h, opt.pupil_r_min, opt.pupil_r_max,
                   opt.contour);

    const double range = opt.limbus_center_range;
    const double cx_lo = pupil.c.x0 - range, cx_hi = pupil.c.x0 + range;
    const double cy_lo = pupil.c.y0 - range, cy_hi = pupil.c.y0 + range;
    const double lr_lo = std::max(opt.limbus_r_min, std::floor(pupil.c.r) + 1.0);
    if (lr_lo > opt.limbus_r_max)
        throw SegmentationError("no circular edge found");
    Candidate limbus = grid_search(img, cx_lo, cx_hi, cy_lo, cy_hi, 2.0, lr_lo, opt.limbus_r_max, opt.contour);
    if (limbus.response < opt.noise_floor)
        throw SegmentationError("no circular edge found");
    limbus = refine(img, limbus, {1.0, 0.5}, cx_lo, cx_hi, cy_lo, cy_hi, lr_lo, opt.limbus_r_max, opt.contour);

    Segmentation seg{pupil.c, limbus.c};
    if (!(seg.limbus.r > seg.pupil.r))
        throw SegmentationError("no circular edge found");
    return seg;
}

Point2 circle_point(const CircleParams& c, double theta)
{
    return {c.x0 + c.r * std::cos(theta), c.y0 - c.r * std::sin(theta)};
}

Point2 rubber_sheet_point(const Segmentation& seg, double r, double theta)
{
    const Point2 p = circle_point(seg.pupil, theta);
    const Point2 s = circle_point(seg.limbus, theta);
    return {(1.0 - r) * p.x + r * s.x, (1.0 - r) * p.y + r * s.y};
}

double row_radius(std::size_t row)
{
    return static_cast<double>(row) / static_cast<double>(kNormRows - 1);
}

double column_angle(std::size_t col)
{
    return kTwoPi * static_cast<double>(col) / static_cast<double>(kNormCols);
}

NormalizedIris normalize(const GrayImage& img, const Segmentation& seg)
{
    seg.validate();
    NormalizedIris out{GrayImage(kNormCols, kNormRows), GrayImage(kNormCols, kNormRows, kMaskInvalid), seg};
    for (std::size_t k = 0; k < kNormRows; ++k)
        for (std::size_t m = 0; m < kNormCols; ++m) {
            const Point2 q = rubber_sheet_point(seg, row_radius(k), column_angle(m));
            if (!inside(img, q.x, q.y))
                continue;
            out.image.at(m, k) = to_byte(bilinear(img, q.x, q.y));
            out.mask.at(m, k) = kMaskValid;
        }
    return out;
}

GrayImage normalize_mask(const GrayImage& mask, const Segmentation& seg)
{
    seg.validate();
    GrayImage out(kNormCols, kNormRows, kMaskInvalid);
    for (std::size_t k = 0; k < kNormRows; ++k)
        for (std::size_t m = 0; m < kNormCols; ++m) {
            const Point2 q = rubber_sheet_point(seg, row_radius(k), column_angle(m));
            const double x = std::round(q.x);
            const double y = std::round(q.y);
            if (!inside(mask, x, y))
                continue;
            if (mask.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) != kMaskInvalid)
                out.at(m, k) = kMaskValid;
        }
    return out;
}

NormalizedIris normalize_eye(const EyeImage& eye, const Segmentation& seg)
{
    eye.validate();
    NormalizedIris n = normalize(eye.image, seg);
    if (eye.mask) {
        const GrayImage pm = normalize_mask(*eye.mask, seg);
        for (std::size_t i = 0; i < pm.pixels.size(); ++i)
            if (pm.pixels[i] == kMaskInvalid)
                n.mask.pixels[i] = kMaskInvalid;
    }
    return n;
}

IrisTexture::IrisTexture(std::uint64_t identity, const TextureParams& p)
{
    if (p.components == 0 || p.angular_min > p.angular_max || p.radial_min > p.radial_max)
        throw std::invalid_argument("invalid texture parameters");
    std::mt19937_64 rng(identity * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    std::uniform_real_distribution<double> amp(0.5, 1.0);
    std::uniform_real_distribution<double> rad(p.radial_min, p.radial_max);
    std::uniform_int_distribution<int> ang(p.angular_min, p.angular_max);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::bernoulli_distribution flip(0.5);
    double power = 0.0;
    for (std::size_t k = 0; k < p.components; ++k) {
        TextureComponent c;
        c.amplitude = amp(rng);
        c.radial = rad(rng);
        c.angular = ang(rng) * (flip(rng) ? -1 : 1);
        c.phase = phase(rng);
        power += 0.5 * c.amplitude * c.amplitude;
        comps_.push_back(c);
    }
    mean_ = p.mean;
    scale_ = 0.5 * p.contrast / std::sqrt(power);
}

double IrisTexture::value(double rho, double phi) const
{
    double acc = 0.0;
    for (const auto& c : comps_)
        acc += c.amplitude * std::cos(kTwoPi * c.radial * rho + c.angular * phi + c.phase);
    return mean_ + scale_ * acc;
}

std::vector<double> IrisTexture::grid(std::size_t rows, const std::vector<double>& phis) const
{
    // cos(a + b) split into per-row and per-column factors
    std::vector<double> out(rows * phis.size(), mean_);
    std::vector<double> cb(phis.size()), sb(phis.size());
    for (const auto& c : comps_) {
        for (std::size_t m = 0; m < phis.size(); ++m) {
            cb[m] = std::cos(c.angular * phis[m] + c.phase);
            sb[m] = std::sin(c.angular * phis[m] + c.phase);
        }
        for (std::size_t k = 0; k < rows; ++k) {
            const double a = kTwoPi * c.radial * row_radius_of(k, rows);
            const double ca = scale_ * c.amplitude * std::cos(a);
            const double sa = scale_ * c.amplitude * std::sin(a);
            double* row = out.data() + k * phis.size();
            for (std::size_t m = 0; m < phis.size(); ++m)
                row[m] += ca * cb[m] - sa * sb[m];
        }
    }
    return out;
}

IrisTexture IrisTexture::jittered(std::uint64_t seed, double sd) const
{
    IrisTexture t = *this;
    if (sd <= 0.0)
        return t;
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
    std::normal_distribution<double> nd(0.0, sd);
    for (auto& c : t.comps_)
        c.phase += nd(rng);
    return t;
}

Segmentation random_geometry(std::uint64_t seed, std::size_t width, std::size_t height)
{
    std::mt19937_64 rng(seed ^ 0xa0761d6478bd642fULL);
    const double s = static_cast<double>(std::min(width, height)) / 256.0;
    auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    Segmentation g;
    g.pupil.x0 = static_cast<double>(width) / 2.0 + u(-4.0, 4.0) * s;
    g.pupil.y0 = static_cast<double>(height) / 2.0 + u(-4.0, 4.0) * s;
    g.pupil.r = u(30.0, 50.0) * s;
    g.limbus.x0 = g.pupil.x0 + u(-2.0, 2.0) * s;
    g.limbus.y0 = g.pupil.y0 + u(-2.0, 2.0) * s;
    g.limbus.r = u(95.0, 110.0) * s;
    return g;
}

namespace {

// Inverts the rubber-sheet map by fixed-point iteration on (rho, phi).
void polar_coords(const Segmentation& g, double x, double y, double& rho, double& phi)
{
    const double ox = g.limbus.x0 - g.pupil.x0;
    const double oy = g.limbus.y0 - g.pupil.y0;
    rho = 0.5;
    for (int it = 0; it < 8; ++it) {
        const double dx = x - g.pupil.x0 - rho * ox;
        const double dy = -(y - g.pupil.y0 - rho * oy);
        phi = std::atan2(dy, dx);
        rho = (std::hypot(dx, dy) - g.pupil.r) / (g.limbus.r - g.pupil.r);
    }
}

double occlusion_line(const Segmentation& g, double occlusion)
{
    return g.limbus.y0 - g.limbus.r + occlusion * 2.0 * g.limbus.r;
}

}  // namespace

SynthEye synth_iris(std::uint64_t seed, const SynthParams& p)
{
    const Segmentation g = p.geometry ? *p.geometry : random_geometry(seed, p.width, p.height);
    g.validate();
    if (g.limbus.x0 - g.limbus.r < 0.0 || g.limbus.y0 - g.limbus.r < 0.0 ||
        g.limbus.x0 + g.limbus.r > static_cast<double>(p.width - 1) ||
        g.limbus.y0 + g.limbus.r > static_cast<double>(p.height - 1))
        throw std::invalid_argument("iris radii do not fit the canvas");
    const IrisTexture tex = IrisTexture(p.identity, p.texture).jittered(seed, p.phase_jitter);
    std::mt19937_64 rng(seed ^ 0xe7037ed1a0b428dbULL);
    std::normal_distribution<double> noise(0.0, p.noise_sigma > 0.0 ? p.noise_sigma : 1.0);
    const double cut = occlusion_line(g, p.occlusion);

    SynthEye out;
    out.truth = g;
    out.eye.image = GrayImage(p.width, p.height);
    out.eye.mask = GrayImage(p.width, p.height, kMaskValid);
    for (std::size_t y = 0; y < p.height; ++y)
        for (std::size_t x = 0; x < p.width; ++x) {
            const double fx = static_cast<double>(x);
            const double fy = static_cast<double>(y);
            double v = kScleraLevel;
            if (std::hypot(fx - g.pupil.x0, fy - g.pupil.y0) < g.pupil.r) {
                v = kPupilLevel;
            } else if (std::hypot(fx - g.limbus.x0, fy - g.limbus.y0) < g.limbus.r) {
                double rho = 0.0, phi = 0.0;
                polar_coords(g, fx, fy, rho, phi);
                v = tex.value(std::clamp(rho, 0.0, 1.0), phi - p.rotation);
            }
            if (p.occlusion > 0.0 && fy < cut) {
                v = kEyelidLevel;
                out.eye.mask->at(x, y) = kMaskInvalid;
            }
            if (p.noise_sigma > 0.0)
                v += noise(rng);
            out.eye.image.at(x, y) = to_byte(v);
        }
    return out;
}

NormalizedIris synth_normalized(std::uint64_t seed, const SynthParams& p)
{
    const Segmentation g = p.geometry ? *p.geometry : random_geometry(seed, p.width, p.height);
    g.validate();
    const IrisTexture tex = IrisTexture(p.identity, p.texture).jittered(seed, p.phase_jitter);
    std::mt19937_64 rng(seed ^ 0xe7037ed1a0b428dbULL);
    std::normal_distribution<double> noise(0.0, p.noise_sigma > 0.0 ? p.noise_sigma : 1.0);
    const double cut = occlusion_line(g, p.occlusion);
    NormalizedIris out{GrayImage(kNormCols, kNormRows), GrayImage(kNormCols, kNormRows, kMaskValid), g};
    std::vector<double> angles(kNormCols);
    for (std::size_t m = 0; m < kNormCols; ++m)
        angles[m] = column_angle(m) - p.rotation;
    const std::vector<double> values = tex.grid(kNormRows, angles);
    for (std::size_t k = 0; k < kNormRows; ++k)
        for (std::size_t m = 0; m < kNormCols; ++m) {
            double v = values[k * kNormCols + m];
            if (p.occlusion > 0.0 && rubber_sheet_point(g, row_radius(k), column_angle(m)).y < cut) {
                v = kEyelidLevel;
                out.mask.at(m, k) = kMaskInvalid;
            }
            if (p.noise_sigma > 0.0)
                v += noise(rng);
            out.image.at(m, k) = to_byte(v);
        }
    return out;
}

}  // namespace irisnas
