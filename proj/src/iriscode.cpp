#include "irisnas/iriscode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

namespace irisnas {

namespace {

constexpr char kTemplateMagic[4] = {'I', 'R', 'T', 'C'};
constexpr std::uint32_t kTemplateVersion = 1;

struct Kernel {
    std::vector<double> re;
    std::vector<double> im;
    double max_response = 0.0;  // for a 0..255 input
};

Kernel gabor_kernel(const GaborBank& bank, double wavelength)
{
    const int r = bank.kernel_radius;
    const int n = 2 * r + 1;
    Kernel k;
    k.re.resize(n * n);
    k.im.resize(n * n);
    std::vector<double> env(n * n);
    const double co = std::cos(bank.orientation);
    const double si = std::sin(bank.orientation);
    double env_sum = 0.0;
    double re_sum = 0.0;
    for (int v = -r; v <= r; ++v)
        for (int u = -r; u <= r; ++u) {
            const double ur = u * co + v * si;
            const double vr = -u * si + v * co;
            const std::size_t i = (v + r) * n + (u + r);
            env[i] = std::exp(-0.5 * ur * ur / (bank.sigma_angular * bank.sigma_angular) -
                              0.5 * vr * vr / (bank.sigma_radial * bank.sigma_radial));
            const double arg = 2.0 * std::numbers::pi * ur / wavelength;
            k.re[i] = env[i] * std::cos(arg);
            k.im[i] = env[i] * std::sin(arg);
            env_sum += env[i];
            re_sum += k.re[i];
        }
    // Remove the DC response so flat regions give zero amplitude.
    for (std::size_t i = 0; i < env.size(); ++i)
        k.re[i] -= env[i] * re_sum / env_sum;
    double bound = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i)
        bound += std::hypot(k.re[i], k.im[i]);
    k.max_response = 255.0 * bound;
    return k;
}

void check_bank(const GaborBank& bank)
{
    if (bank.wavelengths.empty() || bank.kernel_radius < 1 || bank.downsample == 0 || bank.probe_rows == 0 ||
        bank.probe_cols == 0)
        throw std::invalid_argument("invalid Gabor bank");
    if (kNormRows % bank.downsample != 0 || kNormCols % bank.downsample != 0 ||
        (kNormRows / bank.downsample) % bank.probe_rows != 0 || (kNormCols / bank.downsample) % bank.probe_cols != 0)
        throw std::invalid_argument("probe grid does not divide the polar image");
    for (double w : bank.wavelengths)
        if (!(w > 0.0))
            throw std::invalid_argument("Gabor wavelengths must be positive");
    if (!(bank.sigma_angular > 0.0) || !(bank.sigma_radial > 0.0) || bank.amplitude_threshold < 0.0)
        throw std::invalid_argument("invalid Gabor envelope or threshold");
}

std::size_t bit_index(const TemplateGeometry& g, std::size_t row, std::size_t col, std::size_t scale, std::size_t b)
{
    return ((row * g.cols + col) * g.scales + scale) * 2 + b;
}

}  // namespace

void IrisTemplate::validate() const
{
    if (code.size() != geometry.bits() || mask.size() != geometry.bits())
        throw std::invalid_argument("template code/mask length does not match its geometry");
}

IrisTemplate encode(const NormalizedIris& n, const GaborBank& bank, IrisCodeCounter* counter)
{
    if (n.image.width != kNormCols || n.image.height != kNormRows || n.mask.width != kNormCols ||
        n.mask.height != kNormRows)
        throw std::invalid_argument("encode expects a 64x512 normalized iris with mask");
    check_bank(bank);
    IrisCodeCounter local;
    IrisCodeCounter& cnt = counter ? *counter : local;

    const std::size_t f = bank.downsample;
    const std::size_t H = kNormRows / f;
    const std::size_t W = kNormCols / f;
    std::vector<double> img(H * W, 0.0);
    std::vector<std::size_t> valid(H * W, 0);
    for (std::size_t y = 0; y < kNormRows; ++y)
        for (std::size_t x = 0; x < kNormCols; ++x) {
            const std::size_t cell = (y / f) * W + x / f;
            img[cell] += n.image.at(x, y);
            valid[cell] += n.mask.at(x, y) != kMaskInvalid ? 1 : 0;
            ++cnt.add;
        }
    const double inv_area = 1.0 / static_cast<double>(f * f);
    for (double& v : img) {
        v *= inv_area;
        ++cnt.mul;
    }

    IrisTemplate t;
    t.geometry = {bank.probe_rows, bank.probe_cols, static_cast<std::uint32_t>(bank.wavelengths.size())};
    t.code.assign(t.geometry.bits(), 0);
    t.mask.assign(t.geometry.bits(), 0);
    const std::size_t row_stride = H / bank.probe_rows;
    const std::size_t col_stride = W / bank.probe_cols;
    const int r = bank.kernel_radius;
    const int kn = 2 * r + 1;

    for (std::size_t s = 0; s < bank.wavelengths.size(); ++s) {
        const Kernel k = gabor_kernel(bank, bank.wavelengths[s]);
        const double thr = bank.amplitude_threshold * k.max_response;
        for (std::size_t pr = 0; pr < bank.probe_rows; ++pr) {
            const std::size_t py = pr * row_stride + row_stride / 2;
            for (std::size_t pc = 0; pc < bank.probe_cols; ++pc) {
                const std::size_t px = pc * col_stride + col_stride / 2;
                double re = 0.0;
                double im = 0.0;
                for (int v = -r; v <= r; ++v) {
                    // rows clamp, columns wrap around the circle
                    const auto yy = static_cast<std::size_t>(
                        std::clamp(static_cast<long>(py) + v, 0L, static_cast<long>(H) - 1));
                    for (int u = -r; u <= r; ++u) {
                        const std::size_t xx = (px + W + static_cast<std::size_t>(u + static_cast<int>(W))) % W;
                        const double p = img[yy * W + xx];
                        const std::size_t i = (v + r) * kn + (u + r);
                        re += k.re[i] * p;
                        im += k.im[i] * p;
                    }
                }
                cnt.mul += 2 * kn * kn;
                cnt.add += 2 * kn * kn;
                const double amp2 = re * re + im * im;
                cnt.mul += 2;
                cnt.add += 1;
                cnt.cmp += 1;
                const bool usable = amp2 >= thr * thr && amp2 > 0.0 && 2 * valid[py * W + px] >= f * f;
                const std::size_t b0 = bit_index(t.geometry, pr, pc, s, 0);
                t.code[b0] = re > 0.0 ? 1 : 0;
                t.code[b0 + 1] = im > 0.0 ? 1 : 0;
                cnt.cmp += 2;
                t.mask[b0] = t.mask[b0 + 1] = usable ? 1 : 0;
            }
        }
    }
    return t;
}

IrisTemplate shift_columns(const IrisTemplate& t, int s)
{
    t.validate();
    IrisTemplate out = t;
    const auto& g = t.geometry;
    const long cols = g.cols;
    for (std::size_t row = 0; row < g.rows; ++row)
        for (long col = 0; col < cols; ++col) {
            const auto src = static_cast<std::size_t>(((col - s) % cols + cols) % cols);
            for (std::size_t sc = 0; sc < g.scales; ++sc)
                for (std::size_t b = 0; b < 2; ++b) {
                    out.code[bit_index(g, row, static_cast<std::size_t>(col), sc, b)] = t.code[bit_index(g, row, src, sc, b)];
                    out.mask[bit_index(g, row, static_cast<std::size_t>(col), sc, b)] = t.mask[bit_index(g, row, src, sc, b)];
                }
        }
    return out;
}

MatchResult match(const IrisTemplate& a, const IrisTemplate& b, int max_shift, IrisCodeCounter* counter)
{
    a.validate();
    b.validate();
    if (!(a.geometry == b.geometry))
        throw MatchError("templates have different geometry");
    if (max_shift < 0)
        throw std::invalid_argument("max_shift must be non-negative");
    IrisCodeCounter local;
    IrisCodeCounter& cnt = counter ? *counter : local;
    const auto& g = a.geometry;
    const long cols = g.cols;
    const std::size_t per_col = g.scales * 2;

    MatchResult best;
    bool found = false;
    // 0, -1, +1, -2, +2, ... so ties go to the smallest rotation
    for (int k = 0; k <= 2 * max_shift; ++k) {
        const int s = (k % 2 == 1) ? -(k + 1) / 2 : k / 2;
        std::size_t diff = 0;
        std::size_t joint = 0;
        for (std::size_t row = 0; row < g.rows; ++row)
            for (long col = 0; col < cols; ++col) {
                const auto src = static_cast<std::size_t>(((col - s) % cols + cols) % cols);
                const std::size_t ia = (row * g.cols + src) * per_col;
                const std::size_t ib = (row * g.cols + static_cast<std::size_t>(col)) * per_col;
                for (std::size_t q = 0; q < per_col; ++q) {
                    const unsigned m = a.mask[ia + q] & b.mask[ib + q];
                    const unsigned d = (a.code[ia + q] ^ b.code[ib + q]) & m;
                    joint += m;
                    diff += d;
                }
            }
        cnt.bitop += 3 * g.bits();
        cnt.add += 2 * g.bits();
        if (joint == 0)
            continue;
        const double hd = static_cast<double>(diff) / static_cast<double>(joint);
        ++cnt.mul;
        ++cnt.cmp;
        if (!found || hd < best.hd) {
            best = {hd, s, joint};
            found = true;
        }
    }
    if (!found)
        throw MatchError("no jointly valid bits at any shift");
    return best;
}

std::uint64_t encode_flops(const GaborBank& bank)
{
    check_bank(bank);
    const std::uint64_t f = bank.downsample;
    const std::uint64_t cells = (kNormRows / f) * (kNormCols / f);
    const std::uint64_t taps = static_cast<std::uint64_t>(2 * bank.kernel_radius + 1) * (2 * bank.kernel_radius + 1);
    const std::uint64_t probes = static_cast<std::uint64_t>(bank.probe_rows) * bank.probe_cols * bank.wavelengths.size();
    return kNormRows * kNormCols + cells + probes * (4 * taps + 4 + 2);
}

std::uint64_t match_flops(const TemplateGeometry& g, int max_shift)
{
    const std::uint64_t shifts = 2 * static_cast<std::uint64_t>(max_shift) + 1;
    return shifts * (5 * g.bits() + 2);
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v)
{
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in)
{
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw std::runtime_error("template file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_bits(std::ostream& out, const std::vector<std::uint8_t>& bits)
{
    std::vector<char> packed((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i])
            packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
    out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
}

std::vector<std::uint8_t> get_bits(std::istream& in, std::size_t n)
{
    std::vector<char> packed((n + 7) / 8);
    in.read(packed.data(), static_cast<std::streamsize>(packed.size()));
    if (!in)
        throw std::runtime_error("template file truncated");
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i)
        bits[i] = (static_cast<unsigned char>(packed[i / 8]) >> (i % 8)) & 1u;
    return bits;
}

}  // namespace

void write_template(std::ostream& out, const IrisTemplate& t)
{
    t.validate();
    out.write(kTemplateMagic, 4);
    put_u32(out, kTemplateVersion);
    put_u32(out, t.geometry.rows);
    put_u32(out, t.geometry.cols);
    put_u32(out, t.geometry.scales);
    put_bits(out, t.code);
    put_bits(out, t.mask);
    if (!out)
        throw std::runtime_error("failed to write template");
}

IrisTemplate read_template(std::istream& in)
{
    char magic[4];
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kTemplateMagic))
        throw std::runtime_error("not an iris template file");
    if (get_u32(in) != kTemplateVersion)
        throw std::runtime_error("unsupported template version");
    IrisTemplate t;
    t.geometry.rows = get_u32(in);
    t.geometry.cols = get_u32(in);
    t.geometry.scales = get_u32(in);
    if (t.geometry.bits() == 0 || t.geometry.bits() > (1u << 24))
        throw std::runtime_error("implausible template geometry");
    t.code = get_bits(in, t.geometry.bits());
    t.mask = get_bits(in, t.geometry.bits());
    return t;
}

void save_template(const std::filesystem::path& path, const IrisTemplate& t)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    write_template(out, t);
}

IrisTemplate load_template(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_template(in);
}

}  // namespace irisnas
