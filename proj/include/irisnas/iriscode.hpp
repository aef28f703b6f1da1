#pragma once

// Gabor-phase IrisCode and the shift-minimized masked Hamming matcher.

#include "irisnas/iris.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace irisnas {

struct TemplateGeometry {
    std::uint32_t rows = 8;
    std::uint32_t cols = 128;
    std::uint32_t scales = 1;

    std::size_t bits() const { return 2ull * rows * cols * scales; }
    friend bool operator==(const TemplateGeometry&, const TemplateGeometry&) = default;
};

/// One bit per byte in memory; packed only on disk.
/// Bit order: ((row * cols + col) * scales + scale) * 2 + {0: real, 1: imaginary}.
struct IrisTemplate {
    TemplateGeometry geometry;
    std::vector<std::uint8_t> code;
    std::vector<std::uint8_t> mask;  // 1 = usable

    void validate() const;
    friend bool operator==(const IrisTemplate&, const IrisTemplate&) = default;
};

/// The tunable filter bank. Wavelength and sigmas are in pixels of the
/// downsampled polar image; orientation in radians from the angular axis.
struct GaborBank {
    std::vector<double> wavelengths{8.0};
    double orientation = 0.0;
    double sigma_angular = 3.0;
    double sigma_radial = 2.0;
    double amplitude_threshold = 1e-3;  // fraction of the max possible response
    // structural choices, not counted as tunable parameters
    int kernel_radius = 4;
    std::size_t downsample = 4;
    std::uint32_t probe_rows = 8;
    std::uint32_t probe_cols = 128;

    std::size_t parameter_count() const { return wavelengths.size() + 1 + 2 + 1; }
};

/// Counters filled along the encode/match loops.
struct IrisCodeCounter {
    std::uint64_t mul = 0;
    std::uint64_t add = 0;
    std::uint64_t cmp = 0;
    std::uint64_t bitop = 0;

    std::uint64_t flops() const { return mul + add + cmp + bitop; }
};

IrisTemplate encode(const NormalizedIris& n, const GaborBank& bank = {}, IrisCodeCounter* counter = nullptr);

struct MatchResult {
    double hd = 0.0;
    int best_shift = 0;
    std::size_t valid_bits = 0;
};

class MatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultMaxShift = 16;

/// Compares a shifted by s columns against b for s in [-max_shift, max_shift].
MatchResult match(const IrisTemplate& a, const IrisTemplate& b, int max_shift = kDefaultMaxShift,
                  IrisCodeCounter* counter = nullptr);

/// Circular column shift of code and mask: out[col] = in[col - s].
IrisTemplate shift_columns(const IrisTemplate& t, int s);

/// Analytic operation counts of the default path; the counters must agree.
std::uint64_t encode_flops(const GaborBank& bank);
std::uint64_t match_flops(const TemplateGeometry& g, int max_shift = kDefaultMaxShift);

void write_template(std::ostream& out, const IrisTemplate& t);
IrisTemplate read_template(std::istream& in);
void save_template(const std::filesystem::path& path, const IrisTemplate& t);
IrisTemplate load_template(const std::filesystem::path& path);

}  // namespace irisnas
