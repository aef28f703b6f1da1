#pragma once

// Binary weight files: "IRNW", u32 version, then records of
//   u32 name length, UTF-8 name, u8 dtype, u32 rank, u64 extents[rank], raw values
// all little-endian, until end of file.

#include "irisnas/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace irisnas {

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

struct CheckpointEntry {
    std::string name;
    std::variant<Tensor<float>, Tensor<double>> tensor;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, std::span<const CheckpointEntry> entries);
std::vector<CheckpointEntry> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, std::span<const CheckpointEntry> entries);
std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path);

}  // namespace irisnas
