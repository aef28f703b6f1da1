#include "irisnas/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace irisnas {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class U>
void put(std::ostream& out, U v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <class U>
U get(std::istream& in)
{
    U v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(U));
    if (!in)
        throw FormatError("checkpoint: truncated record");
    return v;
}

template <class T>
void put_tensor(std::ostream& out, const Tensor<T>& t)
{
    const Shape& s = t.shape();
    put<std::uint32_t>(out, 4);
    for (std::uint64_t e : {s.n, s.c, s.h, s.w})
        put<std::uint64_t>(out, e);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(T)));
}

template <class T>
Tensor<T> get_tensor(std::istream& in)
{
    const auto rank = get<std::uint32_t>(in);
    if (rank == 0 || rank > 4)
        throw FormatError("checkpoint: unsupported rank " + std::to_string(rank));
    std::uint64_t ext[4] = {1, 1, 1, 1};
    // Lower-rank tensors are right-aligned into NCHW.
    for (std::uint32_t r = 0; r < rank; ++r)
        ext[4 - rank + r] = get<std::uint64_t>(in);
    Shape s{ext[0], ext[1], ext[2], ext[3]};
    Tensor<T> t(s);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!in)
        throw FormatError("checkpoint: truncated tensor data");
    return t;
}

}  // namespace

void write_checkpoint(std::ostream& out, std::span<const CheckpointEntry> entries)
{
    out.write("IRNW", 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    for (const auto& e : entries) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        if (const auto* f = std::get_if<Tensor<float>>(&e.tensor)) {
            put<std::uint8_t>(out, static_cast<std::uint8_t>(DType::f32));
            put_tensor(out, *f);
        } else {
            put<std::uint8_t>(out, static_cast<std::uint8_t>(DType::f64));
            put_tensor(out, std::get<Tensor<double>>(e.tensor));
        }
    }
}

std::vector<CheckpointEntry> read_checkpoint(std::istream& in)
{
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "IRNW", 4) != 0)
        throw FormatError("checkpoint: bad magic");
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    std::vector<CheckpointEntry> entries;
    while (in.peek() != std::char_traits<char>::eof()) {
        CheckpointEntry e;
        const auto len = get<std::uint32_t>(in);
        e.name.resize(len);
        in.read(e.name.data(), len);
        if (!in)
            throw FormatError("checkpoint: truncated name");
        const auto dtype = static_cast<DType>(get<std::uint8_t>(in));
        if (dtype == DType::f32)
            e.tensor = get_tensor<float>(in);
        else if (dtype == DType::f64)
            e.tensor = get_tensor<double>(in);
        else
            throw FormatError("checkpoint: unknown dtype code for \"" + e.name + "\"");
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const CheckpointEntry> entries)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(out, entries);
}

std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_checkpoint(in);
}

}  // namespace irisnas
