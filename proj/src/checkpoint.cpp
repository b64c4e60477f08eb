#include "p2emec/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace p2emec {

namespace {

constexpr char kMagic[8] = {'P', '2', 'E', 'M', 'E', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamRefs& params,
                     const std::string& tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_string(out, tag);
    write_u32(out, static_cast<std::uint32_t>(params.slots.size()));
    for (std::size_t i = 0; i < params.slots.size(); ++i) {
        write_string(out, params.names[i]);
        const auto& data = *params.slots[i];
        write_u64(out, data.size());
        static_assert(sizeof(double) == 8);
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

std::string load_checkpoint(const std::filesystem::path& path, const ParamRefs& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const std::string tag = read_string(in);
    const std::uint32_t count = read_u32(in);
    if (count != params.slots.size())
        throw std::runtime_error("checkpoint tensor count mismatch");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = read_string(in);
        if (name != params.names[i])
            throw std::runtime_error("checkpoint tensor name mismatch: expected " + params.names[i] +
                                     ", found " + name);
        const std::uint64_t n = read_u64(in);
        auto& data = *params.slots[i];
        if (n != data.size())
            throw std::runtime_error("checkpoint tensor size mismatch for " + name);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!in) throw std::runtime_error("checkpoint truncated: " + path.string());
    return tag;
}

}  // namespace p2emec
