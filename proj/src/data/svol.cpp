#include "freqseg/data/svol.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace freqseg {

namespace {

using Kind = SvolError::Kind;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::vector<std::uint8_t> header(SvolDtype dtype, const Extents& e) {
    std::vector<std::uint8_t> out{'S', 'V', 'O', 'L', kSvolVersion,
                                  static_cast<std::uint8_t>(dtype), 0, 0};
    for (std::size_t n : e) put_u64(out, n);
    return out;
}

struct Header {
    SvolDtype dtype;
    Extents extents;
};

Header parse_header(std::span<const std::uint8_t> bytes, SvolDtype expected) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SVOL", 4) != 0)
        throw SvolError(Kind::BadMagic, "not an SVOL file (bad magic)");
    if (bytes.size() < kSvolHeaderSize)
        throw SvolError(Kind::BadHeader, "SVOL header truncated");
    if (bytes[4] != kSvolVersion)
        throw SvolError(Kind::UnsupportedVersion,
                        "unsupported SVOL version " + std::to_string(bytes[4]));
    const std::uint8_t dt = bytes[5];
    if (dt != static_cast<std::uint8_t>(SvolDtype::F32) && dt != static_cast<std::uint8_t>(SvolDtype::U8))
        throw SvolError(Kind::BadHeader, "unknown SVOL dtype " + std::to_string(dt));
    if (bytes[6] != 0 || bytes[7] != 0) throw SvolError(Kind::BadHeader, "SVOL reserved bytes not zero");
    if (dt != static_cast<std::uint8_t>(expected))
        throw SvolError(Kind::DtypeMismatch, expected == SvolDtype::F32
                                                 ? "expected an f32 volume, file holds a u8 mask"
                                                 : "expected a u8 mask, file holds an f32 volume");
    Header h{static_cast<SvolDtype>(dt), {}};
    for (int a = 0; a < 3; ++a) {
        const std::uint64_t n = get_u64(bytes.data() + 8 + 8 * a);
        if (n < 2 || n > (std::uint64_t{1} << 20))
            throw SvolError(Kind::BadHeader, "SVOL extent " + std::to_string(n) + " out of range");
        h.extents[a] = static_cast<std::size_t>(n);
    }
    const std::size_t elem = expected == SvolDtype::F32 ? 4 : 1;
    const std::size_t want = kSvolHeaderSize + voxel_count(h.extents) * elem;
    if (bytes.size() < want)
        throw SvolError(Kind::TruncatedPayload, "SVOL payload truncated: " + std::to_string(bytes.size()) +
                                                    " bytes, need " + std::to_string(want));
    if (bytes.size() > want)
        throw SvolError(Kind::TrailingBytes, "SVOL file has " + std::to_string(bytes.size() - want) +
                                                 " trailing bytes");
    return h;
}

}  // namespace

std::vector<std::uint8_t> encode_svol(const Volume& v) {
    std::vector<std::uint8_t> out = header(SvolDtype::F32, v.extents());
    out.reserve(kSvolHeaderSize + 4 * v.size());
    for (double x : v.data()) {
        const auto f = static_cast<float>(x);
        if (!std::isfinite(f)) throw ValueError("volume value overflows f32");
        const auto bits = std::bit_cast<std::uint32_t>(f);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    return out;
}

std::vector<std::uint8_t> encode_svol(const Mask& m) {
    std::vector<std::uint8_t> out = header(SvolDtype::U8, m.extents());
    out.insert(out.end(), m.labels().begin(), m.labels().end());
    return out;
}

Volume decode_svol_volume(std::span<const std::uint8_t> bytes) {
    const Header h = parse_header(bytes, SvolDtype::F32);
    std::vector<double> data(voxel_count(h.extents));
    const std::uint8_t* p = bytes.data() + kSvolHeaderSize;
    for (std::size_t i = 0; i < data.size(); ++i, p += 4) {
        const std::uint32_t bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                                   std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
        data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return Volume(h.extents, std::move(data));
}

Mask decode_svol_mask(std::span<const std::uint8_t> bytes) {
    const Header h = parse_header(bytes, SvolDtype::U8);
    const auto* p = bytes.data() + kSvolHeaderSize;
    return Mask(h.extents, std::vector<std::uint8_t>(p, p + voxel_count(h.extents)));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SvolError(Kind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SvolError(Kind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw SvolError(Kind::Io, "write failed for " + path.string());
}

void write_svol(const std::filesystem::path& path, const Volume& v) { write_file_bytes(path, encode_svol(v)); }
void write_svol(const std::filesystem::path& path, const Mask& m) { write_file_bytes(path, encode_svol(m)); }
Volume read_svol_volume(const std::filesystem::path& path) { return decode_svol_volume(read_file_bytes(path)); }
Mask read_svol_mask(const std::filesystem::path& path) { return decode_svol_mask(read_file_bytes(path)); }

}  // namespace freqseg
