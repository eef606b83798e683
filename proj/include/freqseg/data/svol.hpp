#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "freqseg/data/volume.hpp"
#include "freqseg/error.hpp"

namespace freqseg {

// SVOL layout (little-endian):
//   0..3   magic "SVOL"
//   4      version (0x01)
//   5      dtype (0x01 = f32, 0x02 = u8)
//   6..7   reserved, zero
//   8..31  extents Nx, Ny, Nz as u64
//   32..   payload, row-major with z fastest

inline constexpr std::uint8_t kSvolVersion = 1;
inline constexpr std::size_t kSvolHeaderSize = 32;

enum class SvolDtype : std::uint8_t { F32 = 0x01, U8 = 0x02 };

class SvolError : public Error {
public:
    enum class Kind { Io, BadMagic, UnsupportedVersion, BadHeader, DtypeMismatch, TruncatedPayload, TrailingBytes };

    SvolError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::vector<std::uint8_t> encode_svol(const Volume& v);
std::vector<std::uint8_t> encode_svol(const Mask& m);
Volume decode_svol_volume(std::span<const std::uint8_t> bytes);
Mask decode_svol_mask(std::span<const std::uint8_t> bytes);

/// Volumes are stored as f32; values are rounded to nearest float.
void write_svol(const std::filesystem::path& path, const Volume& v);
void write_svol(const std::filesystem::path& path, const Mask& m);
Volume read_svol_volume(const std::filesystem::path& path);
Mask read_svol_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace freqseg
