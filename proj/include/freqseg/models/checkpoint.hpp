#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freqseg/error.hpp"
#include "freqseg/tensor/tensor.hpp"

namespace freqseg {

/// Checkpoint layout (little-endian):
///   "FSEGCKPT" | u16 version
///   per parameter, until end of file:
///     u32 name length | name bytes | u32 ndim | u64 dims[ndim] | f64 values
inline constexpr char kCheckpointMagic[8] = {'F', 'S', 'E', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

class CheckpointError : public Error {
public:
    using Error::Error;
};

struct NamedArray {
    std::string name;
    NdArray value;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<Tensor>& params);
std::vector<NamedArray> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<Tensor>& params);
std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path);

/// Copies values into `params`; names and shapes must match one to one and
/// in order.
void restore_parameters(const std::vector<Tensor>& params, const std::vector<NamedArray>& saved);

}  // namespace freqseg
