#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qbrain/model.hpp"

namespace qbrain {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// QBCK layout, little-endian:
//   "QBCK" | version u32 | tensor count u32
//   per tensor: name length u32 | name bytes | rank u32 | dims u32 x rank | float64 data
//   config echo length u32 | config echo bytes (key=value lines)
struct Checkpoint {
    EncoderParams params;
    std::string config_echo;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace qbrain
