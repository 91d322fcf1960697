#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advhash/network.hpp"

namespace advhash {

// Versioned little-endian container; the byte layout is documented in
// docs/formats.md. Saving carries no timestamps, so equal networks produce
// equal bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
    std::uint32_t version = kCheckpointVersion;
    std::uint64_t seed = 0;
    std::string note;  // free-form provenance, e.g. the producing command
};

std::vector<std::uint8_t> serialize_checkpoint(const Network& network, const std::string& note = "");

// Throws FormatError naming the failing section ("header", "ARCH", "LAYR 3",
// ...) on a bad magic, unsupported version, CRC mismatch, truncation or any
// parameter that does not fit the architecture.
Network deserialize_checkpoint(std::span<const std::uint8_t> bytes, CheckpointInfo* info = nullptr);

void save_checkpoint(const Network& network, const std::string& path, const std::string& note = "");
Network load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr);

}  // namespace advhash
