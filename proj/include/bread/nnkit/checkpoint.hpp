#pragma once

// Binary checkpoint container. Layout (all integers little-endian):
//
//   "BREADCKPT"                       9 bytes magic
//   u8   version                      currently 1
//   u32  stage tag length, bytes      "ian" | "ansn" | "nfm" | "can" | "can_me"
//   u32  in, out, base, max, depth    NetworkSpec
//   u8   final activation             0 = sigmoid, 1 = none
//   u64  training step counter
//   u32  record count
//   record*:
//     u32 name length, name bytes
//     u32 rank, u32 dims[rank]
//     f32 values[prod(dims)]          IEEE-754 binary32, little-endian

#include "bread/nnkit/network.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bread::nn {

enum class Stage { ian, ansn, nfm, can, can_me };

std::string_view stage_name(Stage stage) noexcept;
/// Throws ConfigError for unknown tags.
Stage parse_stage(std::string_view tag);

inline constexpr std::string_view kCheckpointMagic = "BREADCKPT";
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint8_t version = kCheckpointVersion;
    Stage stage = Stage::ian;
    NetworkSpec spec;
    NetworkParams<float> params;
    std::uint64_t step = 0;

    Network<float> network() const { return Network<float>(spec, params); }

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, unsupported version, truncation, trailing
/// bytes, or parameters inconsistent with the stored spec.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bread::nn
