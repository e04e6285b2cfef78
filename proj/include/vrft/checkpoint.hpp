// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter checkpoints: a JSON header (dimensions, adapter rank and scale,
// seed, vocabulary, block layout) next to a little-endian binary file of
// 64-bit floats.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vrft/policy.hpp"

namespace vrft {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Ordered names of every serialized block: the frozen base and token
/// embedding followed by the trainable blocks.
std::vector<std::string> checkpoint_block_names();

/// Little-endian bytes of one named block.
std::vector<std::uint8_t> block_bytes(const PolicyParams& params, std::string_view name);

/// Writes `<stem>.bin` and `<stem>.json`. `config_hash` is echoed in the header.
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& stem,
                     std::string_view config_hash);

/// Reads a checkpoint written by save_checkpoint. When `expected` is given
/// its dimensions must match the header, else a SchemaError is thrown.
PolicyParams load_checkpoint(const std::filesystem::path& stem,
                             const PolicyConfig* expected = nullptr);

}  // namespace vrft
