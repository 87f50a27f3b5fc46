// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cgap/scheduler.hpp"

namespace cgap {

constexpr std::uint32_t kCheckpointVersion = 1;

/// A run snapshot taken between epochs plus the canonical config it was
/// produced with.
struct Checkpoint {
  RunState state;
  std::string config_json;
};

// Layout, all integers little-endian u64 unless noted:
//   "CGAPCKPT" | u32 format version | input C H W | layer count
//   per layer: u8 kind, out, in, kernel
//   u8 flags (hard mask, pruning active, capacity reached, first prune done)
//   network version | next epoch
//   per conv/fc layer: weights, bias, weight velocity, bias velocity, mask
//     (each a count followed by f32 values; mask count is 0 without hard mask)
//   rng state string | saliency version | per layer: batches, f32 blob
//   epoch records | event lines | config JSON
// Strings are a length followed by raw bytes; f64 fields are stored as bits.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes to a sibling temp file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes `contents` atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace cgap
