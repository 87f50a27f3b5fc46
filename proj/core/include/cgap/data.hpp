// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cgap/network.hpp"
#include "cgap/tensor.hpp"

namespace cgap {

/// Images stored N×C×H×W as float32 in [0, 1].
struct Dataset {
  InputShape shape;
  std::size_t classes = 10;
  std::vector<float> images;
  std::vector<std::int32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t image_size() const noexcept { return shape.channels * shape.height * shape.width; }

  /// First n samples (all of them when n is 0 or exceeds the size).
  Dataset head(std::size_t n) const;

  /// Gathers the listed samples into a B×C×H×W tensor and their labels.
  Tensor gather(std::span<const std::size_t> indices, std::vector<std::int32_t>& labels_out) const;
};

struct IdxHeader {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
};

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses the big-endian header of an IDX file of unsigned bytes and checks
/// that the declared item count matches the bytes that follow it.
IdxHeader read_idx_header(const std::filesystem::path& path);

/// MNIST image/label IDX pair; pixels are scaled by 1/255 only.
Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Loads train-images-idx3-ubyte/train-labels-idx1-ubyte (or the t10k pair).
Dataset load_mnist_split(const std::filesystem::path& dir, bool train);

/// Class-separable Gaussian-blob images, one channel, spatial×spatial.
/// Labels are balanced to within one sample. Deterministic per seed.
Dataset make_synthetic(std::size_t classes, std::size_t samples, std::size_t spatial,
                       std::uint64_t seed);

}  // namespace cgap
