// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "cgap/errors.hpp"
#include "cgap/rng.hpp"

namespace cgap {
namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Reason::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

struct IdxFile {
  IdxHeader header;
  std::vector<unsigned char> bytes;
  std::size_t payload_offset = 0;
};

IdxFile parse_idx(const std::filesystem::path& path) {
  IdxFile f;
  f.bytes = read_file(path);
  if (f.bytes.size() < 4) {
    throw LoadError(LoadError::Reason::Truncated, path.string() + ": missing IDX magic");
  }
  f.header.magic = read_be32(f.bytes.data());
  if ((f.header.magic & 0xFFFFFF00u) != 0x00000800u) {
    throw LoadError(LoadError::Reason::BadMagic,
                    path.string() + ": not an unsigned-byte IDX file (magic " +
                        std::to_string(f.header.magic) + ")");
  }
  const std::size_t rank = f.header.magic & 0xFFu;
  if (f.bytes.size() < 4 + 4 * rank) {
    throw LoadError(LoadError::Reason::Truncated, path.string() + ": truncated IDX header");
  }
  std::size_t items = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    f.header.dims.push_back(read_be32(f.bytes.data() + 4 + 4 * i));
    items *= f.header.dims.back();
  }
  f.payload_offset = 4 + 4 * rank;
  const std::size_t remaining = f.bytes.size() - f.payload_offset;
  if (remaining < items) {
    throw LoadError(LoadError::Reason::Truncated,
                    path.string() + ": header declares " + std::to_string(items) +
                        " bytes of data but only " + std::to_string(remaining) + " follow");
  }
  if (remaining > items) {
    throw LoadError(LoadError::Reason::SizeMismatch,
                    path.string() + ": header declares " + std::to_string(items) +
                        " bytes of data but " + std::to_string(remaining) + " follow");
  }
  return f;
}

}  // namespace

Dataset Dataset::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  Dataset out{shape, classes, {}, {}};
  out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n * image_size()));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Tensor Dataset::gather(std::span<const std::size_t> indices,
                       std::vector<std::int32_t>& labels_out) const {
  const std::size_t stride = image_size();
  std::vector<float> values(indices.size() * stride);
  labels_out.resize(indices.size());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::size_t i = indices[b];
    std::copy_n(images.begin() + static_cast<std::ptrdiff_t>(i * stride), stride,
                values.begin() + static_cast<std::ptrdiff_t>(b * stride));
    labels_out[b] = labels[i];
  }
  return Tensor({indices.size(), shape.channels, shape.height, shape.width}, std::move(values));
}

IdxHeader read_idx_header(const std::filesystem::path& path) { return parse_idx(path).header; }

Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxFile img = parse_idx(images);
  const IdxFile lab = parse_idx(labels);
  if (img.header.magic != kIdxImageMagic || img.header.dims.size() != 3) {
    throw LoadError(LoadError::Reason::BadMagic,
                    images.string() + ": expected image magic 0x00000803");
  }
  if (lab.header.magic != kIdxLabelMagic || lab.header.dims.size() != 1) {
    throw LoadError(LoadError::Reason::BadMagic,
                    labels.string() + ": expected label magic 0x00000801");
  }
  const std::size_t n = img.header.dims[0];
  if (lab.header.dims[0] != n) {
    throw LoadError(LoadError::Reason::CountMismatch,
                    std::to_string(n) + " images but " + std::to_string(lab.header.dims[0]) +
                        " labels");
  }
  Dataset d;
  d.shape = {1, img.header.dims[1], img.header.dims[2]};
  d.classes = 10;
  d.images.resize(n * d.image_size());
  const unsigned char* px = img.bytes.data() + img.payload_offset;
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    d.images[i] = static_cast<float>(px[i]) / 255.0f;
  }
  d.labels.resize(n);
  const unsigned char* lb = lab.bytes.data() + lab.payload_offset;
  for (std::size_t i = 0; i < n; ++i) {
    if (lb[i] >= d.classes) {
      throw LoadError(LoadError::Reason::SizeMismatch,
                      labels.string() + ": label " + std::to_string(lb[i]) + " out of range");
    }
    d.labels[i] = lb[i];
  }
  return d;
}

Dataset load_mnist_split(const std::filesystem::path& dir, bool train) {
  const std::string prefix = train ? "train" : "t10k";
  return load_mnist(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"));
}

Dataset make_synthetic(std::size_t classes, std::size_t samples, std::size_t spatial,
                       std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.shape = {1, spatial, spatial};
  d.classes = classes;
  d.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) d.labels[i] = static_cast<std::int32_t>(i % classes);
  rng.shuffle(d.labels);

  // Class centres on a circle around the image centre.
  const double mid = (static_cast<double>(spatial) - 1.0) / 2.0;
  const double radius = static_cast<double>(spatial) / 4.0;
  const double width = std::max(1.0, static_cast<double>(spatial) / 8.0);
  d.images.resize(samples * spatial * spatial);
  for (std::size_t i = 0; i < samples; ++i) {
    const double angle = 2.0 * std::numbers::pi * d.labels[i] / static_cast<double>(classes);
    const double cy = mid + radius * std::sin(angle) + 0.5 * rng.normal();
    const double cx = mid + radius * std::cos(angle) + 0.5 * rng.normal();
    float* img = d.images.data() + i * spatial * spatial;
    for (std::size_t y = 0; y < spatial; ++y) {
      for (std::size_t x = 0; x < spatial; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width)) +
                         0.05 * rng.normal();
        img[y * spatial + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return d;
}

}  // namespace cgap
