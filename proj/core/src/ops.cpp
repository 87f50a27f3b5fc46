// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "cgap/errors.hpp"

namespace cgap {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Eigen peels vectorized loops according to buffer alignment, so products on
// maps over std::vector storage could round differently from call to call.
// All arithmetic runs on owned (aligned) matrices instead.
RowMat owned(const float* p, std::size_t rows, std::size_t cols) {
  return ConstMatMap(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void store(const RowMat& m, float* dst) { std::copy_n(m.data(), m.size(), dst); }

struct ConvGeometry {
  std::size_t batch, in, height, width, out, kernel, out_h, out_w;

  std::size_t patch() const { return in * kernel * kernel; }
  std::size_t pixels() const { return out_h * out_w; }
  std::size_t columns() const { return batch * pixels(); }
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 4 || weights.rank() != 4) {
    throw DimensionError("conv2d expects a rank-4 input " + shape_string(input.shape()) +
                         " and rank-4 weights " + shape_string(weights.shape()));
  }
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                 weights.dim(0), weights.dim(2), 0, 0};
  if (weights.dim(1) != g.in) {
    throw DimensionError("conv2d input has " + std::to_string(g.in) +
                         " channels but weights " + shape_string(weights.shape()) + " expect " +
                         std::to_string(weights.dim(1)));
  }
  if (weights.dim(3) != g.kernel) {
    throw DimensionError("conv2d kernel must be square, got " + shape_string(weights.shape()));
  }
  if (bias.size() != g.out) {
    throw DimensionError("conv2d bias has " + std::to_string(bias.size()) + " entries, expected " +
                         std::to_string(g.out));
  }
  if (g.height < g.kernel || g.width < g.kernel) {
    throw DimensionError("conv2d input " + shape_string(input.shape()) +
                         " is smaller than kernel " + std::to_string(g.kernel));
  }
  g.out_h = g.height - g.kernel + 1;
  g.out_w = g.width - g.kernel + 1;
  return g;
}

// cols is patch() × columns(), row-major; column index = b·pixels + y·out_w + x.
void im2col(const float* in, const ConvGeometry& g, float* cols) {
  const std::size_t ncols = g.columns();
  for (std::size_t i = 0; i < g.in; ++i) {
    for (std::size_t m = 0; m < g.kernel; ++m) {
      for (std::size_t n = 0; n < g.kernel; ++n) {
        float* row = cols + ((i * g.kernel + m) * g.kernel + n) * ncols;
        for (std::size_t b = 0; b < g.batch; ++b) {
          const float* plane = in + (b * g.in + i) * g.height * g.width;
          for (std::size_t y = 0; y < g.out_h; ++y) {
            const float* src = plane + (y + m) * g.width + n;
            std::copy(src, src + g.out_w, row + b * g.pixels() + y * g.out_w);
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, const ConvGeometry& g, float* in) {
  const std::size_t ncols = g.columns();
  for (std::size_t i = 0; i < g.in; ++i) {
    for (std::size_t m = 0; m < g.kernel; ++m) {
      for (std::size_t n = 0; n < g.kernel; ++n) {
        const float* row = cols + ((i * g.kernel + m) * g.kernel + n) * ncols;
        for (std::size_t b = 0; b < g.batch; ++b) {
          float* plane = in + (b * g.in + i) * g.height * g.width;
          for (std::size_t y = 0; y < g.out_h; ++y) {
            float* dst = plane + (y + m) * g.width + n;
            const float* src = row + b * g.pixels() + y * g.out_w;
            for (std::size_t x = 0; x < g.out_w; ++x) dst[x] += src[x];
          }
        }
      }
    }
  }
}

void check_linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 2 || weights.rank() != 2) {
    throw DimensionError("linear expects a rank-2 input " + shape_string(input.shape()) +
                         " and rank-2 weights " + shape_string(weights.shape()));
  }
  if (input.dim(1) != weights.dim(1)) {
    throw DimensionError("linear input width " + std::to_string(input.dim(1)) +
                         " does not match weights " + shape_string(weights.shape()));
  }
  if (bias.size() != weights.dim(0)) {
    throw DimensionError("linear bias has " + std::to_string(bias.size()) +
                         " entries, expected " + std::to_string(weights.dim(0)));
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " upstream gradient " + shape_string(b.shape()) +
                         " does not match " + shape_string(a.shape()));
  }
}

void check_labels(const Tensor& logits, std::span<const std::int32_t> labels) {
  if (logits.rank() != 2) {
    throw DimensionError("cross-entropy expects B×C logits, got " + shape_string(logits.shape()));
  }
  if (labels.size() != logits.dim(0)) {
    throw DimensionError("cross-entropy got " + std::to_string(labels.size()) +
                         " labels for a batch of " + std::to_string(logits.dim(0)));
  }
  const auto classes = static_cast<std::int32_t>(logits.dim(1));
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] < 0 || labels[b] >= classes) {
      throw Error("label", "label " + std::to_string(labels[b]) + " at position " +
                               std::to_string(b) + " is outside [0, " + std::to_string(classes) +
                               ")");
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  const ConvGeometry g = conv_geometry(input, weights, bias);
  RowMat cols(g.patch(), g.columns());
  im2col(input.raw(), g, cols.data());

  RowMat product(g.out, g.columns());
  product.noalias() = owned(weights.raw(), g.out, g.patch()) * cols;

  Tensor output({g.batch, g.out, g.out_h, g.out_w});
  float* dst = output.raw();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < g.out; ++o) {
      const float* src = product.data() + o * g.columns() + b * g.pixels();
      const float bo = bias[o];
      for (std::size_t p = 0; p < g.pixels(); ++p) *dst++ = src[p] + bo;
    }
  }
  return output;
}

void conv2d_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out_grad) {
  const ConvGeometry g = conv_geometry(input, weights, bias);
  if (out_grad.shape() != Shape{g.batch, g.out, g.out_h, g.out_w}) {
    throw DimensionError("conv2d upstream gradient " + shape_string(out_grad.shape()) +
                         " does not match output [" + std::to_string(g.batch) + "x" +
                         std::to_string(g.out) + "x" + std::to_string(g.out_h) + "x" +
                         std::to_string(g.out_w) + "]");
  }
  weights.enable_grad();
  bias.enable_grad();

  RowMat grad_mat(g.out, g.columns());
  const float* src = out_grad.raw();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < g.out; ++o) {
      std::copy(src, src + g.pixels(), grad_mat.data() + o * g.columns() + b * g.pixels());
      src += g.pixels();
    }
  }

  RowMat cols(g.patch(), g.columns());
  im2col(input.raw(), g, cols.data());

  RowMat dw(g.out, g.patch());
  dw.noalias() = grad_mat * cols.transpose();
  store(dw, weights.grad().data());
  auto db = bias.grad();
  for (std::size_t o = 0; o < g.out; ++o) db[o] = grad_mat.row(o).sum();

  if (input.has_grad()) {
    RowMat dcols(g.patch(), g.columns());
    dcols.noalias() = owned(weights.raw(), g.out, g.patch()).transpose() * grad_mat;
    auto din = input.grad();
    std::fill(din.begin(), din.end(), 0.0f);
    col2im_add(dcols.data(), g, din.data());
  }
}

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  check_linear(input, weights, bias);
  const std::size_t batch = input.dim(0), in = input.dim(1), out = weights.dim(0);
  Tensor output({batch, out});
  RowMat y(batch, out);
  y.noalias() = owned(input.raw(), batch, in) * owned(weights.raw(), out, in).transpose();
  y.rowwise() += Eigen::RowVectorXf(owned(bias.raw(), 1, out));
  store(y, output.raw());
  return output;
}

void linear_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out_grad) {
  check_linear(input, weights, bias);
  const std::size_t batch = input.dim(0), in = input.dim(1), out = weights.dim(0);
  if (out_grad.shape() != Shape{batch, out}) {
    throw DimensionError("linear upstream gradient " + shape_string(out_grad.shape()) +
                         " does not match output [" + std::to_string(batch) + "x" +
                         std::to_string(out) + "]");
  }
  weights.enable_grad();
  bias.enable_grad();
  const RowMat g = owned(out_grad.raw(), batch, out);
  const RowMat x = owned(input.raw(), batch, in);
  RowMat dw(out, in);
  dw.noalias() = g.transpose() * x;
  store(dw, weights.grad().data());
  store(g.colwise().sum(), bias.grad().data());
  if (input.has_grad()) {
    RowMat dx(batch, in);
    dx.noalias() = g * owned(weights.raw(), out, in);
    store(dx, input.grad().data());
  }
}

Tensor relu(const Tensor& input) {
  Tensor output(input.shape());
  std::transform(input.values().begin(), input.values().end(), output.values().begin(),
                 [](float v) { return v > 0.0f ? v : 0.0f; });
  return output;
}

void relu_backward(Tensor& input, const Tensor& out_grad) {
  check_same_shape(input, out_grad, "relu");
  input.enable_grad();
  auto din = input.grad();
  const auto x = input.data();
  const auto g = out_grad.data();
  for (std::size_t i = 0; i < din.size(); ++i) din[i] = x[i] > 0.0f ? g[i] : 0.0f;
}

namespace {

void check_pool(const Tensor& input) {
  if (input.rank() != 4) {
    throw DimensionError("maxpool2 expects a rank-4 input, got " + shape_string(input.shape()));
  }
  if (input.dim(2) % 2 != 0 || input.dim(3) % 2 != 0) {
    throw DimensionError("maxpool2 needs even spatial dims, got " + shape_string(input.shape()));
  }
}

// Offset (within the plane) of the first maximum of window (y, x).
inline std::size_t window_argmax(const float* plane, std::size_t width, std::size_t y,
                                 std::size_t x) {
  const std::size_t base = 2 * y * width + 2 * x;
  const std::size_t cand[4] = {base, base + 1, base + width, base + width + 1};
  std::size_t best = cand[0];
  for (int k = 1; k < 4; ++k) {
    if (plane[cand[k]] > plane[best]) best = cand[k];
  }
  return best;
}

}  // namespace

Tensor maxpool2(const Tensor& input) {
  check_pool(input);
  const std::size_t planes = input.dim(0) * input.dim(1);
  const std::size_t h = input.dim(2), w = input.dim(3), oh = h / 2, ow = w / 2;
  Tensor output({input.dim(0), input.dim(1), oh, ow});
  float* dst = output.raw();
  for (std::size_t p = 0; p < planes; ++p) {
    const float* plane = input.raw() + p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) *dst++ = plane[window_argmax(plane, w, y, x)];
    }
  }
  return output;
}

void maxpool2_backward(Tensor& input, const Tensor& out_grad) {
  check_pool(input);
  const std::size_t planes = input.dim(0) * input.dim(1);
  const std::size_t h = input.dim(2), w = input.dim(3), oh = h / 2, ow = w / 2;
  if (out_grad.shape() != Shape{input.dim(0), input.dim(1), oh, ow}) {
    throw DimensionError("maxpool2 upstream gradient " + shape_string(out_grad.shape()) +
                         " does not match pooled " + shape_string(input.shape()));
  }
  input.enable_grad();
  auto din = input.grad();
  std::fill(din.begin(), din.end(), 0.0f);
  const float* g = out_grad.raw();
  for (std::size_t p = 0; p < planes; ++p) {
    const float* plane = input.raw() + p * h * w;
    float* dplane = din.data() + p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) dplane[window_argmax(plane, w, y, x)] += *g++;
    }
  }
}

float softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels) {
  check_labels(logits, labels);
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  float total = 0.0f;
  for (std::size_t b = 0; b < batch; ++b) {
    const float* row = logits.raw() + b * classes;
    const float top = *std::max_element(row, row + classes);
    float sum = 0.0f;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - top);
    total += std::log(sum) - (row[labels[b]] - top);
  }
  return total / static_cast<float>(batch);
}

void softmax_cross_entropy_backward(Tensor& logits, std::span<const std::int32_t> labels) {
  check_labels(logits, labels);
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  logits.enable_grad();
  auto grad = logits.grad();
  const float inv_batch = 1.0f / static_cast<float>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const float* row = logits.raw() + b * classes;
    float* g = grad.data() + b * classes;
    const float top = *std::max_element(row, row + classes);
    float sum = 0.0f;
    for (std::size_t c = 0; c < classes; ++c) {
      g[c] = std::exp(row[c] - top);
      sum += g[c];
    }
    for (std::size_t c = 0; c < classes; ++c) g[c] = g[c] / sum * inv_batch;
    g[labels[b]] -= inv_batch;
  }
}

std::vector<std::int32_t> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) {
    throw DimensionError("argmax_rows expects B×C, got " + shape_string(logits.shape()));
  }
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  std::vector<std::int32_t> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const float* row = logits.raw() + b * classes;
    out[b] = static_cast<std::int32_t>(std::max_element(row, row + classes) - row);
  }
  return out;
}

}  // namespace cgap
