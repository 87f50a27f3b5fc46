// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "cgap/tensor.hpp"

namespace cgap {

// Layer primitives with hand-written reverse passes. Each `*_backward` takes
// the upstream gradient of the op's output and *overwrites* the gradient
// buffers of the op's inputs: parameters always get a gradient, the data input
// only when it has a gradient buffer enabled.

/// Valid cross-correlation, stride 1, no padding.
/// input B×I×H×W, weights O×I×K×K, bias O -> B×O×(H-K+1)×(W-K+1).
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias);
void conv2d_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out_grad);

/// input B×I, weights O×I, bias O -> B×O.
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias);
void linear_backward(Tensor& input, Tensor& weights, Tensor& bias, const Tensor& out_grad);

Tensor relu(const Tensor& input);
void relu_backward(Tensor& input, const Tensor& out_grad);

/// 2×2 window, stride 2. Ties go to the first element in row-major window
/// order, both for the forward argmax and the gradient route.
Tensor maxpool2(const Tensor& input);
void maxpool2_backward(Tensor& input, const Tensor& out_grad);

/// Mean over the batch of -log softmax(logits)[label].
float softmax_cross_entropy(const Tensor& logits, std::span<const std::int32_t> labels);
/// Writes (softmax - onehot) / B into logits.grad().
void softmax_cross_entropy_backward(Tensor& logits, std::span<const std::int32_t> labels);

/// Row-wise argmax of a B×C tensor (first index on ties).
std::vector<std::int32_t> argmax_rows(const Tensor& logits);

}  // namespace cgap
