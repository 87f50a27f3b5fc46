// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgap/errors.hpp"

namespace cgap {

std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_volume(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

void Tensor::enable_grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0f);
}

void Tensor::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0f);
}

std::span<float> Tensor::grad() {
  if (!grad_) throw StateError("tensor " + shape_string(shape_) + " has no gradient buffer");
  return *grad_;
}

std::span<const float> Tensor::grad() const {
  if (!grad_) throw StateError("tensor " + shape_string(shape_) + " has no gradient buffer");
  return *grad_;
}

Tensor Tensor::take_grad() {
  if (!grad_) throw StateError("tensor " + shape_string(shape_) + " has no gradient buffer");
  Tensor out(shape_, std::move(*grad_));
  grad_.reset();
  return out;
}

void Tensor::reshape(Shape shape) {
  if (shape_volume(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

void Tensor::assign(Shape shape, std::vector<float> values) {
  if (values.size() != shape_volume(shape)) {
    throw DimensionError("tensor data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(shape));
  }
  shape_ = std::move(shape);
  data_ = std::move(values);
  grad_.reset();
}

bool Tensor::all_finite() const {
  const auto finite = [](float v) { return std::isfinite(v); };
  if (!std::all_of(data_.begin(), data_.end(), finite)) return false;
  return !grad_ || std::all_of(grad_->begin(), grad_->end(), finite);
}

}  // namespace cgap
