// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/network.hpp"

#include <algorithm>
#include <cmath>

#include "cgap/errors.hpp"
#include "cgap/ops.hpp"

namespace cgap {
namespace {

// Views a buffer as rows × units × block and inserts/removes one unit's
// block in every row.
std::vector<float> insert_block(const std::vector<float>& v, std::size_t rows, std::size_t units,
                                std::size_t block, std::size_t pos,
                                std::span<const float> slice) {
  std::vector<float> out;
  out.reserve(v.size() + rows * block);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = v.begin() + static_cast<std::ptrdiff_t>(r * units * block);
    const auto split = row + static_cast<std::ptrdiff_t>(pos * block);
    out.insert(out.end(), row, split);
    out.insert(out.end(), slice.begin() + static_cast<std::ptrdiff_t>(r * block),
               slice.begin() + static_cast<std::ptrdiff_t>((r + 1) * block));
    out.insert(out.end(), split, row + static_cast<std::ptrdiff_t>(units * block));
  }
  return out;
}

std::vector<float> remove_block(const std::vector<float>& v, std::size_t rows,
                                std::size_t units, std::size_t block, std::size_t pos) {
  std::vector<float> out;
  out.reserve(v.size() - rows * block);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = v.begin() + static_cast<std::ptrdiff_t>(r * units * block);
    out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(pos * block));
    out.insert(out.end(), row + static_cast<std::ptrdiff_t>((pos + 1) * block),
               row + static_cast<std::ptrdiff_t>(units * block));
  }
  return out;
}

Shape weight_shape(const LayerState& l) {
  return l.kind == LayerKind::Conv ? Shape{l.out, l.in, l.kernel, l.kernel} : Shape{l.out, l.in};
}

// Rebuilds every tensor of `l` from new flat buffers; gradient buffers are
// reallocated to the new shape.
void reshape_layer(LayerState& l, std::vector<float> w, std::vector<float> b,
                   std::vector<float> wv, std::vector<float> bv, std::vector<float> mask) {
  const Shape ws = weight_shape(l);
  l.weights.assign(ws, std::move(w));
  l.weights.enable_grad();
  l.bias.assign({l.out}, std::move(b));
  l.bias.enable_grad();
  l.weight_velocity.assign(ws, std::move(wv));
  l.bias_velocity.assign({l.out}, std::move(bv));
  if (!mask.empty()) l.mask.assign(ws, std::move(mask));
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Fc: return "fc";
    case LayerKind::Relu: return "relu";
    case LayerKind::Pool: return "pool";
    case LayerKind::Flatten: return "flatten";
  }
  return "unknown";
}

LayerState LayerState::conv(std::size_t out, std::size_t in, std::size_t kernel) {
  LayerState l;
  l.kind = LayerKind::Conv;
  l.out = out;
  l.in = in;
  l.kernel = kernel;
  const Shape ws{out, in, kernel, kernel};
  l.weights = Tensor(ws);
  l.weights.enable_grad();
  l.bias = Tensor({out});
  l.bias.enable_grad();
  l.weight_velocity = Tensor(ws);
  l.bias_velocity = Tensor({out});
  return l;
}

LayerState LayerState::fc(std::size_t out, std::size_t in) {
  LayerState l;
  l.kind = LayerKind::Fc;
  l.out = out;
  l.in = in;
  l.weights = Tensor({out, in});
  l.weights.enable_grad();
  l.bias = Tensor({out});
  l.bias.enable_grad();
  l.weight_velocity = Tensor({out, in});
  l.bias_velocity = Tensor({out});
  return l;
}

Network::Network(InputShape input, std::vector<LayerState> layers)
    : input_(input), layers_(std::move(layers)) {
  for (auto& l : layers_) {
    if (!l.parameterized()) continue;
    l.weights.enable_grad();
    l.bias.enable_grad();
    if (l.weight_velocity.shape() != l.weights.shape()) l.weight_velocity = Tensor(l.weights.shape());
    if (l.bias_velocity.shape() != l.bias.shape()) l.bias_velocity = Tensor(l.bias.shape());
    if (!l.mask.empty()) hard_mask_ = true;
  }
  update_geometry();
  validate();
}

std::vector<std::size_t> Network::param_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].parameterized()) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Network::widths() const {
  std::vector<std::size_t> out;
  for (const auto& l : layers_) {
    if (l.parameterized()) out.push_back(l.out);
  }
  return out;
}

std::vector<std::size_t> Network::growable_layers() const {
  auto out = param_layers();
  if (!out.empty()) out.pop_back();
  return out;
}

std::string Network::layer_name(std::size_t index) const {
  const LayerKind kind = layers_.at(index).kind;
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i <= index; ++i) {
    if (layers_[i].kind == kind) ++ordinal;
  }
  return std::string(layer_kind_name(kind)) + std::to_string(ordinal);
}

std::optional<std::size_t> Network::find_layer(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layer_name(i) == name) return i;
  }
  return std::nullopt;
}

Architecture Network::architecture() const {
  Architecture arch{input_, {}};
  for (const auto& l : layers_) arch.layers.push_back(l.spec());
  return arch;
}

std::optional<std::size_t> Network::consumer_of(std::size_t index) const {
  for (std::size_t i = index + 1; i < layers_.size(); ++i) {
    if (layers_[i].parameterized()) return i;
  }
  return std::nullopt;
}

std::size_t Network::consumer_block(std::size_t index) const {
  const auto consumer = consumer_of(index);
  if (!consumer) return 0;
  const LayerState& c = layers_[*consumer];
  if (c.kind == LayerKind::Conv) return c.kernel * c.kernel;
  return layers_[index].kind == LayerKind::Conv ? flatten_spatial_ : 1;
}

void Network::update_geometry() {
  std::size_t h = input_.height, w = input_.width;
  flatten_spatial_ = 1;
  for (const auto& l : layers_) {
    if (l.kind == LayerKind::Conv) {
      if (h < l.kernel || w < l.kernel) return;  // validate() reports it
      h = h - l.kernel + 1;
      w = w - l.kernel + 1;
    } else if (l.kind == LayerKind::Pool) {
      h /= 2;
      w /= 2;
    } else if (l.kind == LayerKind::Flatten) {
      flatten_spatial_ = h * w;
    }
  }
}

void Network::validate() const {
  if (layers_.empty()) throw DimensionError("network has no layers");
  std::size_t channels = input_.channels, h = input_.height, w = input_.width;
  std::size_t features = 0;
  bool flat = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerState& l = layers_[i];
    const std::string name = layer_name(i);
    switch (l.kind) {
      case LayerKind::Conv:
        if (flat) throw DimensionError(name + " follows a flatten layer");
        if (l.in != channels) {
          throw DimensionError(name + " expects I=" + std::to_string(l.in) +
                               " input channels but the layer below produces " +
                               std::to_string(channels));
        }
        if (h < l.kernel || w < l.kernel) {
          throw DimensionError(name + " kernel " + std::to_string(l.kernel) +
                               " exceeds its " + std::to_string(h) + "x" + std::to_string(w) +
                               " input");
        }
        h = h - l.kernel + 1;
        w = w - l.kernel + 1;
        channels = l.out;
        break;
      case LayerKind::Pool:
        if (flat || h % 2 || w % 2) {
          throw DimensionError(name + " needs an even spatial input, got " + std::to_string(h) +
                               "x" + std::to_string(w));
        }
        h /= 2;
        w /= 2;
        break;
      case LayerKind::Flatten:
        if (flat) throw DimensionError(name + " repeats a flatten");
        flat = true;
        features = channels * h * w;
        break;
      case LayerKind::Fc:
        if (!flat) throw DimensionError(name + " needs a flatten layer below it");
        if (l.in != features) {
          throw DimensionError(name + " expects I=" + std::to_string(l.in) +
                               " inputs but the layer below produces " + std::to_string(features));
        }
        features = l.out;
        break;
      case LayerKind::Relu:
        break;
    }
    if (l.parameterized()) {
      if (l.out == 0) throw LayerCollapseError(name + " has no units");
      if (l.weights.shape() != weight_shape(l) || l.bias.size() != l.out) {
        throw DimensionError(name + " weights " + shape_string(l.weights.shape()) +
                             " do not match declared O=" + std::to_string(l.out) +
                             " I=" + std::to_string(l.in));
      }
      if (l.weight_velocity.shape() != l.weights.shape() ||
          l.bias_velocity.shape() != l.bias.shape()) {
        throw DimensionError(name + " momentum buffers are out of sync with its weights");
      }
      if (!l.mask.empty() && l.mask.shape() != l.weights.shape()) {
        throw DimensionError(name + " mask is out of sync with its weights");
      }
    }
  }
  if (layers_.back().kind != LayerKind::Fc) throw DimensionError("the last layer must be fc");
}

Tensor Network::forward(const Tensor& batch) {
  if (batch.rank() != 4 || batch.dim(1) != input_.channels || batch.dim(2) != input_.height ||
      batch.dim(3) != input_.width) {
    throw DimensionError("batch " + shape_string(batch.shape()) + " does not match input [Bx" +
                         std::to_string(input_.channels) + "x" + std::to_string(input_.height) +
                         "x" + std::to_string(input_.width) + "]");
  }
  cache_.clear();
  cache_.reserve(layers_.size());
  Tensor x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerState& l = layers_[i];
    Tensor y;
    try {
      switch (l.kind) {
        case LayerKind::Conv: y = conv2d(x, l.weights, l.bias); break;
        case LayerKind::Fc: y = linear(x, l.weights, l.bias); break;
        case LayerKind::Relu: y = relu(x); break;
        case LayerKind::Pool: y = maxpool2(x); break;
        case LayerKind::Flatten: {
          y = x;
          const std::size_t b = y.dim(0);
          y.reshape({b, y.size() / b});
          break;
        }
      }
    } catch (const DimensionError& e) {
      cache_.clear();
      throw DimensionError(layer_name(i) + ": " + e.what());
    }
    cache_.push_back(std::move(x));
    x = std::move(y);
  }
  return x;
}

void Network::backward(const Tensor& logits_grad) {
  if (cache_.size() != layers_.size()) {
    throw StateError("backward called without a matching forward pass");
  }
  Tensor g = logits_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    LayerState& l = layers_[i];
    Tensor& x = cache_[i];
    const bool need_input_grad = i > 0;
    if (need_input_grad) x.enable_grad();
    switch (l.kind) {
      case LayerKind::Conv: conv2d_backward(x, l.weights, l.bias, g); break;
      case LayerKind::Fc: linear_backward(x, l.weights, l.bias, g); break;
      case LayerKind::Relu: relu_backward(x, g); break;
      case LayerKind::Pool: maxpool2_backward(x, g); break;
      case LayerKind::Flatten: {
        x.enable_grad();
        auto dst = x.grad();
        std::copy(g.values().begin(), g.values().end(), dst.begin());
        break;
      }
    }
    if (need_input_grad) g = x.take_grad();
  }
  cache_.clear();
}

void Network::check_producer(std::size_t layer, const char* what) const {
  if (layer >= layers_.size() || !layers_[layer].parameterized()) {
    throw DimensionError(std::string(what) + ": layer " + std::to_string(layer) +
                         " is not a conv or fc layer");
  }
  if (is_output_layer(layer)) {
    throw LayerCollapseError(std::string(what) + ": output layer " + layer_name(layer) +
                             " has a fixed width");
  }
}

std::span<float> Network::fan_in(std::size_t layer, std::size_t unit) {
  LayerState& l = layers_.at(layer);
  if (!l.parameterized() || unit >= l.out) {
    throw DimensionError("fan_in: unit " + std::to_string(unit) + " out of range for " +
                         layer_name(layer));
  }
  return l.weights.data().subspan(unit * l.unit_fan_in(), l.unit_fan_in());
}

std::span<const float> Network::fan_in(std::size_t layer, std::size_t unit) const {
  return const_cast<Network*>(this)->fan_in(layer, unit);
}

std::vector<float> Network::consumer_slice(std::size_t layer, std::size_t unit) const {
  check_producer(layer, "consumer_slice");
  const LayerState& p = layers_[layer];
  if (unit >= p.out) {
    throw DimensionError("consumer_slice: unit " + std::to_string(unit) + " out of range for " +
                         layer_name(layer));
  }
  const LayerState& c = layers_[*consumer_of(layer)];
  const std::size_t block = consumer_block(layer);
  std::vector<float> out;
  out.reserve(c.out * block);
  const float* w = c.weights.raw();
  for (std::size_t o = 0; o < c.out; ++o) {
    const float* src = w + (o * p.out + unit) * block;
    out.insert(out.end(), src, src + block);
  }
  return out;
}

void Network::set_consumer_slice(std::size_t layer, std::size_t unit,
                                 std::span<const float> values) {
  check_producer(layer, "set_consumer_slice");
  const LayerState& p = layers_[layer];
  LayerState& c = layers_[*consumer_of(layer)];
  const std::size_t block = consumer_block(layer);
  if (unit >= p.out || values.size() != c.out * block) {
    throw DimensionError("set_consumer_slice: expected " + std::to_string(c.out * block) +
                         " values for unit " + std::to_string(unit) + " of " + layer_name(layer));
  }
  float* w = c.weights.raw();
  for (std::size_t o = 0; o < c.out; ++o) {
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(o * block),
              values.begin() + static_cast<std::ptrdiff_t>((o + 1) * block),
              w + (o * p.out + unit) * block);
  }
}

std::size_t Network::insert_unit(std::size_t layer, std::size_t source,
                                 std::span<const float> fan_in_values, float bias_value,
                                 std::span<const float> consumer_values) {
  check_producer(layer, "insert_unit");
  LayerState& p = layers_[layer];
  const std::size_t ci = *consumer_of(layer);
  LayerState& c = layers_[ci];
  const std::size_t block = consumer_block(layer);
  if (source >= p.out) {
    throw DimensionError("insert_unit: source " + std::to_string(source) + " out of range for " +
                         layer_name(layer) + " with O=" + std::to_string(p.out));
  }
  if (fan_in_values.size() != p.unit_fan_in()) {
    throw DimensionError("insert_unit: " + layer_name(layer) + " newborn needs " +
                         std::to_string(p.unit_fan_in()) + " weights, got " +
                         std::to_string(fan_in_values.size()));
  }
  if (consumer_values.size() != c.out * block) {
    throw DimensionError("insert_unit: " + layer_name(ci) + " mapped slice needs " +
                         std::to_string(c.out * block) + " weights, got " +
                         std::to_string(consumer_values.size()));
  }
  const std::size_t pos = source + 1;
  const std::size_t units = p.out;
  const std::size_t fan = p.unit_fan_in();
  const std::vector<float> zero_fan(fan, 0.0f), one_fan(fan, 1.0f);
  const std::vector<float> zero_slice(c.out * block, 0.0f), one_slice(c.out * block, 1.0f);
  const float zero = 0.0f, bias_arr[1] = {bias_value};

  auto pw = insert_block(p.weights.values(), 1, units, fan, pos, fan_in_values);
  auto pb = insert_block(p.bias.values(), 1, units, 1, pos, bias_arr);
  auto pwv = insert_block(p.weight_velocity.values(), 1, units, fan, pos, zero_fan);
  auto pbv = insert_block(p.bias_velocity.values(), 1, units, 1, pos, {&zero, 1});
  std::vector<float> pm;
  if (!p.mask.empty()) pm = insert_block(p.mask.values(), 1, units, fan, pos, one_fan);

  auto cw = insert_block(c.weights.values(), c.out, units, block, pos, consumer_values);
  auto cwv = insert_block(c.weight_velocity.values(), c.out, units, block, pos, zero_slice);
  std::vector<float> cm;
  if (!c.mask.empty()) cm = insert_block(c.mask.values(), c.out, units, block, pos, one_slice);

  p.out += 1;
  c.in += c.kind == LayerKind::Conv ? 1 : block;
  reshape_layer(p, std::move(pw), std::move(pb), std::move(pwv), std::move(pbv), std::move(pm));
  reshape_layer(c, std::move(cw), std::vector<float>(c.bias.values()), std::move(cwv),
                std::vector<float>(c.bias_velocity.values()), std::move(cm));
  ++version_;
  cache_.clear();
  update_geometry();
  validate();
  return pos;
}

void Network::remove_unit(std::size_t layer, std::size_t unit) {
  check_producer(layer, "remove_unit");
  LayerState& p = layers_[layer];
  if (unit >= p.out) {
    throw DimensionError("remove_unit: unit " + std::to_string(unit) + " out of range for " +
                         layer_name(layer) + " with O=" + std::to_string(p.out));
  }
  if (p.out == 1) {
    throw LayerCollapseError("remove_unit: refusing to remove the last unit of " +
                             layer_name(layer));
  }
  const std::size_t ci = *consumer_of(layer);
  LayerState& c = layers_[ci];
  const std::size_t block = consumer_block(layer);
  const std::size_t units = p.out;
  const std::size_t fan = p.unit_fan_in();

  auto pw = remove_block(p.weights.values(), 1, units, fan, unit);
  auto pb = remove_block(p.bias.values(), 1, units, 1, unit);
  auto pwv = remove_block(p.weight_velocity.values(), 1, units, fan, unit);
  auto pbv = remove_block(p.bias_velocity.values(), 1, units, 1, unit);
  std::vector<float> pm;
  if (!p.mask.empty()) pm = remove_block(p.mask.values(), 1, units, fan, unit);
  auto cw = remove_block(c.weights.values(), c.out, units, block, unit);
  auto cwv = remove_block(c.weight_velocity.values(), c.out, units, block, unit);
  std::vector<float> cm;
  if (!c.mask.empty()) cm = remove_block(c.mask.values(), c.out, units, block, unit);

  p.out -= 1;
  c.in -= c.kind == LayerKind::Conv ? 1 : block;
  reshape_layer(p, std::move(pw), std::move(pb), std::move(pwv), std::move(pbv), std::move(pm));
  reshape_layer(c, std::move(cw), std::vector<float>(c.bias.values()), std::move(cwv),
                std::vector<float>(c.bias_velocity.values()), std::move(cm));
  ++version_;
  cache_.clear();
  update_geometry();
  validate();
}

void Network::enable_hard_mask() {
  for (auto& l : layers_) {
    if (l.parameterized() && l.mask.empty()) l.mask = Tensor(l.weights.shape(), 1.0f);
  }
  hard_mask_ = true;
}

void Network::apply_mask() {
  if (!hard_mask_) return;
  for (auto& l : layers_) {
    if (!l.parameterized() || l.mask.empty()) continue;
    auto w = l.weights.data();
    const auto m = l.mask.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= m[i];
  }
}

std::size_t insert_filter(Network& net, std::size_t layer, std::size_t source,
                          std::span<const float> newborn_weights, float newborn_bias,
                          std::span<const float> mapped_slice) {
  if (net.layer(layer).kind != LayerKind::Conv) {
    throw DimensionError("insert_filter: " + net.layer_name(layer) + " is not a conv layer");
  }
  return net.insert_unit(layer, source, newborn_weights, newborn_bias, mapped_slice);
}

void remove_filter(Network& net, std::size_t layer, std::size_t unit) {
  if (net.layer(layer).kind != LayerKind::Conv) {
    throw DimensionError("remove_filter: " + net.layer_name(layer) + " is not a conv layer");
  }
  net.remove_unit(layer, unit);
}

std::size_t insert_neuron(Network& net, std::size_t layer, std::size_t source,
                          std::span<const float> fan_in_row, float bias,
                          std::span<const float> fan_out_column) {
  if (net.layer(layer).kind != LayerKind::Fc) {
    throw DimensionError("insert_neuron: " + net.layer_name(layer) + " is not an fc layer");
  }
  return net.insert_unit(layer, source, fan_in_row, bias, fan_out_column);
}

void remove_neuron(Network& net, std::size_t layer, std::size_t unit) {
  if (net.layer(layer).kind != LayerKind::Fc) {
    throw DimensionError("remove_neuron: " + net.layer_name(layer) + " is not an fc layer");
  }
  net.remove_unit(layer, unit);
}

Architecture lenet_architecture(InputShape input, std::span<const std::size_t> conv_widths,
                                std::span<const std::size_t> fc_widths, std::size_t classes,
                                std::size_t kernel) {
  Architecture arch{input, {}};
  std::size_t channels = input.channels, h = input.height, w = input.width;
  for (const std::size_t width : conv_widths) {
    arch.layers.push_back({LayerKind::Conv, width, channels, kernel});
    arch.layers.push_back({LayerKind::Relu});
    arch.layers.push_back({LayerKind::Pool});
    channels = width;
    if (h < kernel || w < kernel) {
      throw DimensionError("lenet: input too small for " + std::to_string(conv_widths.size()) +
                           " conv blocks");
    }
    h = (h - kernel + 1) / 2;
    w = (w - kernel + 1) / 2;
  }
  arch.layers.push_back({LayerKind::Flatten});
  std::size_t features = channels * h * w;
  for (const std::size_t width : fc_widths) {
    arch.layers.push_back({LayerKind::Fc, width, features, 0});
    arch.layers.push_back({LayerKind::Relu});
    features = width;
  }
  arch.layers.push_back({LayerKind::Fc, classes, features, 0});
  return arch;
}

Network build_network(const Architecture& arch) {
  std::vector<LayerState> layers;
  layers.reserve(arch.layers.size());
  for (const LayerSpec& s : arch.layers) {
    switch (s.kind) {
      case LayerKind::Conv: layers.push_back(LayerState::conv(s.out, s.in, s.kernel)); break;
      case LayerKind::Fc: layers.push_back(LayerState::fc(s.out, s.in)); break;
      case LayerKind::Relu: layers.push_back(LayerState::relu()); break;
      case LayerKind::Pool: layers.push_back(LayerState::pool()); break;
      case LayerKind::Flatten: layers.push_back(LayerState::flatten()); break;
    }
  }
  return Network(arch.input, std::move(layers));
}

void init_parameters(Network& net, Rng& rng) {
  for (const std::size_t i : net.param_layers()) {
    LayerState& l = net.layer(i);
    const float bound = 1.0f / std::sqrt(static_cast<float>(l.unit_fan_in()));
    for (float& v : l.weights.values()) v = rng.uniform(-bound, bound);
    for (float& v : l.bias.values()) v = rng.uniform(-bound, bound);
  }
}

}  // namespace cgap
