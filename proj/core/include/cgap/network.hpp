// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgap/rng.hpp"
#include "cgap/tensor.hpp"

namespace cgap {

enum class LayerKind : std::uint8_t { Conv = 0, Fc = 1, Relu = 2, Pool = 3, Flatten = 4 };

std::string_view layer_kind_name(LayerKind kind);

struct InputShape {
  std::size_t channels = 1;
  std::size_t height = 28;
  std::size_t width = 28;

  bool operator==(const InputShape&) const = default;
};

/// A learning unit: filter `unit` of a conv layer, or neuron `unit` produced
/// by an fc layer. `layer` indexes Network::layers(), including the
/// parameter-free layers.
struct UnitId {
  std::size_t layer = 0;
  std::size_t unit = 0;

  auto operator<=>(const UnitId&) const = default;
};

/// Shape-only description of one layer.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t out = 0;
  std::size_t in = 0;
  std::size_t kernel = 0;

  bool operator==(const LayerSpec&) const = default;
};

struct Architecture {
  InputShape input;
  std::vector<LayerSpec> layers;

  bool operator==(const Architecture&) const = default;
};

struct LayerState {
  LayerKind kind = LayerKind::Relu;
  std::size_t out = 0;
  std::size_t in = 0;
  std::size_t kernel = 0;

  Tensor weights;  // O×I×K×K (conv) or O×I (fc)
  Tensor bias;     // O
  Tensor weight_velocity;
  Tensor bias_velocity;
  /// Hard-mask pruning only: 1 keeps a weight trainable, 0 pins it at zero.
  /// Empty when soft pruning is in effect.
  Tensor mask;

  static LayerState conv(std::size_t out, std::size_t in, std::size_t kernel);
  static LayerState fc(std::size_t out, std::size_t in);
  static LayerState relu() {
    LayerState l;
    l.kind = LayerKind::Relu;
    return l;
  }
  static LayerState pool() {
    LayerState l;
    l.kind = LayerKind::Pool;
    return l;
  }
  static LayerState flatten() {
    LayerState l;
    l.kind = LayerKind::Flatten;
    return l;
  }

  bool parameterized() const noexcept {
    return kind == LayerKind::Conv || kind == LayerKind::Fc;
  }
  /// Weights per unit in this layer: I·K² for a filter, I for a neuron.
  std::size_t unit_fan_in() const noexcept {
    return kind == LayerKind::Conv ? in * kernel * kernel : in;
  }
  LayerSpec spec() const { return {kind, out, in, kernel}; }
};

/// A feedforward network whose layer widths can be edited between training
/// steps. Layer count is fixed after construction.
///
/// Invariants (checked by validate() after every edit):
///  - conv→conv and fc→fc: I_{l+1} == O_l;
///  - conv→Flatten→fc: I_fc == O_conv · flatten_spatial, feature-map-major;
///  - first parameterized layer reads the dataset channel count;
///  - the last layer is an fc layer whose width is the class count.
class Network {
 public:
  Network() = default;
  Network(InputShape input, std::vector<LayerState> layers);

  const InputShape& input_shape() const noexcept { return input_; }
  const std::vector<LayerState>& layers() const noexcept { return layers_; }
  const LayerState& layer(std::size_t index) const { return layers_.at(index); }
  LayerState& layer(std::size_t index) { return layers_.at(index); }
  std::size_t num_classes() const { return layers_.back().out; }

  /// Indices of conv/fc layers, bottom to top.
  std::vector<std::size_t> param_layers() const;
  /// O of every parameterized layer, bottom to top.
  std::vector<std::size_t> widths() const;
  /// Parameterized layers whose width may change (all but the output layer).
  std::vector<std::size_t> growable_layers() const;
  /// "conv1", "conv2", "fc1", ... counted per kind.
  std::string layer_name(std::size_t index) const;
  std::optional<std::size_t> find_layer(std::string_view name) const;

  Architecture architecture() const;
  std::size_t flatten_spatial() const noexcept { return flatten_spatial_; }
  bool is_output_layer(std::size_t index) const { return index + 1 == layers_.size(); }

  /// Next parameterized layer above `index`, if any.
  std::optional<std::size_t> consumer_of(std::size_t index) const;
  /// Number of consecutive values in one consumer row that read a single unit
  /// of `index`: K² of a conv consumer, flatten_spatial across a Flatten,
  /// otherwise 1.
  std::size_t consumer_block(std::size_t index) const;

  /// Incremented by every structural edit.
  std::uint64_t version() const noexcept { return version_; }
  /// Checkpoint restore only.
  void restore_version(std::uint64_t version) noexcept { version_ = version; }

  Tensor forward(const Tensor& batch);
  /// Fills weight and bias gradients of every parameterized layer.
  void backward(const Tensor& logits_grad);
  bool has_forward_cache() const noexcept { return !cache_.empty(); }
  void clear_cache() { cache_.clear(); }

  void validate() const;

  // Structural edits. `layer` produces the unit; its consumer is updated in
  // the same call. Momentum of new parameters is zero, surviving parameters
  // keep theirs.

  /// Inserts a unit right after `source`. `fan_in` holds unit_fan_in()
  /// values; `consumer_slice` holds consumer.out × consumer_block(layer)
  /// values, row-major by consumer output. Returns the new unit's index.
  std::size_t insert_unit(std::size_t layer, std::size_t source, std::span<const float> fan_in,
                          float bias, std::span<const float> consumer_slice);
  void remove_unit(std::size_t layer, std::size_t unit);

  /// The contiguous fan-in weights (filter or fc row) of a unit.
  std::span<float> fan_in(std::size_t layer, std::size_t unit);
  std::span<const float> fan_in(std::size_t layer, std::size_t unit) const;
  /// Consumer weights that read `unit`, laid out as in insert_unit().
  std::vector<float> consumer_slice(std::size_t layer, std::size_t unit) const;
  void set_consumer_slice(std::size_t layer, std::size_t unit, std::span<const float> values);

  /// Allocates all-ones masks on every parameterized layer.
  void enable_hard_mask();
  bool hard_mask() const noexcept { return hard_mask_; }
  /// Re-zeros masked weights.
  void apply_mask();

 private:
  void update_geometry();
  void check_producer(std::size_t layer, const char* what) const;

  InputShape input_;
  std::vector<LayerState> layers_;
  std::size_t flatten_spatial_ = 1;
  std::uint64_t version_ = 0;
  bool hard_mask_ = false;
  std::vector<Tensor> cache_;  // input of each layer from the last forward
};

// Named edit wrappers that check the layer kind.

std::size_t insert_filter(Network& net, std::size_t layer, std::size_t source,
                          std::span<const float> newborn_weights, float newborn_bias,
                          std::span<const float> mapped_slice);
void remove_filter(Network& net, std::size_t layer, std::size_t unit);
std::size_t insert_neuron(Network& net, std::size_t layer, std::size_t source,
                          std::span<const float> fan_in_row, float bias,
                          std::span<const float> fan_out_column);
void remove_neuron(Network& net, std::size_t layer, std::size_t unit);

/// conv(k)→relu→pool blocks, then flatten, then fc→relu blocks and a final fc.
Architecture lenet_architecture(InputShape input, std::span<const std::size_t> conv_widths,
                                std::span<const std::size_t> fc_widths, std::size_t classes,
                                std::size_t kernel);

/// Zero-initialized network of the given architecture.
Network build_network(const Architecture& arch);

/// Uniform(±1/sqrt(fan_in)) for weights and biases, drawn layer by layer.
void init_parameters(Network& net, Rng& rng);

}  // namespace cgap
