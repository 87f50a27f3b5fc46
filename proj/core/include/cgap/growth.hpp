// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cgap/network.hpp"
#include "cgap/rng.hpp"
#include "cgap/saliency.hpp"

namespace cgap {

struct GrowthConfig {
  float beta = 0.6f;   // fraction of units duplicated per sweep
  float sigma = 0.5f;  // scale applied to picked/projected weights
  float mu = 0.1f;     // half-width of the uniform noise
  /// A sweep runs at the end of every epoch e > 0 with e % period_epochs == 0.
  std::size_t period_epochs = 3;
  /// When > 0, overrides period_epochs: this many sweeps per epoch, evenly
  /// spaced over its minibatches.
  std::size_t sweeps_per_epoch = 0;
  /// Growth stops once the first conv layer would exceed this width.
  std::size_t tau_capa = 20;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

enum class SourceSelection { Saliency, Random };

struct GrowthPair {
  std::size_t source_before = 0;  // index of the picked unit before the sweep
  std::size_t source_after = 0;   // its index after all insertions in the layer
  std::size_t newborn = 0;        // newborn index after all insertions (source_after + 1)
};

struct LayerGrowth {
  std::size_t layer = 0;
  std::vector<GrowthPair> pairs;  // ascending by source
};

struct GrowthEvent {
  std::size_t epoch = 0;
  std::vector<LayerGrowth> layers;
  std::vector<std::size_t> widths;  // post-sweep widths of every conv/fc layer
};

/// max(1, floor(beta · width)).
std::size_t growth_count(std::size_t width, float beta);

/// newborn = σ·picked + ε₁ and picked ← σ·picked + ε₂ with independent
/// ε ~ U[-µ, µ] per element. Draws all of ε₁ first, then ε₂.
std::vector<float> spawn_pair(std::span<float> picked, float sigma, float mu, Rng& rng);

/// True when the next sweep would push the first conv layer past tau_capa.
bool capacity_reached(const Network& net, const GrowthConfig& config);

/// Grows one layer using pre-computed unit scores (ignored for Random
/// selection) and maps the consumer layer. Units are processed in
/// descending index order so pending indices stay valid.
LayerGrowth grow_layer(Network& net, std::size_t layer, std::span<const float> scores,
                       const GrowthConfig& config, Rng& rng, SourceSelection selection);

/// grow_layer restricted to conv layers.
LayerGrowth grow_conv_layer(Network& net, std::size_t layer, const SaliencyTable& table,
                            const GrowthConfig& config, Rng& rng,
                            SourceSelection selection = SourceSelection::Saliency);
/// grow_layer restricted to hidden fc layers.
LayerGrowth grow_fc_layer(Network& net, std::size_t layer, const SaliencyTable& table,
                          const GrowthConfig& config, Rng& rng,
                          SourceSelection selection = SourceSelection::Saliency);

/// One bottom-to-top sweep over every growable layer. Scores of all layers
/// are frozen before the first edit. Resets `table` afterwards.
GrowthEvent grow_network(Network& net, SaliencyTable& table, const GrowthConfig& config, Rng& rng,
                         SourceSelection selection = SourceSelection::Saliency,
                         std::size_t epoch = 0);

/// Widths after one sweep, from widths alone (output layer unchanged).
std::vector<std::size_t> grown_widths(std::span<const std::size_t> widths, float beta);

}  // namespace cgap
