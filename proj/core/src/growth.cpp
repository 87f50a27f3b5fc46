// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgap/errors.hpp"

namespace cgap {

void GrowthConfig::validate() const {
  if (!(beta > 0.0f && beta <= 1.0f)) throw ConfigError("growth.beta must be in (0, 1]");
  if (!(sigma > 0.0f && sigma <= 1.0f)) throw ConfigError("growth.sigma must be in (0, 1]");
  if (!(mu >= 0.0f && mu <= 1.0f)) throw ConfigError("growth.mu must be in [0, 1]");
  if (period_epochs < 1) throw ConfigError("growth.period_epochs must be >= 1");
  if (tau_capa < 1) throw ConfigError("growth.tau_capa must be >= 1");
}

std::size_t growth_count(std::size_t width, float beta) {
  const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(beta) *
                                                     static_cast<double>(width)));
  return std::max<std::size_t>(1, n);
}

std::vector<float> spawn_pair(std::span<float> picked, float sigma, float mu, Rng& rng) {
  std::vector<float> newborn(picked.size());
  for (std::size_t i = 0; i < picked.size(); ++i) {
    newborn[i] = sigma * picked[i] + rng.uniform(-mu, mu);
  }
  for (float& w : picked) w = sigma * w + rng.uniform(-mu, mu);
  return newborn;
}

bool capacity_reached(const Network& net, const GrowthConfig& config) {
  const auto params = net.param_layers();
  if (params.empty()) return true;
  const std::size_t first = net.layer(params.front()).out;
  return first + growth_count(first, config.beta) > config.tau_capa;
}

std::vector<std::size_t> grown_widths(std::span<const std::size_t> widths, float beta) {
  std::vector<std::size_t> out(widths.begin(), widths.end());
  for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] += growth_count(out[i], beta);
  return out;
}

LayerGrowth grow_layer(Network& net, std::size_t layer, std::span<const float> scores,
                       const GrowthConfig& config, Rng& rng, SourceSelection selection) {
  const LayerState& l = net.layer(layer);
  if (!l.parameterized() || net.is_output_layer(layer)) {
    throw LayerCollapseError("grow_layer: " + net.layer_name(layer) + " cannot grow");
  }
  const std::size_t width = l.out;
  const std::size_t count = growth_count(width, config.beta);
  if (width > std::numeric_limits<std::uint32_t>::max() - count) {
    throw DimensionError("grow_layer: " + net.layer_name(layer) + " width would overflow");
  }

  std::vector<std::size_t> sources;
  if (selection == SourceSelection::Saliency) {
    if (scores.size() != width) {
      throw StaleTableError("grow_layer: " + std::to_string(scores.size()) + " scores for " +
                            net.layer_name(layer) + " with " + std::to_string(width) + " units");
    }
    sources = top_k(scores, count);
  } else {
    std::vector<std::size_t> pool(width);
    for (std::size_t i = 0; i < width; ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(pool[i], pool[i + rng.index(width - i)]);
    }
    sources.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  }
  std::sort(sources.begin(), sources.end());

  for (auto it = sources.rbegin(); it != sources.rend(); ++it) {
    const std::size_t s = *it;
    auto picked = net.fan_in(layer, s);
    std::vector<float> newborn = spawn_pair(picked, config.sigma, config.mu, rng);
    float& picked_bias = net.layer(layer).bias[s];
    const float newborn_bias = config.sigma * picked_bias + rng.uniform(-config.mu, config.mu);
    picked_bias = config.sigma * picked_bias + rng.uniform(-config.mu, config.mu);

    std::vector<float> projected = net.consumer_slice(layer, s);
    std::vector<float> mapped = spawn_pair(projected, config.sigma, config.mu, rng);
    net.set_consumer_slice(layer, s, projected);
    net.insert_unit(layer, s, newborn, newborn_bias, mapped);
  }

  LayerGrowth out{layer, {}};
  for (std::size_t k = 0; k < sources.size(); ++k) {
    out.pairs.push_back({sources[k], sources[k] + k, sources[k] + k + 1});
  }
  return out;
}

LayerGrowth grow_conv_layer(Network& net, std::size_t layer, const SaliencyTable& table,
                            const GrowthConfig& config, Rng& rng, SourceSelection selection) {
  if (net.layer(layer).kind != LayerKind::Conv) {
    throw DimensionError("grow_conv_layer: " + net.layer_name(layer) + " is not a conv layer");
  }
  std::vector<float> scores;
  if (selection == SourceSelection::Saliency) scores = filter_scores(table, net, layer);
  return grow_layer(net, layer, scores, config, rng, selection);
}

LayerGrowth grow_fc_layer(Network& net, std::size_t layer, const SaliencyTable& table,
                          const GrowthConfig& config, Rng& rng, SourceSelection selection) {
  if (net.layer(layer).kind != LayerKind::Fc || net.is_output_layer(layer)) {
    throw LayerCollapseError("grow_fc_layer: " + net.layer_name(layer) +
                             " is not a hidden fc layer");
  }
  std::vector<float> scores;
  if (selection == SourceSelection::Saliency) scores = neuron_scores(table, net, layer);
  return grow_layer(net, layer, scores, config, rng, selection);
}

GrowthEvent grow_network(Network& net, SaliencyTable& table, const GrowthConfig& config, Rng& rng,
                         SourceSelection selection, std::size_t epoch) {
  if (capacity_reached(net, config)) {
    throw StateError("grow_network: capacity reached (first layer width " +
                     std::to_string(net.widths().front()) + ", tau_capa " +
                     std::to_string(config.tau_capa) + ")");
  }
  const auto layers = net.growable_layers();
  std::vector<std::vector<float>> frozen(layers.size());
  if (selection == SourceSelection::Saliency) {
    for (std::size_t i = 0; i < layers.size(); ++i) frozen[i] = unit_scores(table, net, layers[i]);
  } else {
    table.check_current(net);
  }

  GrowthEvent event{epoch, {}, {}};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    event.layers.push_back(grow_layer(net, layers[i], frozen[i], config, rng, selection));
  }
  event.widths = net.widths();
  table.reset(net);
  return event;
}

}  // namespace cgap
