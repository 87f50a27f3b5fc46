// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cgap/errors.hpp"

namespace cgap {
namespace {

const SaliencyTable::LayerScores& checked_layer(const SaliencyTable& table, const Network& net,
                                                std::size_t layer) {
  table.check_current(net);
  if (layer >= net.layers().size() || !net.layer(layer).parameterized()) {
    throw DimensionError("saliency: layer " + std::to_string(layer) + " has no weights");
  }
  if (table.batch_count(layer) == 0) {
    throw StateError("saliency: empty accumulation window for " + net.layer_name(layer));
  }
  return table.raw_layers()[layer];
}

}  // namespace

void SaliencyTable::reset(const Network& net) {
  version_ = net.version();
  layers_.assign(net.layers().size(), {});
  for (const std::size_t i : net.param_layers()) {
    layers_[i].per_weight.assign(net.layer(i).weights.size(), 0.0f);
  }
}

bool SaliencyTable::is_current(const Network& net) const noexcept {
  if (version_ != net.version() || layers_.size() != net.layers().size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = net.layers()[i];
    const std::size_t expected = l.parameterized() ? l.weights.size() : 0;
    if (layers_[i].per_weight.size() != expected) return false;
  }
  return true;
}

void SaliencyTable::check_current(const Network& net) const {
  if (!is_current(net)) {
    throw StaleTableError("saliency table was built for topology version " +
                          std::to_string(version_) + " but the network is at version " +
                          std::to_string(net.version()) + "; reset it after structural edits");
  }
}

void SaliencyTable::accumulate(std::size_t layer, std::span<const float> grads,
                               std::span<const float> weights) {
  auto& s = layers_.at(layer).per_weight;
  if (grads.size() != s.size() || weights.size() != s.size()) {
    throw StaleTableError("saliency accumulate: layer " + std::to_string(layer) + " table has " +
                          std::to_string(s.size()) + " entries but got " +
                          std::to_string(grads.size()) + " gradients and " +
                          std::to_string(weights.size()) + " weights");
  }
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += std::fabs(grads[i] * weights[i]);
  ++layers_[layer].batches;
}

void SaliencyTable::accumulate(const Network& net) {
  check_current(net);
  for (const std::size_t i : net.param_layers()) {
    const auto& l = net.layer(i);
    accumulate(i, l.weights.grad(), l.weights.data());
  }
}

std::vector<float> filter_scores(const SaliencyTable& table, const Network& net,
                                 std::size_t layer) {
  const auto& entry = checked_layer(table, net, layer);
  const LayerState& l = net.layer(layer);
  if (l.kind != LayerKind::Conv) {
    throw DimensionError("filter_scores: " + net.layer_name(layer) + " is not a conv layer");
  }
  const std::size_t fan = l.unit_fan_in();
  std::vector<float> out(l.out, 0.0f);
  for (std::size_t o = 0; o < l.out; ++o) {
    const float* s = entry.per_weight.data() + o * fan;
    out[o] = std::accumulate(s, s + fan, 0.0f);
  }
  return out;
}

std::vector<float> neuron_scores(const SaliencyTable& table, const Network& net,
                                 std::size_t layer) {
  table.check_current(net);
  const LayerState& l = net.layer(layer);
  if (l.kind != LayerKind::Fc || net.is_output_layer(layer)) {
    throw DimensionError("neuron_scores: " + net.layer_name(layer) + " is not a hidden fc layer");
  }
  const std::size_t consumer = *net.consumer_of(layer);
  const auto& entry = checked_layer(table, net, consumer);
  const LayerState& c = net.layer(consumer);
  std::vector<float> out(l.out, 0.0f);
  for (std::size_t o = 0; o < c.out; ++o) {
    const float* row = entry.per_weight.data() + o * c.in;
    for (std::size_t i = 0; i < l.out; ++i) out[i] += row[i];
  }
  return out;
}

std::vector<float> unit_scores(const SaliencyTable& table, const Network& net, std::size_t layer) {
  return net.layer(layer).kind == LayerKind::Conv ? filter_scores(table, net, layer)
                                                  : neuron_scores(table, net, layer);
}

std::vector<float> weight_prune_scores(const SaliencyTable& table, const Network& net,
                                       std::size_t layer) {
  return checked_layer(table, net, layer).per_weight;
}

std::vector<std::size_t> top_k(std::span<const float> scores, std::size_t k) {
  if (k < 1 || k > scores.size()) {
    throw DimensionError("top_k: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  idx.resize(k);
  return idx;
}

std::string saliency_csv(const SaliencyTable& table, const Network& net) {
  std::ostringstream os;
  os.precision(9);
  os << "layer,unit,score\n";
  for (const std::size_t layer : net.growable_layers()) {
    const auto scores = unit_scores(table, net, layer);
    for (std::size_t u = 0; u < scores.size(); ++u) {
      os << net.layer_name(layer) << ',' << u << ',' << scores[u] << '\n';
    }
  }
  return os.str();
}

}  // namespace cgap
