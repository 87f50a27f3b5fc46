// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cgap/network.hpp"
#include "cgap/saliency.hpp"

namespace cgap {

struct PruneConfig {
  float gamma_w = 0.2f;  // fraction of each layer's weights zeroed per event
  float gamma_f = 0.9f;  // filter sparsity above which the filter is removed
  float gamma_n = 0.9f;  // neuron sparsity above which the neuron is removed
  std::size_t period_epochs = 1;
  float tau_accu = 0.9f;  // training accuracy that switches pruning on (latched)
  /// Keep zeroed weights at zero for the rest of training instead of letting
  /// them retrain.
  bool hard_mask = false;

  void validate() const;
};

struct UnitSparsity {
  UnitId unit;
  float sparsity = 0.0f;
  bool removed = false;
};

struct RemovalReport {
  std::vector<UnitId> removed;  // in removal order: descending layer, descending unit
  std::vector<UnitId> refused;  // would have emptied their layer
  std::vector<UnitSparsity> sparsity;  // every candidate unit, before removal
};

struct PruneEvent {
  std::size_t epoch = 0;
  std::vector<std::pair<std::size_t, std::size_t>> zeroed;  // (layer, count)
  std::vector<UnitId> removed;
  std::vector<UnitId> refused;
  std::vector<std::size_t> widths;
  std::vector<UnitSparsity> sparsity;
};

/// Zeroes the floor(gamma_w · n) weights of `layer` with the lowest scores
/// (ties by lower flat index). Biases are untouched. Returns the count.
std::size_t zero_out_weights(Network& net, std::size_t layer, std::span<const float> ps_scores,
                             float gamma_w);

/// Fraction of exactly-zero weights in a unit: a filter's I·K² weights, or a
/// hidden neuron's fan-in row plus fan-out column.
float unit_sparsity(const Network& net, UnitId unit);

/// Removes every filter with sparsity > gamma_f and every hidden neuron with
/// sparsity > gamma_n. Never empties a layer.
RemovalReport remove_sparse_units(Network& net, const PruneConfig& config);

/// Zero-out on every conv/fc layer, then unit removal. Resets `table`.
PruneEvent prune_network(Network& net, SaliencyTable& table, const PruneConfig& config,
                         std::size_t epoch = 0);

/// "epoch,layer,unit,sparsity,removed" rows for one event (no header).
std::string sparsity_rows(const PruneEvent& event, const std::vector<std::string>& layer_names);

}  // namespace cgap
