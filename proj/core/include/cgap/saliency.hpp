// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cgap/network.hpp"

namespace cgap {

/// First-order Taylor saliency accumulated over a window of minibatches:
/// s[w] = Σ_batches |∂L/∂w · w| for every weight of every conv/fc layer.
/// A table is bound to one topology version; any structural edit makes it
/// stale and every scoring call on it then throws StaleTableError.
class SaliencyTable {
 public:
  struct LayerScores {
    std::vector<float> per_weight;
    std::size_t batches = 0;
  };

  SaliencyTable() = default;
  explicit SaliencyTable(const Network& net) { reset(net); }

  /// Empties the window and rebinds to the current topology.
  void reset(const Network& net);

  /// s += |g·w| elementwise for one layer; counts one batch for that layer.
  void accumulate(std::size_t layer, std::span<const float> grads,
                  std::span<const float> weights);
  /// Accumulates every parameterized layer from its current gradients.
  void accumulate(const Network& net);

  void check_current(const Network& net) const;
  bool is_current(const Network& net) const noexcept;

  std::uint64_t version() const noexcept { return version_; }
  std::size_t batch_count(std::size_t layer) const { return layers_.at(layer).batches; }
  std::span<const float> scores(std::size_t layer) const { return layers_.at(layer).per_weight; }

  // Raw access for checkpointing.
  const std::vector<LayerScores>& raw_layers() const noexcept { return layers_; }
  void restore(std::uint64_t version, std::vector<LayerScores> layers) {
    version_ = version;
    layers_ = std::move(layers);
  }

 private:
  std::uint64_t version_ = 0;
  std::vector<LayerScores> layers_;  // indexed like Network::layers()
};

/// Growth score of every filter of a conv layer: Σ_{i,m,n} s[o,i,m,n].
std::vector<float> filter_scores(const SaliencyTable& table, const Network& net,
                                 std::size_t layer);

/// Growth score of every neuron produced by hidden fc layer `layer`, read from
/// the fan-out weights in the consumer's column: Σ_o s_consumer[o,i].
std::vector<float> neuron_scores(const SaliencyTable& table, const Network& net,
                                 std::size_t layer);

/// filter_scores for conv layers, neuron_scores for hidden fc layers.
std::vector<float> unit_scores(const SaliencyTable& table, const Network& net, std::size_t layer);

/// Per-weight pruning scores of one layer (the accumulated window itself).
std::vector<float> weight_prune_scores(const SaliencyTable& table, const Network& net,
                                       std::size_t layer);

/// Indices of the k largest scores, ordered by descending score and then by
/// ascending index.
std::vector<std::size_t> top_k(std::span<const float> scores, std::size_t k);

/// "layer,unit,score" rows for every growable layer.
std::string saliency_csv(const SaliencyTable& table, const Network& net);

}  // namespace cgap
