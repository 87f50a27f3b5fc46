// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cgap/errors.hpp"

namespace cgap {

void PruneConfig::validate() const {
  const auto open_unit = [](float v) { return v > 0.0f && v < 1.0f; };
  if (!open_unit(gamma_w)) throw ConfigError("prune.gamma_w must be in (0, 1)");
  if (!open_unit(gamma_f)) throw ConfigError("prune.gamma_f must be in (0, 1)");
  if (!open_unit(gamma_n)) throw ConfigError("prune.gamma_n must be in (0, 1)");
  if (period_epochs < 1) throw ConfigError("prune.period_epochs must be >= 1");
  // Values above 1 are accepted: they disable pruning.
  if (!(tau_accu > 0.0f)) throw ConfigError("prune.tau_accu must be > 0");
}

std::size_t zero_out_weights(Network& net, std::size_t layer, std::span<const float> ps_scores,
                             float gamma_w) {
  LayerState& l = net.layer(layer);
  if (!l.parameterized()) {
    throw DimensionError("zero_out_weights: " + net.layer_name(layer) + " has no weights");
  }
  const std::size_t n = l.weights.size();
  if (ps_scores.size() != n) {
    throw StaleTableError("zero_out_weights: " + std::to_string(ps_scores.size()) +
                          " scores for " + net.layer_name(layer) + " with " + std::to_string(n) +
                          " weights");
  }
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(gamma_w) *
                                                     static_cast<double>(n)));
  if (k == 0) return 0;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto lower = [&](std::size_t a, std::size_t b) {
    return ps_scores[a] != ps_scores[b] ? ps_scores[a] < ps_scores[b] : a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), lower);
  auto w = l.weights.data();
  for (std::size_t i = 0; i < k; ++i) {
    w[idx[i]] = 0.0f;
    if (!l.mask.empty()) l.mask[idx[i]] = 0.0f;
  }
  return k;
}

float unit_sparsity(const Network& net, UnitId unit) {
  const LayerState& l = net.layer(unit.layer);
  const auto fan = net.fan_in(unit.layer, unit.unit);
  std::size_t zeros = static_cast<std::size_t>(std::count(fan.begin(), fan.end(), 0.0f));
  std::size_t total = fan.size();
  if (l.kind == LayerKind::Fc && !net.is_output_layer(unit.layer)) {
    const auto column = net.consumer_slice(unit.layer, unit.unit);
    zeros += static_cast<std::size_t>(std::count(column.begin(), column.end(), 0.0f));
    total += column.size();
  }
  return static_cast<float>(zeros) / static_cast<float>(total);
}

RemovalReport remove_sparse_units(Network& net, const PruneConfig& config) {
  RemovalReport report;
  std::vector<UnitId> candidates;
  for (const std::size_t layer : net.growable_layers()) {
    const LayerState& l = net.layer(layer);
    const float threshold = l.kind == LayerKind::Conv ? config.gamma_f : config.gamma_n;
    for (std::size_t u = 0; u < l.out; ++u) {
      const UnitId id{layer, u};
      const float s = unit_sparsity(net, id);
      report.sparsity.push_back({id, s, false});
      if (s > threshold) candidates.push_back(id);
    }
  }
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  for (const UnitId& id : candidates) {
    if (net.layer(id.layer).out <= 1) {
      report.refused.push_back(id);
      continue;
    }
    net.remove_unit(id.layer, id.unit);
    report.removed.push_back(id);
  }
  for (auto& entry : report.sparsity) {
    entry.removed = std::binary_search(report.removed.begin(), report.removed.end(), entry.unit,
                                       std::greater<>());
  }
  return report;
}

PruneEvent prune_network(Network& net, SaliencyTable& table, const PruneConfig& config,
                         std::size_t epoch) {
  table.check_current(net);
  PruneEvent event;
  event.epoch = epoch;
  for (const std::size_t layer : net.param_layers()) {
    const auto ps = weight_prune_scores(table, net, layer);
    event.zeroed.emplace_back(layer, zero_out_weights(net, layer, ps, config.gamma_w));
  }
  RemovalReport report = remove_sparse_units(net, config);
  event.removed = std::move(report.removed);
  event.refused = std::move(report.refused);
  event.sparsity = std::move(report.sparsity);
  event.widths = net.widths();
  table.reset(net);
  return event;
}

std::string sparsity_rows(const PruneEvent& event, const std::vector<std::string>& layer_names) {
  std::ostringstream os;
  os.precision(6);
  for (const auto& s : event.sparsity) {
    os << event.epoch << ',' << layer_names.at(s.unit.layer) << ',' << s.unit.unit << ','
       << s.sparsity << ',' << (s.removed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace cgap
