// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cgap/growth.hpp"
#include "cgap/network.hpp"

namespace cgap {

// Counting conventions: parameters include biases; FLOPs are 2 × multiply-
// accumulates of conv and fc layers only (bias, activation and pooling are
// free). Counts are read from shapes, never from weight values.

struct LayerFootprint {
  std::string name;
  std::size_t params = 0;
  std::size_t flops = 0;
};

struct ModelFootprint {
  std::vector<LayerFootprint> layers;  // conv/fc layers only
  std::size_t total_params = 0;
  std::size_t total_flops = 0;
};

ModelFootprint footprint(const Architecture& arch);
std::size_t param_count(const Architecture& arch);
std::size_t param_count(const Network& net);
std::size_t flop_count(const Architecture& arch);
std::size_t flop_count(const Network& net);

/// Copy of `arch` with conv/fc widths replaced (and consumer input dims
/// re-derived). `widths` lists every conv/fc layer bottom to top.
Architecture with_widths(const Architecture& arch, std::span<const std::size_t> widths);

/// "layer,width,baseline_width,ratio", one row per conv/fc layer.
std::string layer_sizes_csv(const Network& net, std::span<const std::size_t> baseline_widths);

/// I_l rows × O_l columns of mean |w| over each kernel, whitespace separated.
std::string weight_heatmap(const Network& net, std::size_t layer);

struct ScheduleAssumptions {
  bool growth_enabled = true;
  /// Fraction of each growable layer's units removed per prune event.
  double removal_fraction = 0.0;
  /// First epoch at which pruning may fire (stands in for the accuracy trigger).
  std::size_t prune_start_epoch = 0;
  std::size_t prune_period_epochs = 1;
};

struct ScheduleStep {
  std::size_t epoch = 0;
  std::vector<std::size_t> widths;
  std::size_t params = 0;
  std::size_t flops = 0;
  bool grew = false;
  bool pruned = false;
};

/// Training-free size trajectory: applies the growth arithmetic and an assumed
/// removal fraction on the same epoch schedule as the trainer.
std::vector<ScheduleStep> simulate_schedule(const Architecture& seed, const GrowthConfig& growth,
                                            const ScheduleAssumptions& assumptions,
                                            std::size_t epochs);

/// "epoch,widths,params,flops,event" rows with widths joined by '-'.
std::string schedule_csv(std::span<const ScheduleStep> steps);

std::string widths_string(std::span<const std::size_t> widths);

}  // namespace cgap
