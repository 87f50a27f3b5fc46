// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/accounting.hpp"

#include <cmath>
#include <sstream>

#include "cgap/errors.hpp"

namespace cgap {

ModelFootprint footprint(const Architecture& arch) {
  ModelFootprint fp;
  std::size_t h = arch.input.height, w = arch.input.width;
  std::size_t conv_n = 0, fc_n = 0;
  for (const LayerSpec& l : arch.layers) {
    switch (l.kind) {
      case LayerKind::Conv: {
        if (h < l.kernel || w < l.kernel) {
          throw DimensionError("flop_count: conv" + std::to_string(conv_n + 1) + " kernel " +
                               std::to_string(l.kernel) + " exceeds " + std::to_string(h) + "x" +
                               std::to_string(w) + " input");
        }
        h = h - l.kernel + 1;
        w = w - l.kernel + 1;
        const std::size_t k2 = l.kernel * l.kernel;
        fp.layers.push_back({"conv" + std::to_string(++conv_n), l.out * l.in * k2 + l.out,
                             2 * k2 * l.in * l.out * h * w});
        break;
      }
      case LayerKind::Fc:
        fp.layers.push_back({"fc" + std::to_string(++fc_n), l.out * l.in + l.out,
                             2 * l.in * l.out});
        break;
      case LayerKind::Pool:
        h /= 2;
        w /= 2;
        break;
      default:
        break;
    }
  }
  for (const auto& l : fp.layers) {
    fp.total_params += l.params;
    fp.total_flops += l.flops;
  }
  return fp;
}

std::size_t param_count(const Architecture& arch) { return footprint(arch).total_params; }
std::size_t param_count(const Network& net) { return param_count(net.architecture()); }
std::size_t flop_count(const Architecture& arch) { return footprint(arch).total_flops; }
std::size_t flop_count(const Network& net) { return flop_count(net.architecture()); }

Architecture with_widths(const Architecture& arch, std::span<const std::size_t> widths) {
  Architecture out = arch;
  std::size_t next = 0;
  std::size_t channels = arch.input.channels, h = arch.input.height, w = arch.input.width;
  std::size_t features = 0;
  for (LayerSpec& l : out.layers) {
    switch (l.kind) {
      case LayerKind::Conv:
        if (next >= widths.size()) throw DimensionError("with_widths: too few widths");
        l.in = channels;
        l.out = widths[next++];
        channels = l.out;
        h = h - l.kernel + 1;
        w = w - l.kernel + 1;
        break;
      case LayerKind::Pool:
        h /= 2;
        w /= 2;
        break;
      case LayerKind::Flatten:
        features = channels * h * w;
        break;
      case LayerKind::Fc:
        if (next >= widths.size()) throw DimensionError("with_widths: too few widths");
        l.in = features;
        l.out = widths[next++];
        features = l.out;
        break;
      default:
        break;
    }
  }
  if (next != widths.size()) throw DimensionError("with_widths: too many widths");
  return out;
}

std::string layer_sizes_csv(const Network& net, std::span<const std::size_t> baseline_widths) {
  const auto params = net.param_layers();
  if (baseline_widths.size() != params.size()) {
    throw DimensionError("layer_sizes_csv: " + std::to_string(baseline_widths.size()) +
                         " baseline widths for " + std::to_string(params.size()) + " layers");
  }
  std::ostringstream os;
  os << "layer,width,baseline_width,ratio\n";
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t width = net.layer(params[i]).out;
    os << net.layer_name(params[i]) << ',' << width << ',' << baseline_widths[i] << ','
       << static_cast<double>(width) / static_cast<double>(baseline_widths[i]) << '\n';
  }
  return os.str();
}

std::string weight_heatmap(const Network& net, std::size_t layer) {
  const LayerState& l = net.layer(layer);
  if (!l.parameterized()) {
    throw DimensionError("weight_heatmap: " + net.layer_name(layer) + " has no weights");
  }
  const std::size_t k2 = l.kind == LayerKind::Conv ? l.kernel * l.kernel : 1;
  std::ostringstream os;
  os.precision(7);
  for (std::size_t i = 0; i < l.in; ++i) {
    for (std::size_t o = 0; o < l.out; ++o) {
      const float* kernel = l.weights.raw() + (o * l.in + i) * k2;
      float sum = 0.0f;
      for (std::size_t k = 0; k < k2; ++k) sum += std::fabs(kernel[k]);
      os << (o ? " " : "") << sum / static_cast<float>(k2);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<ScheduleStep> simulate_schedule(const Architecture& seed, const GrowthConfig& growth,
                                            const ScheduleAssumptions& assumptions,
                                            std::size_t epochs) {
  std::vector<std::size_t> widths;
  for (const LayerSpec& l : seed.layers) {
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::Fc) widths.push_back(l.out);
  }
  std::vector<ScheduleStep> steps;
  bool capacity = false;
  const auto try_grow = [&]() {
    if (capacity || !assumptions.growth_enabled) return false;
    if (widths.front() + growth_count(widths.front(), growth.beta) > growth.tau_capa) {
      capacity = true;
      return false;
    }
    widths = grown_widths(widths, growth.beta);
    return true;
  };

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    ScheduleStep step;
    step.epoch = epoch;
    if (growth.sweeps_per_epoch > 0) {
      for (std::size_t s = 0; s < growth.sweeps_per_epoch; ++s) step.grew |= try_grow();
    } else if (epoch > 0 && epoch % growth.period_epochs == 0) {
      step.grew = try_grow();
    }
    if (assumptions.removal_fraction > 0.0 && epoch >= assumptions.prune_start_epoch &&
        epoch > 0 && epoch % assumptions.prune_period_epochs == 0) {
      for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const auto drop = static_cast<std::size_t>(
            std::floor(assumptions.removal_fraction * static_cast<double>(widths[i])));
        widths[i] = std::max<std::size_t>(1, widths[i] - std::min(drop, widths[i]));
      }
      step.pruned = true;
    }
    step.widths = widths;
    const auto fp = footprint(with_widths(seed, widths));
    step.params = fp.total_params;
    step.flops = fp.total_flops;
    steps.push_back(std::move(step));
  }
  return steps;
}

std::string widths_string(std::span<const std::size_t> widths) {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(widths[i]);
  }
  return s;
}

std::string schedule_csv(std::span<const ScheduleStep> steps) {
  std::ostringstream os;
  os << "epoch,widths,params,flops,event\n";
  for (const auto& s : steps) {
    const char* event = s.grew && s.pruned ? "growth+prune" : s.grew ? "growth"
                                                          : s.pruned ? "prune"
                                                                     : "none";
    os << s.epoch << ',' << widths_string(s.widths) << ',' << s.params << ',' << s.flops << ','
       << event << '\n';
  }
  return os.str();
}

}  // namespace cgap
