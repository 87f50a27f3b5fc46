// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgap/data.hpp"
#include "cgap/growth.hpp"
#include "cgap/network.hpp"
#include "cgap/pruning.hpp"
#include "cgap/rng.hpp"
#include "cgap/saliency.hpp"

namespace cgap {

enum class Mode : std::uint8_t { Baseline = 0, Cgap = 1, CgapRandomGrowth = 2 };

std::string_view mode_name(Mode mode);
Mode parse_mode(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  float initial_lr = 0.1f;
  float lr_drop_factor = 10.0f;
  float lr_drop_every_fraction = 0.3f;
  float momentum = 0.9f;
  float weight_decay = 5e-4f;
  std::uint64_t seed = 1;
  Mode mode = Mode::Cgap;

  void validate() const;
};

/// LeNet-style family: conv(k)→relu→pool blocks, flatten, hidden fc→relu
/// layers and the class layer.
struct ModelConfig {
  std::vector<std::size_t> conv_widths{4, 10};
  std::vector<std::size_t> fc_widths{100};
  std::size_t kernel = 5;
  std::vector<std::size_t> baseline_conv_widths{20, 50};
  std::vector<std::size_t> baseline_fc_widths{500};

  Architecture seed_architecture(InputShape input, std::size_t classes) const;
  Architecture baseline_architecture(InputShape input, std::size_t classes) const;
  /// Baseline widths of every conv/fc layer including the class layer.
  std::vector<std::size_t> baseline_widths(std::size_t classes) const;
  void validate() const;
};

struct RunSettings {
  TrainConfig train;
  GrowthConfig growth;
  PruneConfig prune;
  ModelConfig model;
};

/// initial_lr / factor^floor(epoch / max(1, floor(fraction · E))).
float lr_at_epoch(const TrainConfig& config, std::size_t epoch);

/// v ← momentum·v + g + weight_decay·w (weights only); w ← w − lr·v.
/// Biases get the same update without the decay term.
void sgd_step(Network& net, float lr, float momentum, float weight_decay);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Full deterministic pass; leaves no gradients or saliency behind.
EvalResult evaluate(Network& net, const Dataset& data, std::size_t batch_size = 500);

/// Accumulates saliency over `data` in order without updating weights.
void score_pass(Network& net, SaliencyTable& table, const Dataset& data, std::size_t batch_size);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::size_t params = 0;
  std::size_t flops = 0;
  std::string event = "none";  // none | growth | prune | growth+prune
  std::vector<std::size_t> widths;

  bool operator==(const EpochRecord&) const = default;
};

/// Everything needed to continue a run bit-exactly.
struct RunState {
  Network net;
  Rng rng;
  SaliencyTable table;
  std::size_t next_epoch = 0;
  bool pruning_active = false;
  bool capacity_reached = false;
  bool first_prune_done = false;
  std::vector<EpochRecord> records;
  std::vector<std::string> events;  // one JSON object per line
};

/// The outer growth-and-pruning training loop. Per epoch: train all
/// minibatches (accumulating saliency), latch the pruning trigger on the
/// epoch's running training accuracy, grow on growth epochs until capacity,
/// then prune on prune epochs once triggered.
class Trainer {
 public:
  Trainer(RunSettings settings, const Dataset& train, const Dataset& test);

  /// Seeds the RNG and builds the initial (seed or baseline) network.
  void start();
  void resume(RunState state);

  bool done() const { return state_.next_epoch >= settings_.train.epochs; }
  const EpochRecord& run_epoch();
  /// Runs until done or until `stop_after` epochs have completed.
  void run(std::optional<std::size_t> stop_after = std::nullopt);

  std::function<void(const Trainer&)> on_epoch_end;

  const RunState& state() const { return state_; }
  RunState& state() { return state_; }
  const RunSettings& settings() const { return settings_; }
  /// The most recent prune event of this process, if any.
  const std::optional<PruneEvent>& last_prune() const { return last_prune_; }

 private:
  bool grows() const { return settings_.train.mode != Mode::Baseline; }
  void grow(std::size_t epoch);
  void prune(std::size_t epoch);
  void log_event(std::string line);

  RunSettings settings_;
  const Dataset* train_;
  const Dataset* test_;
  RunState state_;
  std::optional<PruneEvent> last_prune_;
};

struct RunResult {
  Network net;
  std::vector<EpochRecord> records;
  std::vector<std::string> events;
};

RunResult run_training(const Dataset& train, const Dataset& test, RunSettings settings);
RunResult run_baseline(const Dataset& train, const Dataset& test, RunSettings settings);
RunResult run_cgap(const Dataset& train, const Dataset& test, RunSettings settings);
RunResult run_random_growth(const Dataset& train, const Dataset& test, RunSettings settings);

/// Header "epoch,train_loss,train_acc,test_acc,params,flops,event".
std::string metrics_csv(std::span<const EpochRecord> records);

}  // namespace cgap
