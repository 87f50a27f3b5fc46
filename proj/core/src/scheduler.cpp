// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "cgap/accounting.hpp"
#include "cgap/errors.hpp"
#include "cgap/ops.hpp"

namespace cgap {

using nlohmann::json;

namespace {

constexpr std::size_t kProbeSamples = 2000;

json names_of(const Network& net, std::span<const UnitId> units) {
  json out = json::array();
  for (const auto& u : units) out.push_back({net.layer_name(u.layer), u.unit});
  return out;
}

}  // namespace

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::Baseline: return "baseline";
    case Mode::Cgap: return "cgap";
    case Mode::CgapRandomGrowth: return "cgap_random_growth";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  if (name == "baseline") return Mode::Baseline;
  if (name == "cgap") return Mode::Cgap;
  if (name == "cgap_random_growth") return Mode::CgapRandomGrowth;
  throw ConfigError("train.mode: unknown mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(initial_lr > 0.0f)) throw ConfigError("train.initial_lr must be > 0");
  if (!(lr_drop_factor >= 1.0f)) throw ConfigError("train.lr_drop_factor must be >= 1");
  if (!(lr_drop_every_fraction > 0.0f && lr_drop_every_fraction <= 1.0f)) {
    throw ConfigError("train.lr_drop_every_fraction must be in (0, 1]");
  }
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("train.momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0f)) throw ConfigError("train.weight_decay must be >= 0");
}

Architecture ModelConfig::seed_architecture(InputShape input, std::size_t classes) const {
  return lenet_architecture(input, conv_widths, fc_widths, classes, kernel);
}

Architecture ModelConfig::baseline_architecture(InputShape input, std::size_t classes) const {
  return lenet_architecture(input, baseline_conv_widths, baseline_fc_widths, classes, kernel);
}

std::vector<std::size_t> ModelConfig::baseline_widths(std::size_t classes) const {
  std::vector<std::size_t> out(baseline_conv_widths);
  out.insert(out.end(), baseline_fc_widths.begin(), baseline_fc_widths.end());
  out.push_back(classes);
  return out;
}

void ModelConfig::validate() const {
  if (conv_widths.size() != baseline_conv_widths.size()) {
    throw ConfigError("model.baseline_conv_widths must have as many entries as model.conv_widths");
  }
  if (fc_widths.size() != baseline_fc_widths.size()) {
    throw ConfigError("model.baseline_fc_widths must have as many entries as model.fc_widths");
  }
  const auto positive = [](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::size_t w) { return w > 0; });
  };
  if (!positive(conv_widths)) throw ConfigError("model.conv_widths entries must be > 0");
  if (!positive(fc_widths)) throw ConfigError("model.fc_widths entries must be > 0");
  if (!positive(baseline_conv_widths)) throw ConfigError("model.baseline_conv_widths entries must be > 0");
  if (!positive(baseline_fc_widths)) throw ConfigError("model.baseline_fc_widths entries must be > 0");
  if (kernel < 1) throw ConfigError("model.kernel must be >= 1");
}

float lr_at_epoch(const TrainConfig& config, std::size_t epoch) {
  const auto step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(config.lr_drop_every_fraction) *
                                             static_cast<double>(config.epochs))));
  const auto drops = static_cast<int>(epoch / step);
  return static_cast<float>(static_cast<double>(config.initial_lr) /
                            std::pow(static_cast<double>(config.lr_drop_factor), drops));
}

void sgd_step(Network& net, float lr, float momentum, float weight_decay) {
  for (const std::size_t i : net.param_layers()) {
    LayerState& l = net.layer(i);
    if (!l.weights.has_grad() || !l.bias.has_grad()) {
      throw StateError("sgd_step: " + net.layer_name(i) + " has no gradients");
    }
    auto w = l.weights.data();
    const auto gw = l.weights.grad();
    auto vw = l.weight_velocity.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      vw[k] = momentum * vw[k] + gw[k] + weight_decay * w[k];
      w[k] -= lr * vw[k];
    }
    auto b = l.bias.data();
    const auto gb = l.bias.grad();
    auto vb = l.bias_velocity.data();
    for (std::size_t k = 0; k < b.size(); ++k) {
      vb[k] = momentum * vb[k] + gb[k];
      b[k] -= lr * vb[k];
    }
  }
  net.apply_mask();
}

EvalResult evaluate(Network& net, const Dataset& data, std::size_t batch_size) {
  EvalResult r;
  if (data.size() == 0) return r;
  std::vector<std::size_t> idx;
  std::vector<std::int32_t> labels;
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor x = data.gather(idx, labels);
    const Tensor logits = net.forward(x);
    net.clear_cache();
    loss += static_cast<double>(softmax_cross_entropy(logits, labels)) * static_cast<double>(idx.size());
    const auto pred = argmax_rows(logits);
    for (std::size_t b = 0; b < pred.size(); ++b) correct += pred[b] == labels[b];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  r.loss = loss / static_cast<double>(data.size());
  return r;
}

void score_pass(Network& net, SaliencyTable& table, const Dataset& data, std::size_t batch_size) {
  std::vector<std::size_t> idx;
  std::vector<std::int32_t> labels;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor x = data.gather(idx, labels);
    Tensor logits = net.forward(x);
    softmax_cross_entropy_backward(logits, labels);
    net.backward(logits.take_grad());
    table.accumulate(net);
  }
}

Trainer::Trainer(RunSettings settings, const Dataset& train, const Dataset& test)
    : settings_(std::move(settings)), train_(&train), test_(&test) {
  settings_.train.validate();
  settings_.growth.validate();
  settings_.prune.validate();
  settings_.model.validate();
}

void Trainer::start() {
  state_ = RunState{};
  state_.rng = Rng(settings_.train.seed);
  const ModelConfig& m = settings_.model;
  const Architecture arch = settings_.train.mode == Mode::Baseline
                                ? m.baseline_architecture(train_->shape, train_->classes)
                                : m.seed_architecture(train_->shape, train_->classes);
  state_.net = build_network(arch);
  init_parameters(state_.net, state_.rng);
  if (settings_.prune.hard_mask && grows()) state_.net.enable_hard_mask();
  state_.table.reset(state_.net);
}

void Trainer::resume(RunState state) {
  state_ = std::move(state);
  if (!state_.table.is_current(state_.net)) state_.table.reset(state_.net);
}

void Trainer::log_event(std::string line) { state_.events.push_back(std::move(line)); }

void Trainer::grow(std::size_t epoch) {
  if (state_.capacity_reached) return;
  Network& net = state_.net;
  if (capacity_reached(net, settings_.growth)) {
    state_.capacity_reached = true;
    log_event(json{{"type", "capacity_reached"}, {"epoch", epoch}, {"widths", net.widths()}}.dump());
    return;
  }
  const SourceSelection selection = settings_.train.mode == Mode::CgapRandomGrowth
                                        ? SourceSelection::Random
                                        : SourceSelection::Saliency;
  const GrowthEvent ev =
      grow_network(net, state_.table, settings_.growth, state_.rng, selection, epoch);
  json layers = json::array();
  for (const auto& lg : ev.layers) {
    json pairs = json::array();
    for (const auto& p : lg.pairs) pairs.push_back({p.source_before, p.source_after, p.newborn});
    layers.push_back({{"layer", net.layer_name(lg.layer)}, {"pairs", pairs}});
  }
  log_event(json{{"type", "growth"},
                 {"epoch", epoch},
                 {"selection", selection == SourceSelection::Random ? "random" : "saliency"},
                 {"layers", layers},
                 {"widths", ev.widths},
                 {"params", param_count(net)}}
                .dump());
}

void Trainer::prune(std::size_t epoch) {
  Network& net = state_.net;
  bool rescored = false;
  const auto params = net.param_layers();
  if (std::any_of(params.begin(), params.end(),
                  [&](std::size_t l) { return state_.table.batch_count(l) == 0; })) {
    // Growth in this epoch emptied the window; score the grown network
    // before choosing weights to zero.
    score_pass(net, state_.table, *train_, settings_.train.batch_size);
    rescored = true;
  }
  const bool first = !state_.first_prune_done;
  EvalResult before, after;
  const Dataset probe = train_->head(kProbeSamples);
  if (first) before = evaluate(net, probe);
  const PruneEvent ev = prune_network(net, state_.table, settings_.prune, epoch);
  if (first) after = evaluate(net, probe);
  state_.first_prune_done = true;
  last_prune_ = ev;

  json zeroed = json::array();
  for (const auto& [layer, count] : ev.zeroed) {
    zeroed.push_back({{"layer", net.layer_name(layer)}, {"count", count}});
  }
  json line{{"type", "prune"},
            {"epoch", epoch},
            {"rescored", rescored},
            {"zeroed", zeroed},
            {"removed", names_of(net, ev.removed)},
            {"refused", names_of(net, ev.refused)},
            {"widths", ev.widths},
            {"params", param_count(net)}};
  if (first) {
    line["probe_loss_before"] = before.loss;
    line["probe_loss_after"] = after.loss;
  }
  log_event(line.dump());
}

const EpochRecord& Trainer::run_epoch() {
  if (done()) throw StateError("run_epoch: all epochs are complete");
  const TrainConfig& tc = settings_.train;
  const std::size_t epoch = state_.next_epoch;
  const float lr = lr_at_epoch(tc, epoch);
  Network& net = state_.net;
  const Dataset& data = *train_;
  const std::size_t n = data.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  state_.rng.shuffle(order);

  const std::size_t batches = (n + tc.batch_size - 1) / tc.batch_size;
  const std::size_t sweeps = settings_.growth.sweeps_per_epoch;
  bool grew = false;
  std::vector<std::int32_t> labels;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t start = b * tc.batch_size;
    const std::size_t end = std::min(n, start + tc.batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    const Tensor x = data.gather(idx, labels);
    Tensor logits = net.forward(x);
    loss_sum += static_cast<double>(softmax_cross_entropy(logits, labels)) *
                static_cast<double>(idx.size());
    const auto pred = argmax_rows(logits);
    for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == labels[k];
    softmax_cross_entropy_backward(logits, labels);
    net.backward(logits.take_grad());
    if (grows()) state_.table.accumulate(net);
    sgd_step(net, lr, tc.momentum, tc.weight_decay);

    if (grows() && sweeps > 0 && (b + 1) * sweeps / batches > b * sweeps / batches) {
      const std::uint64_t before = net.version();
      grow(epoch);
      grew |= net.version() != before;
    }
  }

  EpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss = loss_sum / static_cast<double>(n);
  rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);

  bool pruned = false;
  if (grows()) {
    if (!state_.pruning_active && rec.train_accuracy > settings_.prune.tau_accu) {
      state_.pruning_active = true;
      log_event(json{{"type", "prune_trigger"}, {"epoch", epoch}, {"train_acc", rec.train_accuracy}}
                    .dump());
    }
    if (sweeps == 0 && epoch > 0 && epoch % settings_.growth.period_epochs == 0) {
      const std::uint64_t before = net.version();
      grow(epoch);
      grew |= net.version() != before;
    }
    if (state_.pruning_active && epoch > 0 && epoch % settings_.prune.period_epochs == 0) {
      prune(epoch);
      pruned = true;
    }
  }

  const EvalResult test = evaluate(net, *test_);
  rec.test_accuracy = test.accuracy;
  rec.test_loss = test.loss;
  rec.params = param_count(net);
  rec.flops = flop_count(net);
  rec.widths = net.widths();
  rec.event = grew && pruned ? "growth+prune" : grew ? "growth" : pruned ? "prune" : "none";
  state_.records.push_back(std::move(rec));
  ++state_.next_epoch;
  if (on_epoch_end) on_epoch_end(*this);
  return state_.records.back();
}

void Trainer::run(std::optional<std::size_t> stop_after) {
  while (!done() && (!stop_after || state_.next_epoch < *stop_after)) run_epoch();
}

RunResult run_training(const Dataset& train, const Dataset& test, RunSettings settings) {
  Trainer trainer(std::move(settings), train, test);
  trainer.start();
  trainer.run();
  RunState& s = trainer.state();
  return {std::move(s.net), std::move(s.records), std::move(s.events)};
}

RunResult run_baseline(const Dataset& train, const Dataset& test, RunSettings settings) {
  settings.train.mode = Mode::Baseline;
  return run_training(train, test, std::move(settings));
}

RunResult run_cgap(const Dataset& train, const Dataset& test, RunSettings settings) {
  settings.train.mode = Mode::Cgap;
  return run_training(train, test, std::move(settings));
}

RunResult run_random_growth(const Dataset& train, const Dataset& test, RunSettings settings) {
  settings.train.mode = Mode::CgapRandomGrowth;
  return run_training(train, test, std::move(settings));
}

std::string metrics_csv(std::span<const EpochRecord> records) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,train_loss,train_acc,test_acc,params,flops,event\n";
  for (const auto& r : records) {
    os << r.epoch << ',' << r.train_loss << ',' << r.train_accuracy << ',' << r.test_accuracy << ','
       << r.params << ',' << r.flops << ',' << r.event << '\n';
  }
  return os.str();
}

}  // namespace cgap
