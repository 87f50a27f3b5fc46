// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>

#include "cgap/accounting.hpp"
#include "cgap/data.hpp"
#include "cgap/scheduler.hpp"

namespace cgap {

enum class DataSource : std::uint8_t { Mnist = 0, Synthetic = 1 };

struct DataConfig {
  DataSource source = DataSource::Mnist;
  std::string dir = "data/mnist";
  std::size_t train_limit = 0;  // 0 keeps every sample
  std::size_t test_limit = 0;
  std::size_t synthetic_classes = 10;
  std::size_t synthetic_train = 2000;
  std::size_t synthetic_test = 500;
  std::size_t synthetic_spatial = 28;
};

/// Assumptions for the training-free `simulate` trajectory.
struct SimulateConfig {
  double removal_fraction = 0.0;
  std::size_t prune_start_epoch = 0;
};

struct RunConfig {
  RunSettings settings;
  DataConfig data;
  SimulateConfig simulate;
};

/// Parses a JSON document with optional sections train, growth, prune, model,
/// data and simulate. Unknown keys, wrong types and out-of-range values throw
/// ConfigError naming the field ("growth.beta"). growth.tau_capa defaults to
/// the first baseline conv width.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every field, explicit, in a fixed key order.
nlohmann::json to_json(const RunConfig& config);
std::string canonical_config(const RunConfig& config);

ScheduleAssumptions schedule_assumptions(const RunConfig& config);

/// Loads or generates the train/test pair described by `config.data`.
/// Synthetic sets are derived from train.seed.
std::pair<Dataset, Dataset> load_datasets(const RunConfig& config);

}  // namespace cgap
