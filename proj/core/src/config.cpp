// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cgap/errors.hpp"

namespace cgap {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&, const std::string&)>;

std::size_t as_size(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

float as_float(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<float>();
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

std::vector<std::size_t> as_sizes(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_size(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void read_section(const json& doc, const std::string& name,
                  const std::map<std::string, Setter>& setters) {
  if (!doc.contains(name)) return;
  const json& sec = doc.at(name);
  if (!sec.is_object()) throw ConfigError(name + ": expected an object");
  for (const auto& [key, value] : sec.items()) {
    const std::string path = name + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(path + ": unknown key");
    it->second(value, path);
  }
}

std::string source_name(DataSource s) { return s == DataSource::Mnist ? "mnist" : "synthetic"; }

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    static const char* kSections[] = {"train", "growth", "prune", "model", "data", "simulate"};
    if (std::find(std::begin(kSections), std::end(kSections), key) == std::end(kSections)) {
      throw ConfigError(key + ": unknown section");
    }
  }
  RunConfig c;
  TrainConfig& t = c.settings.train;
  GrowthConfig& g = c.settings.growth;
  PruneConfig& p = c.settings.prune;
  ModelConfig& m = c.settings.model;
  DataConfig& d = c.data;
  SimulateConfig& s = c.simulate;

  read_section(doc, "train", {
      {"epochs", [&](const json& v, const std::string& k) { t.epochs = as_size(v, k); }},
      {"batch_size", [&](const json& v, const std::string& k) { t.batch_size = as_size(v, k); }},
      {"initial_lr", [&](const json& v, const std::string& k) { t.initial_lr = as_float(v, k); }},
      {"lr_drop_factor", [&](const json& v, const std::string& k) { t.lr_drop_factor = as_float(v, k); }},
      {"lr_drop_every_fraction",
       [&](const json& v, const std::string& k) { t.lr_drop_every_fraction = as_float(v, k); }},
      {"momentum", [&](const json& v, const std::string& k) { t.momentum = as_float(v, k); }},
      {"weight_decay", [&](const json& v, const std::string& k) { t.weight_decay = as_float(v, k); }},
      {"seed", [&](const json& v, const std::string& k) { t.seed = as_size(v, k); }},
      {"mode",
       [&](const json& v, const std::string& k) {
         try {
           t.mode = parse_mode(as_string(v, k));
         } catch (const ConfigError&) {
           throw ConfigError(k + ": expected baseline, cgap or cgap_random_growth");
         }
       }},
  });
  bool tau_capa_set = false;
  read_section(doc, "growth", {
      {"beta", [&](const json& v, const std::string& k) { g.beta = as_float(v, k); }},
      {"sigma", [&](const json& v, const std::string& k) { g.sigma = as_float(v, k); }},
      {"mu", [&](const json& v, const std::string& k) { g.mu = as_float(v, k); }},
      {"period_epochs", [&](const json& v, const std::string& k) { g.period_epochs = as_size(v, k); }},
      {"sweeps_per_epoch",
       [&](const json& v, const std::string& k) { g.sweeps_per_epoch = as_size(v, k); }},
      {"tau_capa",
       [&](const json& v, const std::string& k) {
         g.tau_capa = as_size(v, k);
         tau_capa_set = true;
       }},
  });
  read_section(doc, "prune", {
      {"gamma_w", [&](const json& v, const std::string& k) { p.gamma_w = as_float(v, k); }},
      {"gamma_f", [&](const json& v, const std::string& k) { p.gamma_f = as_float(v, k); }},
      {"gamma_n", [&](const json& v, const std::string& k) { p.gamma_n = as_float(v, k); }},
      {"period_epochs", [&](const json& v, const std::string& k) { p.period_epochs = as_size(v, k); }},
      {"tau_accu", [&](const json& v, const std::string& k) { p.tau_accu = as_float(v, k); }},
      {"hard_mask", [&](const json& v, const std::string& k) { p.hard_mask = as_bool(v, k); }},
  });
  read_section(doc, "model", {
      {"conv_widths", [&](const json& v, const std::string& k) { m.conv_widths = as_sizes(v, k); }},
      {"fc_widths", [&](const json& v, const std::string& k) { m.fc_widths = as_sizes(v, k); }},
      {"kernel", [&](const json& v, const std::string& k) { m.kernel = as_size(v, k); }},
      {"baseline_conv_widths",
       [&](const json& v, const std::string& k) { m.baseline_conv_widths = as_sizes(v, k); }},
      {"baseline_fc_widths",
       [&](const json& v, const std::string& k) { m.baseline_fc_widths = as_sizes(v, k); }},
  });
  read_section(doc, "data", {
      {"source",
       [&](const json& v, const std::string& k) {
         const std::string name = as_string(v, k);
         if (name == "mnist") {
           d.source = DataSource::Mnist;
         } else if (name == "synthetic") {
           d.source = DataSource::Synthetic;
         } else {
           throw ConfigError(k + ": expected mnist or synthetic");
         }
       }},
      {"dir", [&](const json& v, const std::string& k) { d.dir = as_string(v, k); }},
      {"train_limit", [&](const json& v, const std::string& k) { d.train_limit = as_size(v, k); }},
      {"test_limit", [&](const json& v, const std::string& k) { d.test_limit = as_size(v, k); }},
      {"synthetic_classes",
       [&](const json& v, const std::string& k) { d.synthetic_classes = as_size(v, k); }},
      {"synthetic_train", [&](const json& v, const std::string& k) { d.synthetic_train = as_size(v, k); }},
      {"synthetic_test", [&](const json& v, const std::string& k) { d.synthetic_test = as_size(v, k); }},
      {"synthetic_spatial",
       [&](const json& v, const std::string& k) { d.synthetic_spatial = as_size(v, k); }},
  });
  read_section(doc, "simulate", {
      {"removal_fraction",
       [&](const json& v, const std::string& k) { s.removal_fraction = as_double(v, k); }},
      {"prune_start_epoch",
       [&](const json& v, const std::string& k) { s.prune_start_epoch = as_size(v, k); }},
  });

  if (!tau_capa_set && !m.baseline_conv_widths.empty()) g.tau_capa = m.baseline_conv_widths[0];

  t.validate();
  g.validate();
  p.validate();
  m.validate();
  if (d.synthetic_classes < 2) throw ConfigError("data.synthetic_classes must be >= 2");
  if (d.synthetic_train < 1) throw ConfigError("data.synthetic_train must be >= 1");
  if (d.synthetic_test < 1) throw ConfigError("data.synthetic_test must be >= 1");
  if (d.synthetic_spatial < m.kernel) throw ConfigError("data.synthetic_spatial must be >= model.kernel");
  if (!(s.removal_fraction >= 0.0 && s.removal_fraction < 1.0)) {
    throw ConfigError("simulate.removal_fraction must be in [0, 1)");
  }
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const RunConfig& c) {
  const TrainConfig& t = c.settings.train;
  const GrowthConfig& g = c.settings.growth;
  const PruneConfig& p = c.settings.prune;
  const ModelConfig& m = c.settings.model;
  const DataConfig& d = c.data;
  json doc = json::object();
  doc["train"] = {{"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"initial_lr", t.initial_lr},
                  {"lr_drop_factor", t.lr_drop_factor},
                  {"lr_drop_every_fraction", t.lr_drop_every_fraction},
                  {"momentum", t.momentum},
                  {"weight_decay", t.weight_decay},
                  {"seed", t.seed},
                  {"mode", std::string(mode_name(t.mode))}};
  doc["growth"] = {{"beta", g.beta},
                   {"sigma", g.sigma},
                   {"mu", g.mu},
                   {"period_epochs", g.period_epochs},
                   {"sweeps_per_epoch", g.sweeps_per_epoch},
                   {"tau_capa", g.tau_capa}};
  doc["prune"] = {{"gamma_w", p.gamma_w},
                  {"gamma_f", p.gamma_f},
                  {"gamma_n", p.gamma_n},
                  {"period_epochs", p.period_epochs},
                  {"tau_accu", p.tau_accu},
                  {"hard_mask", p.hard_mask}};
  doc["model"] = {{"conv_widths", m.conv_widths},
                  {"fc_widths", m.fc_widths},
                  {"kernel", m.kernel},
                  {"baseline_conv_widths", m.baseline_conv_widths},
                  {"baseline_fc_widths", m.baseline_fc_widths}};
  doc["data"] = {{"source", source_name(d.source)},
                 {"dir", d.dir},
                 {"train_limit", d.train_limit},
                 {"test_limit", d.test_limit},
                 {"synthetic_classes", d.synthetic_classes},
                 {"synthetic_train", d.synthetic_train},
                 {"synthetic_test", d.synthetic_test},
                 {"synthetic_spatial", d.synthetic_spatial}};
  doc["simulate"] = {{"removal_fraction", c.simulate.removal_fraction},
                     {"prune_start_epoch", c.simulate.prune_start_epoch}};
  return doc;
}

std::string canonical_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

ScheduleAssumptions schedule_assumptions(const RunConfig& config) {
  ScheduleAssumptions a;
  a.growth_enabled = config.settings.train.mode != Mode::Baseline;
  a.removal_fraction = config.simulate.removal_fraction;
  a.prune_start_epoch = config.simulate.prune_start_epoch;
  a.prune_period_epochs = config.settings.prune.period_epochs;
  return a;
}

std::pair<Dataset, Dataset> load_datasets(const RunConfig& config) {
  const DataConfig& d = config.data;
  if (d.source == DataSource::Synthetic) {
    const std::uint64_t seed = config.settings.train.seed;
    return {make_synthetic(d.synthetic_classes, d.synthetic_train, d.synthetic_spatial, seed),
            make_synthetic(d.synthetic_classes, d.synthetic_test, d.synthetic_spatial,
                           seed ^ 0x5bd1e995ULL)};
  }
  return {load_mnist_split(d.dir, true).head(d.train_limit),
          load_mnist_split(d.dir, false).head(d.test_limit)};
}

}  // namespace cgap
