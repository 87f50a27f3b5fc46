// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cgap/errors.hpp"

namespace cgap {

namespace {

constexpr char kMagic[8] = {'C', 'G', 'A', 'P', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void floats(std::span<const float> v) {
    u64(v.size());
    for (const float f : v) u32(std::bit_cast<std::uint32_t>(f));
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CheckpointError("truncated checkpoint");
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::size_t size() { return static_cast<std::size_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  /// Reads a float blob whose length must equal `expected`.
  void floats_into(std::span<float> dst, const std::string& what) {
    const std::uint64_t n = u64();
    if (n != dst.size()) {
      throw CheckpointError("corrupt blob length for " + what + ": expected " +
                            std::to_string(dst.size()) + ", found " + std::to_string(n));
    }
    need(n * 4);
    for (float& f : dst) f = std::bit_cast<float>(u32());
  }
  std::vector<float> floats() {
    const std::uint64_t n = u64();
    need(n * 4);
    std::vector<float> v(n);
    for (float& f : v) f = std::bit_cast<float>(u32());
    return v;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const RunState& s = ckpt.state;
  const Network& net = s.net;
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u64(net.input_shape().channels);
  w.u64(net.input_shape().height);
  w.u64(net.input_shape().width);
  w.u64(net.layers().size());
  for (const LayerState& l : net.layers()) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u64(l.out);
    w.u64(l.in);
    w.u64(l.kernel);
  }
  w.u8(static_cast<std::uint8_t>((net.hard_mask() ? 1 : 0) | (s.pruning_active ? 2 : 0) |
                                 (s.capacity_reached ? 4 : 0) | (s.first_prune_done ? 8 : 0)));
  w.u64(net.version());
  w.u64(s.next_epoch);
  for (const std::size_t i : net.param_layers()) {
    const LayerState& l = net.layer(i);
    w.floats(l.weights.values());
    w.floats(l.bias.values());
    w.floats(l.weight_velocity.values());
    w.floats(l.bias_velocity.values());
    w.floats(l.mask.values());
  }
  w.str(s.rng.save_state());
  w.u64(s.table.version());
  w.u64(s.table.raw_layers().size());
  for (const auto& l : s.table.raw_layers()) {
    w.u64(l.batches);
    w.floats(l.per_weight);
  }
  w.u64(s.records.size());
  for (const EpochRecord& r : s.records) {
    w.u64(r.epoch);
    w.f64(r.train_loss);
    w.f64(r.train_accuracy);
    w.f64(r.test_accuracy);
    w.f64(r.test_loss);
    w.u64(r.params);
    w.u64(r.flops);
    w.str(r.event);
    w.u64(r.widths.size());
    for (const std::size_t x : r.widths) w.u64(x);
  }
  w.u64(s.events.size());
  for (const std::string& e : s.events) w.str(e);
  w.str(ckpt.config_json);
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(sizeof(kMagic));
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Architecture arch;
  arch.input.channels = r.size();
  arch.input.height = r.size();
  arch.input.width = r.size();
  const std::size_t count = r.size();
  if (count > 4096) throw CheckpointError("corrupt layer count");
  for (std::size_t i = 0; i < count; ++i) {
    LayerSpec spec;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(LayerKind::Flatten)) {
      throw CheckpointError("corrupt layer kind " + std::to_string(kind));
    }
    spec.kind = static_cast<LayerKind>(kind);
    spec.out = r.size();
    spec.in = r.size();
    spec.kernel = r.size();
    arch.layers.push_back(spec);
  }
  const std::uint8_t flags = r.u8();

  Checkpoint ckpt;
  RunState& s = ckpt.state;
  try {
    s.net = build_network(arch);
  } catch (const Error& e) {
    throw CheckpointError(std::string("corrupt topology descriptor: ") + e.what());
  }
  if (flags & 1) s.net.enable_hard_mask();
  s.pruning_active = flags & 2;
  s.capacity_reached = flags & 4;
  s.first_prune_done = flags & 8;
  const std::uint64_t net_version = r.u64();
  s.next_epoch = r.size();
  for (const std::size_t i : s.net.param_layers()) {
    LayerState& l = s.net.layer(i);
    const std::string name = s.net.layer_name(i);
    r.floats_into(l.weights.data(), name + " weights");
    r.floats_into(l.bias.data(), name + " bias");
    r.floats_into(l.weight_velocity.data(), name + " weight velocity");
    r.floats_into(l.bias_velocity.data(), name + " bias velocity");
    r.floats_into(l.mask.data(), name + " mask");
  }
  s.net.restore_version(net_version);
  try {
    s.rng.load_state(r.str());
  } catch (const std::exception&) {
    throw CheckpointError("corrupt rng state");
  }
  const std::uint64_t table_version = r.u64();
  const std::size_t table_layers = r.size();
  if (table_layers != 0 && table_layers != s.net.layers().size()) {
    throw CheckpointError("corrupt saliency table layer count");
  }
  std::vector<SaliencyTable::LayerScores> scores(table_layers);
  for (std::size_t i = 0; i < table_layers; ++i) {
    scores[i].batches = r.size();
    scores[i].per_weight = r.floats();
    if (!scores[i].per_weight.empty() &&
        scores[i].per_weight.size() != s.net.layer(i).weights.size()) {
      throw CheckpointError("corrupt blob length for saliency of layer " + std::to_string(i));
    }
  }
  s.table.restore(table_version, std::move(scores));
  const std::size_t records = r.size();
  for (std::size_t i = 0; i < records; ++i) {
    EpochRecord rec;
    rec.epoch = r.size();
    rec.train_loss = r.f64();
    rec.train_accuracy = r.f64();
    rec.test_accuracy = r.f64();
    rec.test_loss = r.f64();
    rec.params = r.size();
    rec.flops = r.size();
    rec.event = r.str();
    const std::size_t nw = r.size();
    r.need(nw * 8);
    for (std::size_t k = 0; k < nw; ++k) rec.widths.push_back(r.size());
    s.records.push_back(std::move(rec));
  }
  const std::size_t events = r.size();
  for (std::size_t i = 0; i < events; ++i) s.events.push_back(r.str());
  ckpt.config_json = r.str();
  if (!r.at_end()) throw CheckpointError("trailing bytes after checkpoint");
  return ckpt;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("io", "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("io", "cannot rename " + tmp.string() + ": " + ec.message());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(ckpt);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace cgap
