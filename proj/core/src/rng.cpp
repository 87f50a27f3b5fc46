// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cgap/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cgap/errors.hpp"

namespace cgap {

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw StateError("Rng::index called with n == 0");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

float Rng::normal() {
  // Shift u1 into (0, 1] so log() stays finite.
  const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1p-53;
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                            std::cos(2.0 * std::numbers::pi * u2));
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::load_state(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw CheckpointError("malformed RNG state");
}

}  // namespace cgap
