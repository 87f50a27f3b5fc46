// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cgap {

/// Base class of every error raised by the library. `kind()` is a short
/// stable token used by the CLI's machine-parsable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Shapes of two adjacent tensors or layers disagree.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

/// An operation was called in the wrong lifecycle state (backward before
/// forward, missing gradients, ...).
class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error("state", what) {}
};

/// A structural edit would leave a layer with zero units, or touches a layer
/// that must never change width.
class LayerCollapseError : public Error {
 public:
  explicit LayerCollapseError(const std::string& what) : Error("layer-collapse", what) {}
};

/// A saliency table was used after the topology it describes was edited.
class StaleTableError : public Error {
 public:
  explicit StaleTableError(const std::string& what) : Error("stale-table", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what) : Error("checkpoint", what) {}
};

/// Dataset ingestion failures. Each failure mode has its own kind token.
class LoadError : public Error {
 public:
  enum class Reason { Io, BadMagic, Truncated, SizeMismatch, CountMismatch };

  LoadError(Reason reason, const std::string& what)
      : Error(token(reason), what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  static std::string token(Reason r) {
    switch (r) {
      case Reason::Io: return "load-io";
      case Reason::BadMagic: return "load-bad-magic";
      case Reason::Truncated: return "load-truncated";
      case Reason::SizeMismatch: return "load-size-mismatch";
      case Reason::CountMismatch: return "load-count-mismatch";
    }
    return "load";
  }

  Reason reason_;
};

}  // namespace cgap
