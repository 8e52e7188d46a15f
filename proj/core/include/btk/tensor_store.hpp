// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "btk/linalg.hpp"

namespace btk {

/// Ordered set of named 2-D tensors plus string attributes.
///
/// On disk: magic "BTKT" | version u16-le | manifest length u32-le |
/// manifest JSON {"attrs": {...}, "tensors": [{"name", "shape": [r, c]}]} |
/// payload: every tensor as f32-le row-major, in manifest order.
class TensorStore {
 public:
  void add(std::string name, Matrix value);
  bool has(const std::string& name) const;
  /// Throws MissingEntry.
  const Matrix& get(const std::string& name) const;

  void set_attr(std::string key, std::string value) { attrs_[std::move(key)] = std::move(value); }
  /// Throws MissingEntry.
  const std::string& attr(const std::string& key) const;
  bool has_attr(const std::string& key) const { return attrs_.count(key) != 0; }
  const std::map<std::string, std::string>& attrs() const { return attrs_; }

  const std::vector<std::pair<std::string, Matrix>>& tensors() const { return tensors_; }

 private:
  std::vector<std::pair<std::string, Matrix>> tensors_;
  std::map<std::string, std::string> attrs_;
};

std::string encode_tensors(const TensorStore& store);
TensorStore decode_tensors(std::string_view bytes);

void save_tensors(const TensorStore& store, const std::filesystem::path& path);
TensorStore load_tensors(const std::filesystem::path& path);

inline constexpr std::uint16_t kTensorFormatVersion = 1;

}  // namespace btk
