// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace btk {

enum class Modality { kText, kImage, kView };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view s);

struct BankManifest {
  std::string name;
  Modality modality = Modality::kText;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  bool normalized = false;
  std::string dtype = "f32-le";
  std::string created_by;

  bool operator==(const BankManifest&) const = default;
};

struct KnowledgeEntry {
  std::string id;
  std::optional<std::string> source_text;
  std::optional<std::string> source_ref;
  std::vector<float> feature;
};

/// Immutable collection of embedding rows.
///
/// Rows are kept in one contiguous row-major payload (count x dim), which is
/// also the on-disk layout. An instance may hold data that violates the bank
/// invariants (e.g. straight from a file); `validate_bank` reports those,
/// `create_bank` refuses them.
class FeatureBank {
 public:
  FeatureBank() = default;
  FeatureBank(BankManifest manifest, std::vector<KnowledgeEntry> entries);

  const BankManifest& manifest() const { return manifest_; }
  std::uint32_t dim() const { return manifest_.dim; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  std::span<const float> row(std::size_t i) const {
    return {payload_.data() + i * manifest_.dim, manifest_.dim};
  }
  std::span<const float> payload() const { return payload_; }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::optional<std::string>& source_text(std::size_t i) const { return source_text_[i]; }
  const std::optional<std::string>& source_ref(std::size_t i) const { return source_ref_[i]; }
  bool has_sources() const;

  /// Index of `id`, or nullopt. For duplicate ids the first occurrence wins.
  std::optional<std::size_t> find(std::string_view id) const;

  KnowledgeEntry entry(std::size_t i) const;

  /// True when the row width of every entry matched the manifest at construction.
  bool rows_consistent() const { return rows_consistent_; }

  bool operator==(const FeatureBank& other) const;

 private:
  friend FeatureBank load_bank(const std::filesystem::path& path);

  BankManifest manifest_;
  std::vector<std::string> ids_;
  std::vector<std::optional<std::string>> source_text_;
  std::vector<std::optional<std::string>> source_ref_;
  std::vector<float> payload_;
  std::unordered_map<std::string, std::size_t> index_;
  bool rows_consistent_ = true;
};

/// Checked construction: rejects dim mismatch, duplicate or malformed ids and
/// non-finite features. The manifest's count is overwritten with the entry count.
FeatureBank create_bank(std::vector<KnowledgeEntry> entries, BankManifest manifest);

/// Writes the "BTKB" layout. Output is a pure function of the bank.
void save_bank(const FeatureBank& bank, const std::filesystem::path& path);

FeatureBank load_bank(const std::filesystem::path& path);

struct ValidationReport {
  std::vector<std::string> findings;
  bool ok() const { return findings.empty(); }
};

ValidationReport validate_bank(const FeatureBank& bank);

/// Deterministic Gaussian rows normalized to unit length. Ids are
/// "<t|i|v><8-digit index>" so lexicographic order equals row order.
FeatureBank synth_bank(std::uint64_t seed, std::uint64_t count, std::uint32_t dim,
                       Modality modality);

inline constexpr std::uint16_t kBankFormatVersion = 1;
inline constexpr double kNormTolerance = 1e-4;

}  // namespace btk
