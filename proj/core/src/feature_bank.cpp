// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/feature_bank.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <json.hpp>

#include "btk/error.hpp"
#include "btk/file_util.hpp"
#include "btk/rng.hpp"

namespace btk {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'B', 'T', 'K', 'B'};

json manifest_to_json(const BankManifest& m) {
  return json{{"name", m.name},           {"modality", std::string(to_string(m.modality))},
              {"dim", m.dim},             {"count", m.count},
              {"normalized", m.normalized}, {"dtype", m.dtype},
              {"created_by", m.created_by}};
}

BankManifest manifest_from_json(const json& j) {
  BankManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.modality = parse_modality(j.at("modality").get<std::string>());
    m.dim = j.at("dim").get<std::uint32_t>();
    m.count = j.at("count").get<std::uint64_t>();
    m.normalized = j.at("normalized").get<bool>();
    m.dtype = j.at("dtype").get<std::string>();
    m.created_by = j.at("created_by").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kManifestMismatch, std::string("bad manifest: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kManifestMismatch, e.what());
  }
  return m;
}

bool id_well_formed(const std::string& id) {
  return !id.empty() && id.find('\n') == std::string::npos && id.find('\r') == std::string::npos;
}

double row_norm(std::span<const float> row) {
  double s = 0.0;
  for (float x : row) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kText: return "text";
    case Modality::kImage: return "image";
    case Modality::kView: return "view";
  }
  return "text";
}

Modality parse_modality(std::string_view s) {
  if (s == "text") return Modality::kText;
  if (s == "image") return Modality::kImage;
  if (s == "view") return Modality::kView;
  throw Error(ErrorCode::kInvalidArgument, "unknown modality '" + std::string(s) + "'");
}

FeatureBank::FeatureBank(BankManifest manifest, std::vector<KnowledgeEntry> entries)
    : manifest_(std::move(manifest)) {
  const std::size_t dim = manifest_.dim;
  ids_.reserve(entries.size());
  source_text_.reserve(entries.size());
  source_ref_.reserve(entries.size());
  payload_.assign(entries.size() * dim, 0.0f);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    if (e.feature.size() != dim) rows_consistent_ = false;
    std::memcpy(payload_.data() + i * dim, e.feature.data(),
                std::min(dim, e.feature.size()) * sizeof(float));
    index_.emplace(e.id, i);
    ids_.push_back(std::move(e.id));
    source_text_.push_back(std::move(e.source_text));
    source_ref_.push_back(std::move(e.source_ref));
  }
}

bool FeatureBank::has_sources() const {
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (source_text_[i] || source_ref_[i]) return true;
  return false;
}

std::optional<std::size_t> FeatureBank::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

KnowledgeEntry FeatureBank::entry(std::size_t i) const {
  auto r = row(i);
  return KnowledgeEntry{ids_[i], source_text_[i], source_ref_[i], {r.begin(), r.end()}};
}

bool FeatureBank::operator==(const FeatureBank& other) const {
  return manifest_ == other.manifest_ && ids_ == other.ids_ &&
         source_text_ == other.source_text_ && source_ref_ == other.source_ref_ &&
         payload_.size() == other.payload_.size() &&
         std::memcmp(payload_.data(), other.payload_.data(), payload_.size() * sizeof(float)) == 0;
}

FeatureBank create_bank(std::vector<KnowledgeEntry> entries, BankManifest manifest) {
  if (manifest.dim == 0) throw Error(ErrorCode::kDimensionMismatch, "manifest dim must be >= 1");
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.feature.size() != manifest.dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "entry '" + e.id + "' has " + std::to_string(e.feature.size()) +
                      " components, manifest dim is " + std::to_string(manifest.dim));
    }
    if (!id_well_formed(e.id)) throw Error(ErrorCode::kInvalidId, "entry " + std::to_string(i));
    if (!seen.emplace(e.id, i).second) throw Error(ErrorCode::kDuplicateId, e.id);
    for (float x : e.feature) {
      if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteFeature, e.id);
    }
  }
  manifest.count = entries.size();
  return FeatureBank(std::move(manifest), std::move(entries));
}

void save_bank(const FeatureBank& bank, const std::filesystem::path& path) {
  const std::string manifest = manifest_to_json(bank.manifest()).dump();
  std::string ids;
  for (const auto& id : bank.ids()) {
    ids += id;
    ids += '\n';
  }

  std::string out;
  out.reserve(16 + manifest.size() + bank.payload().size() * 4 + ids.size());
  out.append(kMagic, 4);
  append_u16_le(out, kBankFormatVersion);
  append_u32_le(out, static_cast<std::uint32_t>(manifest.size()));
  out += manifest;
  for (float x : bank.payload()) append_f32_le(out, x);
  append_u32_le(out, static_cast<std::uint32_t>(ids.size()));
  out += ids;
  if (bank.has_sources()) {
    for (std::size_t i = 0; i < bank.size(); ++i) {
      json line{{"source_text", nullptr}, {"source_ref", nullptr}};
      if (bank.source_text(i)) line["source_text"] = *bank.source_text(i);
      if (bank.source_ref(i)) line["source_ref"] = *bank.source_ref(i);
      out += line.dump();
      out += '\n';
    }
  }
  write_file_atomic(path, out);
}

FeatureBank load_bank(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (bytes.size() - pos < n) {
      throw Error(ErrorCode::kTruncatedPayload,
                  path.string() + ": file ends inside " + std::string(what));
    }
  };

  need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::kBadMagic, path.string() + " is not a BTKB bank");
  pos = 4;
  need(2, "version");
  const std::uint16_t version = read_u16_le(bytes.data() + pos);
  pos += 2;
  if (version != kBankFormatVersion)
    throw Error(ErrorCode::kVersionUnsupported, "bank format version " + std::to_string(version));
  need(4, "manifest length");
  const std::uint32_t manifest_len = read_u32_le(bytes.data() + pos);
  pos += 4;
  need(manifest_len, "manifest");
  json manifest_json = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + manifest_len),
                                   nullptr, false);
  if (manifest_json.is_discarded())
    throw Error(ErrorCode::kManifestMismatch, "manifest is not valid JSON");
  BankManifest manifest = manifest_from_json(manifest_json);
  pos += manifest_len;
  if (manifest.dtype != "f32-le")
    throw Error(ErrorCode::kManifestMismatch, "unsupported dtype " + manifest.dtype);
  if (manifest.dim == 0) throw Error(ErrorCode::kManifestMismatch, "dim must be >= 1");

  const std::uint64_t floats = manifest.count * manifest.dim;
  if (floats / manifest.dim != manifest.count || floats > (bytes.size() - pos) / 4) {
    throw Error(ErrorCode::kTruncatedPayload,
                "payload shorter than count x dim x 4 bytes (" + std::to_string(manifest.count) +
                    " x " + std::to_string(manifest.dim) + ")");
  }

  FeatureBank bank;
  bank.payload_.resize(floats);
  for (std::uint64_t i = 0; i < floats; ++i) bank.payload_[i] = read_f32_le(bytes.data() + pos + 4 * i);
  pos += floats * 4;

  need(4, "id section length");
  const std::uint32_t ids_len = read_u32_le(bytes.data() + pos);
  pos += 4;
  need(ids_len, "id section");
  std::string_view ids(bytes.data() + pos, ids_len);
  pos += ids_len;
  while (!ids.empty()) {
    const auto nl = ids.find('\n');
    if (nl == std::string_view::npos)
      throw Error(ErrorCode::kManifestMismatch, "id section not newline-terminated");
    bank.ids_.emplace_back(ids.substr(0, nl));
    ids.remove_prefix(nl + 1);
  }
  if (bank.ids_.size() != manifest.count) {
    throw Error(ErrorCode::kManifestMismatch, "manifest count " + std::to_string(manifest.count) +
                                                  " but " + std::to_string(bank.ids_.size()) +
                                                  " ids");
  }

  bank.source_text_.assign(manifest.count, std::nullopt);
  bank.source_ref_.assign(manifest.count, std::nullopt);
  if (pos < bytes.size()) {
    std::string_view rest(bytes.data() + pos, bytes.size() - pos);
    std::size_t i = 0;
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      const auto line = rest.substr(0, nl);
      rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
      if (line.empty()) continue;
      if (i >= manifest.count)
        throw Error(ErrorCode::kManifestMismatch, "more source lines than entries");
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::kManifestMismatch, "bad source line " + std::to_string(i));
      if (j.contains("source_text") && j["source_text"].is_string())
        bank.source_text_[i] = j["source_text"].get<std::string>();
      if (j.contains("source_ref") && j["source_ref"].is_string())
        bank.source_ref_[i] = j["source_ref"].get<std::string>();
      ++i;
    }
    if (i != manifest.count)
      throw Error(ErrorCode::kManifestMismatch, "source section has " + std::to_string(i) +
                                                    " lines for " +
                                                    std::to_string(manifest.count) + " entries");
  }

  for (std::size_t i = 0; i < bank.ids_.size(); ++i) bank.index_.emplace(bank.ids_[i], i);
  bank.manifest_ = std::move(manifest);
  return bank;
}

ValidationReport validate_bank(const FeatureBank& bank) {
  ValidationReport report;
  const auto& m = bank.manifest();
  if (m.dim == 0) report.findings.push_back("manifest dim is 0");
  if (m.count != bank.size()) {
    report.findings.push_back("manifest count " + std::to_string(m.count) + " != entry count " +
                              std::to_string(bank.size()));
  }
  if (m.dtype != "f32-le") report.findings.push_back("dtype '" + m.dtype + "' is not f32-le");
  if (!bank.rows_consistent()) report.findings.push_back("entry feature widths differ from manifest dim");

  std::unordered_map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& id = bank.id(i);
    if (!id_well_formed(id)) report.findings.push_back("entry " + std::to_string(i) + " has a malformed id");
    if (!seen.emplace(id, i).second) report.findings.push_back("duplicate id '" + id + "'");
    if (m.dim == 0) continue;
    auto r = bank.row(i);
    bool finite = true;
    for (float x : r) finite = finite && std::isfinite(x);
    if (!finite) {
      report.findings.push_back("entry '" + id + "' has non-finite components");
      continue;
    }
    if (m.normalized) {
      const double n = row_norm(r);
      if (std::abs(n - 1.0) > kNormTolerance) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", n);
        report.findings.push_back("entry '" + id + "' has norm " + buf + " but bank is normalized");
      }
    }
  }
  return report;
}

FeatureBank synth_bank(std::uint64_t seed, std::uint64_t count, std::uint32_t dim,
                       Modality modality) {
  if (dim == 0) throw Error(ErrorCode::kDimensionMismatch, "dim must be >= 1");
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(modality)));
  const char prefix = to_string(modality)[0];
  std::vector<KnowledgeEntry> entries;
  entries.reserve(count);
  std::vector<double> v(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    double norm = 0.0;
    while (norm < 1e-12) {
      norm = 0.0;
      for (auto& x : v) {
        x = rng.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
    }
    KnowledgeEntry e;
    char id[32];
    std::snprintf(id, sizeof id, "%c%08llu", prefix, static_cast<unsigned long long>(i));
    e.id = id;
    e.feature.resize(dim);
    for (std::uint32_t j = 0; j < dim; ++j) e.feature[j] = static_cast<float>(v[j] / norm);
    entries.push_back(std::move(e));
  }
  BankManifest manifest;
  manifest.name = "synth-" + std::string(to_string(modality)) + "-" + std::to_string(seed);
  manifest.modality = modality;
  manifest.dim = dim;
  manifest.normalized = true;
  manifest.created_by = "btk synth_bank";
  return create_bank(std::move(entries), std::move(manifest));
}

}  // namespace btk
