// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/tensor_store.hpp"

#include <cstring>
#include <json.hpp>

#include "btk/error.hpp"
#include "btk/file_util.hpp"

namespace btk {

namespace {
constexpr char kMagic[4] = {'B', 'T', 'K', 'T'};
}

void TensorStore::add(std::string name, Matrix value) {
  for (auto& [n, v] : tensors_) {
    if (n == name) {
      v = std::move(value);
      return;
    }
  }
  tensors_.emplace_back(std::move(name), std::move(value));
}

bool TensorStore::has(const std::string& name) const {
  for (const auto& [n, v] : tensors_)
    if (n == name) return true;
  return false;
}

const Matrix& TensorStore::get(const std::string& name) const {
  for (const auto& [n, v] : tensors_)
    if (n == name) return v;
  throw Error(ErrorCode::kMissingEntry, "tensor '" + name + "'");
}

const std::string& TensorStore::attr(const std::string& key) const {
  auto it = attrs_.find(key);
  if (it == attrs_.end()) throw Error(ErrorCode::kMissingEntry, "attribute '" + key + "'");
  return it->second;
}

std::string encode_tensors(const TensorStore& store) {
  nlohmann::json manifest;
  manifest["attrs"] = store.attrs();
  manifest["tensors"] = nlohmann::json::array();
  for (const auto& [name, m] : store.tensors())
    manifest["tensors"].push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}});
  const std::string header = manifest.dump();

  std::string out(kMagic, 4);
  append_u16_le(out, kTensorFormatVersion);
  append_u32_le(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const auto& [name, m] : store.tensors())
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) append_f32_le(out, static_cast<float>(m(i, j)));
  return out;
}

TensorStore decode_tensors(std::string_view bytes) {
  if (bytes.size() < 10) throw Error(ErrorCode::kTruncatedPayload, "tensor container header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorCode::kBadMagic, "not a BTKT container");
  const auto version = read_u16_le(bytes.data() + 4);
  if (version != kTensorFormatVersion)
    throw Error(ErrorCode::kVersionUnsupported, "tensor container version " + std::to_string(version));
  const std::uint32_t len = read_u32_le(bytes.data() + 6);
  std::size_t pos = 10;
  if (bytes.size() - pos < len) throw Error(ErrorCode::kTruncatedPayload, "tensor manifest");
  auto manifest = nlohmann::json::parse(bytes.substr(pos, len), nullptr, false);
  if (manifest.is_discarded()) throw Error(ErrorCode::kManifestMismatch, "tensor manifest is not JSON");
  pos += len;

  TensorStore store;
  try {
    if (manifest.contains("attrs"))
      for (const auto& [k, v] : manifest.at("attrs").items()) store.set_attr(k, v.get<std::string>());
    for (const auto& t : manifest.at("tensors")) {
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      if (rows < 0 || cols < 0) throw Error(ErrorCode::kManifestMismatch, "negative shape");
      const auto n = static_cast<std::size_t>(rows * cols);
      if ((bytes.size() - pos) / 4 < n)
        throw Error(ErrorCode::kTruncatedPayload, "tensor '" + t.at("name").get<std::string>() + "'");
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
          m(i, j) = read_f32_le(bytes.data() + pos);
          pos += 4;
        }
      store.add(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kManifestMismatch, e.what());
  }
  if (pos != bytes.size()) throw Error(ErrorCode::kManifestMismatch, "trailing bytes after payload");
  return store;
}

void save_tensors(const TensorStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, encode_tensors(store));
}

TensorStore load_tensors(const std::filesystem::path& path) { return decode_tensors(read_file(path)); }

}  // namespace btk
