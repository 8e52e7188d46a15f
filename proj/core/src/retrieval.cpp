// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "btk/error.hpp"
#include "btk/parallel.hpp"

namespace btk {

namespace {

bool hit_before(const RetrievalHit& a, const RetrievalHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.entry_id < b.entry_id;
}

template <typename T>
std::vector<double> normalize_impl(std::span<const T> v) {
  if (v.empty()) throw Error(ErrorCode::kZeroVector, "empty vector");
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  const double n = std::sqrt(s);
  if (!(n >= 1e-12)) throw Error(ErrorCode::kZeroVector, "norm below 1e-12");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) / n;
  return out;
}

}  // namespace

std::vector<double> normalize(std::span<const double> v) { return normalize_impl(v); }
std::vector<double> normalize(std::span<const float> v) { return normalize_impl(v); }

std::vector<RetrievalHit> cosine_topk(std::span<const double> query, const FeatureBank& bank, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (query.size() != bank.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query has " + std::to_string(query.size()) +
                                                   " components, bank dim is " +
                                                   std::to_string(bank.dim()));
  }
  if (bank.empty()) throw Error(ErrorCode::kEmptyBank, bank.manifest().name);

  const std::vector<double> q = normalize(query);
  const bool rows_unit = bank.manifest().normalized;
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), bank.size());

  // Bounded heap ordered so that the worst kept hit sits on top.
  std::vector<RetrievalHit> heap;
  heap.reserve(keep + 1);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto row = bank.row(i);
    double dot = 0.0;
    double sq = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double r = row[j];
      dot += q[j] * r;
      if (!rows_unit) sq += r * r;
    }
    double score = dot;
    if (!rows_unit) score = sq > 0.0 ? dot / std::sqrt(sq) : 0.0;

    if (heap.size() == keep) {
      const auto& worst = heap.front();
      if (score < worst.score || (score == worst.score && bank.id(i) > worst.entry_id)) continue;
    }
    heap.push_back(RetrievalHit{bank.id(i), 0, score});
    std::push_heap(heap.begin(), heap.end(), hit_before);
    if (heap.size() > keep) {
      std::pop_heap(heap.begin(), heap.end(), hit_before);
      heap.pop_back();
    }
  }
  std::sort_heap(heap.begin(), heap.end(), hit_before);
  for (std::size_t r = 0; r < heap.size(); ++r) heap[r].rank = static_cast<int>(r + 1);
  return heap;
}

std::vector<RetrievalHit> cosine_topk(std::span<const float> query, const FeatureBank& bank, int k) {
  std::vector<double> q(query.begin(), query.end());
  return cosine_topk(std::span<const double>(q), bank, k);
}

ViewKnowledge retrieve_view_knowledge(std::string node_id,
                                      const std::vector<std::vector<float>>& panorama,
                                      const FeatureBank& text_bank, int k, int workers) {
  ViewKnowledge out;
  out.node_id = std::move(node_id);
  out.per_view.resize(panorama.size());
  parallel_for(panorama.size(), workers, [&](std::size_t i) {
    out.per_view[i] = cosine_topk(std::span<const float>(panorama[i]), text_bank, k);
  });
  return out;
}

Matrix index_image_knowledge(const std::string& instruction_id,
                             const std::vector<std::string>& subgoal_ids,
                             const FeatureBank& image_bank) {
  if (subgoal_ids.empty()) throw Error(ErrorCode::kEmptySubgoalList, instruction_id);
  Matrix k(static_cast<Eigen::Index>(subgoal_ids.size()), image_bank.dim());
  for (std::size_t i = 0; i < subgoal_ids.size(); ++i) {
    auto idx = image_bank.find(subgoal_ids[i]);
    if (!idx) {
      throw Error(ErrorCode::kMissingEntry,
                  "instruction " + instruction_id + ": subgoal '" + subgoal_ids[i] + "'");
    }
    k.row(static_cast<Eigen::Index>(i)) = to_row(image_bank.row(*idx));
  }
  return k;
}

Matrix gather_rows(const FeatureBank& bank, const std::vector<RetrievalHit>& hits) {
  Matrix out(static_cast<Eigen::Index>(hits.size()), bank.dim());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    auto idx = bank.find(hits[i].entry_id);
    if (!idx) throw Error(ErrorCode::kMissingEntry, hits[i].entry_id);
    out.row(static_cast<Eigen::Index>(i)) = to_row(bank.row(*idx));
  }
  return out;
}

std::string view_knowledge_to_jsonl(const ViewKnowledge& vk) {
  nlohmann::json views = nlohmann::json::array();
  for (const auto& hits : vk.per_view) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& h : hits) arr.push_back({{"id", h.entry_id}, {"rank", h.rank}, {"score", h.score}});
    views.push_back(std::move(arr));
  }
  nlohmann::json j{{"node_id", vk.node_id}, {"views", std::move(views)}};
  return j.dump() + "\n";
}

ViewKnowledge view_knowledge_from_json(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParseError, "view knowledge line is not JSON");
  ViewKnowledge vk;
  try {
    vk.node_id = j.at("node_id").get<std::string>();
    for (const auto& view : j.at("views")) {
      auto& hits = vk.per_view.emplace_back();
      for (const auto& h : view)
        hits.push_back({h.at("id").get<std::string>(), h.at("rank").get<int>(), h.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return vk;
}

}  // namespace btk
