// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "btk/feature_bank.hpp"
#include "btk/linalg.hpp"

namespace btk {

struct RetrievalHit {
  std::string entry_id;
  int rank = 0;  // 1-based
  double score = 0.0;

  bool operator==(const RetrievalHit&) const = default;
};

struct ViewKnowledge {
  std::string node_id;
  std::vector<std::vector<RetrievalHit>> per_view;

  bool operator==(const ViewKnowledge&) const = default;
};

inline constexpr int kDefaultTopK = 5;

/// Unit-length copy of `v`. Throws ZeroVector when ||v|| < 1e-12.
std::vector<double> normalize(std::span<const double> v);
std::vector<double> normalize(std::span<const float> v);

/// Exact top-k by cosine similarity, sorted by (-score, entry_id).
///
/// The query is always normalized; bank rows are divided by their norm only
/// when the manifest does not declare them normalized (zero rows score 0).
std::vector<RetrievalHit> cosine_topk(std::span<const float> query, const FeatureBank& bank, int k);
std::vector<RetrievalHit> cosine_topk(std::span<const double> query, const FeatureBank& bank, int k);

/// Runs cosine_topk for every view of a panorama. `workers` > 1 fans the
/// views out over threads; output order is always by view index.
ViewKnowledge retrieve_view_knowledge(std::string node_id,
                                      const std::vector<std::vector<float>>& panorama,
                                      const FeatureBank& text_bank, int k = kDefaultTopK,
                                      int workers = 1);

/// Stacks the bank rows of `subgoal_ids` in the given order (p x dim).
Matrix index_image_knowledge(const std::string& instruction_id,
                             const std::vector<std::string>& subgoal_ids,
                             const FeatureBank& image_bank);

/// Bank rows of `hits` stacked in hit order.
Matrix gather_rows(const FeatureBank& bank, const std::vector<RetrievalHit>& hits);

/// One JSON-lines record: {"node_id": ..., "views": [[{"id","rank","score"}...] x 36]}.
std::string view_knowledge_to_jsonl(const ViewKnowledge& vk);
ViewKnowledge view_knowledge_from_json(std::string_view line);

}  // namespace btk
