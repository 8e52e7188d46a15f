// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include <btk/retrieval.hpp>
#include <btk/rng.hpp>
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"

namespace btk {
namespace {

using testing::code_of;

FeatureBank small_bank(std::vector<KnowledgeEntry> e, bool normalized = true) {
  const auto dim = static_cast<std::uint32_t>(e.front().feature.size());
  return create_bank(std::move(e), BankManifest{"t", Modality::kText, dim, 0, normalized, "f32-le", "unit"});
}

std::vector<double> random_query(Rng& rng, std::size_t dim) {
  std::vector<double> q(dim);
  for (auto& x : q) x = rng.normal();
  return q;
}

void expect_matches_oracle(const std::vector<double>& q, const FeatureBank& bank, int k) {
  const auto got = cosine_topk(std::span<const double>(q), bank, k);
  const auto want = oracle::brute_topk(q, bank, k);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t r = 0; r < got.size(); ++r) {
    EXPECT_EQ(got[r].entry_id, want[r].first) << "rank " << r + 1;
    EXPECT_EQ(got[r].score, want[r].second) << "rank " << r + 1;
    EXPECT_EQ(got[r].rank, static_cast<int>(r + 1));
  }
}

TEST(Normalize, Examples) {
  const std::vector<double> v{3, 4};
  const auto n = normalize(std::span<const double>(v));
  EXPECT_NEAR(n[0], 0.6, 1e-12);
  EXPECT_NEAR(n[1], 0.8, 1e-12);
  const auto again = normalize(std::span<const double>(n));
  EXPECT_NEAR(again[0], 0.6, 1e-6);
  EXPECT_NEAR(again[1], 0.8, 1e-6);
  const std::vector<double> zero{0, 0};
  EXPECT_EQ(code_of([&] { normalize(std::span<const double>(zero)); }), ErrorCode::kZeroVector);
  const std::vector<double> empty;
  EXPECT_EQ(code_of([&] { normalize(std::span<const double>(empty)); }), ErrorCode::kZeroVector);
}

TEST(CosineTopk, HandExample) {
  const FeatureBank bank = small_bank({{"e1", {}, {}, {1, 0}}, {"e2", {}, {}, {0, 1}}, {"e3", {}, {}, {0.6f, 0.8f}}});
  const std::vector<float> q{1, 0};
  const auto hits = cosine_topk(std::span<const float>(q), bank, 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].entry_id, "e1");
  EXPECT_DOUBLE_EQ(hits[0].score, 1.0);
  EXPECT_EQ(hits[1].entry_id, "e3");
  EXPECT_NEAR(hits[1].score, 0.6, 1e-7);
}

TEST(CosineTopk, TruncatesToBankSize) {
  const FeatureBank bank = small_bank({{"e1", {}, {}, {1, 0}}, {"e2", {}, {}, {0, 1}}, {"e3", {}, {}, {0.6f, 0.8f}}});
  const std::vector<float> q{0, 1};
  EXPECT_EQ(cosine_topk(std::span<const float>(q), bank, 10).size(), 3u);
}

TEST(CosineTopk, TiesBreakByAscendingId) {
  const FeatureBank bank =
      small_bank({{"d", {}, {}, {1, 0}}, {"b", {}, {}, {1, 0}}, {"c", {}, {}, {0, 1}}, {"a", {}, {}, {1, 0}}});
  const std::vector<float> q{2, 0};
  const auto hits = cosine_topk(std::span<const float>(q), bank, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].entry_id, "a");
  EXPECT_EQ(hits[1].entry_id, "b");
  EXPECT_EQ(hits[2].entry_id, "d");
}

TEST(CosineTopk, Errors) {
  const FeatureBank bank = small_bank({{"e1", {}, {}, {1, 0}}});
  const std::vector<float> q3{1, 0, 0};
  const std::vector<float> q2{1, 0};
  EXPECT_EQ(code_of([&] { cosine_topk(std::span<const float>(q3), bank, 1); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { cosine_topk(std::span<const float>(q2), bank, 0); }), ErrorCode::kInvalidArgument);
  const FeatureBank empty = create_bank({}, BankManifest{"e", Modality::kText, 2, 0, true, "f32-le", "unit"});
  EXPECT_EQ(code_of([&] { cosine_topk(std::span<const float>(q2), empty, 1); }), ErrorCode::kEmptyBank);
}

TEST(CosineTopk, UnnormalizedBankUsesCosine) {
  const FeatureBank bank = small_bank({{"a", {}, {}, {10, 0}}, {"b", {}, {}, {1, 1}}, {"z", {}, {}, {0, 0}}}, false);
  const std::vector<float> q{1, 1};
  const auto hits = cosine_topk(std::span<const float>(q), bank, 3);
  EXPECT_EQ(hits[0].entry_id, "b");
  EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
  EXPECT_NEAR(hits[1].score, std::sqrt(0.5), 1e-12);
  EXPECT_EQ(hits[2].entry_id, "z");
  EXPECT_EQ(hits[2].score, 0.0);
}

TEST(CosineTopk, MatchesBruteForceOracle) {
  Rng rng(41);
  const FeatureBank bank = synth_bank(41, 2000, 32, Modality::kText);
  for (int i = 0; i < 25; ++i) expect_matches_oracle(random_query(rng, 32), bank, 1 + i % 9);
}

TEST(CosineTopk, MatchesOracleWithHeavyTies) {
  // Rows drawn from a handful of distinct vectors so equal scores abound.
  Rng rng(5);
  std::vector<KnowledgeEntry> e;
  for (int i = 0; i < 300; ++i) {
    const auto pick = rng.below(4);
    std::vector<float> f(6, 0.0f);
    f[pick] = 1.0f;
    e.push_back({"id" + std::to_string(1000 - i), {}, {}, f});
  }
  const FeatureBank bank = small_bank(e);
  for (int i = 0; i < 10; ++i) expect_matches_oracle(random_query(rng, 6), bank, 17);
}

TEST(CosineTopk, ScoresAreBounded) {
  Rng rng(9);
  const FeatureBank bank = synth_bank(9, 500, 12, Modality::kImage);
  for (int i = 0; i < 20; ++i) {
    for (const auto& h : cosine_topk(std::span<const double>(random_query(rng, 12)), bank, 500)) {
      EXPECT_LE(h.score, 1.0 + 1e-6);
      EXPECT_GE(h.score, -1.0 - 1e-6);
    }
  }
}

std::vector<std::vector<float>> random_panorama(Rng& rng, std::size_t dim) {
  std::vector<std::vector<float>> pano(36, std::vector<float>(dim));
  for (auto& v : pano)
    for (auto& x : v) x = static_cast<float>(rng.normal());
  return pano;
}

TEST(RetrieveViewKnowledge, TopFivePerView) {
  Rng rng(2);
  const FeatureBank bank = synth_bank(2, 200, 16, Modality::kText);
  const auto pano = random_panorama(rng, 16);
  const ViewKnowledge vk = retrieve_view_knowledge("n1", pano, bank);
  ASSERT_EQ(vk.per_view.size(), 36u);
  std::size_t total = 0;
  for (std::size_t i = 0; i < 36; ++i) {
    total += vk.per_view[i].size();
    EXPECT_EQ(vk.per_view[i], cosine_topk(std::span<const float>(pano[i]), bank, 5));
  }
  EXPECT_EQ(total, 180u);
}

TEST(RetrieveViewKnowledge, SmallBankTruncates) {
  Rng rng(3);
  const FeatureBank bank = synth_bank(3, 3, 16, Modality::kText);
  const ViewKnowledge vk = retrieve_view_knowledge("n", random_panorama(rng, 16), bank, 5);
  std::size_t total = 0;
  for (const auto& v : vk.per_view) total += v.size();
  EXPECT_EQ(total, 36u * 3u);
}

TEST(RetrieveViewKnowledge, WorkersDoNotChangeOutput) {
  Rng rng(4);
  const FeatureBank bank = synth_bank(4, 400, 16, Modality::kText);
  const auto pano = random_panorama(rng, 16);
  const ViewKnowledge serial = retrieve_view_knowledge("n", pano, bank, 5, 1);
  for (int w : {2, 3, 8, 64}) EXPECT_EQ(retrieve_view_knowledge("n", pano, bank, 5, w), serial);
}

TEST(RetrieveViewKnowledge, JsonRoundTrip) {
  Rng rng(6);
  const FeatureBank bank = synth_bank(6, 50, 8, Modality::kText);
  const ViewKnowledge vk = retrieve_view_knowledge("node-7", random_panorama(rng, 8), bank, 4);
  std::string line = view_knowledge_to_jsonl(vk);
  ASSERT_EQ(line.back(), '\n');
  EXPECT_EQ(view_knowledge_from_json(line), vk);
}

TEST(IndexImageKnowledge, RowsFollowSubgoalOrder) {
  const FeatureBank bank = synth_bank(8, 10, 6, Modality::kImage);
  const std::vector<std::string> ids{bank.id(7), bank.id(2), bank.id(9), bank.id(2)};
  const Matrix k = index_image_knowledge("instr", ids, bank);
  ASSERT_EQ(k.rows(), 4);
  ASSERT_EQ(k.cols(), 6);
  const std::size_t rows[] = {7, 2, 9, 2};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(k(i, j), static_cast<double>(bank.row(rows[i])[static_cast<std::size_t>(j)]));
}

TEST(IndexImageKnowledge, Errors) {
  const FeatureBank bank = synth_bank(8, 4, 6, Modality::kImage);
  EXPECT_EQ(code_of([&] { index_image_knowledge("i", {"nope"}, bank); }), ErrorCode::kMissingEntry);
  EXPECT_EQ(code_of([&] { index_image_knowledge("i", {}, bank); }), ErrorCode::kEmptySubgoalList);
}

}  // namespace
}  // namespace btk
