// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include <btk/grad_check.hpp>
#include <btk/knowledge_augmentor.hpp>
#include <btk/rng.hpp>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace btk {
namespace {

using testing::code_of;

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

TEST(Correlation, ScalarExample) {
  const KaParams p = KaParams::identity(1, 1, 0.0);
  const Matrix m = correlation_matrix({column({2, 3}), column({1, 4})}, p);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_EQ(m(0, 0), 2.0);
  EXPECT_EQ(m(0, 1), 8.0);
  EXPECT_EQ(m(1, 0), 3.0);
  EXPECT_EQ(m(1, 1), 12.0);
}

TEST(Correlation, ScaledByRootD) {
  const KaParams p = KaParams::identity(4, 1, 0.0);
  Matrix k = Matrix::Zero(1, 4), x = Matrix::Zero(1, 4);
  k(0, 0) = x(0, 0) = 1.0;
  EXPECT_EQ(correlation_matrix({k, x}, p)(0, 0), 0.5);
  Matrix y = Matrix::Zero(1, 4);
  y(0, 2) = 1.0;
  EXPECT_EQ(correlation_matrix({k, y}, p)(0, 0), 0.0);
}

TEST(Correlation, ShapeErrors) {
  Rng rng(1);
  const KaParams p = KaParams::random(rng, 6, 5, 8, 2, 0.5);
  EXPECT_EQ(code_of([&] { correlation_matrix({random_matrix(rng, 3, 5), random_matrix(rng, 2, 5)}, p); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { correlation_matrix({random_matrix(rng, 3, 6), random_matrix(rng, 2, 6)}, p); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Condense, SingleEntryIsCopied) {
  Rng rng(2);
  const Matrix k = random_matrix(rng, 1, 5);
  const Matrix out = condense_knowledge(random_matrix(rng, 1, 4), k);
  ASSERT_EQ(out.rows(), 4);
  for (int j = 0; j < 4; ++j) EXPECT_LE((out.row(j) - k.row(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Condense, EqualColumnAverages) {
  Rng rng(3);
  const Matrix k = random_matrix(rng, 2, 5);
  Matrix mat = random_matrix(rng, 2, 3);
  mat(0, 1) = mat(1, 1) = 0.7;
  const Matrix out = condense_knowledge(mat, k);
  EXPECT_LE((out.row(1) - (k.row(0) + k.row(1)) / 2.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Condense, MatchesLoopOracle) {
  Rng rng(4);
  const Matrix mat = random_matrix(rng, 5, 4, 2.0);
  const Matrix k = random_matrix(rng, 5, 8);
  const Matrix want = oracle::from_dense(oracle::condense(oracle::to_dense(mat), oracle::to_dense(k)));
  EXPECT_LE((condense_knowledge(mat, k) - want).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Condense, ColumnShiftInvariance) {
  Rng rng(5);
  const Matrix mat = random_matrix(rng, 4, 3, 2.0);
  const Matrix k = random_matrix(rng, 4, 6);
  Matrix shifted = mat;
  shifted.col(1).array() += 55.0;
  EXPECT_LE((condense_knowledge(shifted, k) - condense_knowledge(mat, k)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Condense, RowCountMismatch) {
  Rng rng(6);
  EXPECT_EQ(code_of([&] { condense_knowledge(random_matrix(rng, 3, 2), random_matrix(rng, 4, 2)); }),
            ErrorCode::kDimensionMismatch);
}

TEST(KaForward, ZeroGateIsMidpoint) {
  Rng rng(7);
  const KaParams p{random_matrix(rng, 6, 8), random_matrix(rng, 5, 8), MhaParams::random(rng, 8, 2, 0.5),
                   GateParams::zeros(8)};
  const KnowledgeContext ctx{random_matrix(rng, 3, 6), random_matrix(rng, 4, 5)};
  KaTrace t;
  const KaResult r = ka_forward(ctx, p, &t);
  EXPECT_EQ((r.augmented - (t.target_proj + t.enhanced) / 2.0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((r.gate.array() - 0.5).abs().maxCoeff(), 0.0);
}

TEST(KaForward, SingleEntryIdentityMha) {
  Rng rng(8);
  KaParams p = KaParams::identity(6, 2, 0.0);
  p.gate = GateParams::random(rng, 6, 0.5);
  const KnowledgeContext ctx{random_matrix(rng, 1, 6), random_matrix(rng, 3, 6)};
  KaTrace t;
  const KaResult r = ka_forward(ctx, p, &t);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE((t.enhanced.row(i) - ctx.knowledge.row(0)).cwiseAbs().maxCoeff(), 1e-12);
    const auto g = r.gate.row(i).array();
    const auto want = g * ctx.target.row(i).array() + (1.0 - g) * ctx.knowledge.row(0).array();
    EXPECT_LE((r.augmented.row(i).array() - want).abs().maxCoeff(), 1e-12);
  }
}

TEST(KaForward, Bounded) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const KaParams p = KaParams::random(rng, 6, 5, 8, 2, 0.6);
    KaTrace t;
    const KaResult r = ka_forward({random_matrix(rng, 4, 6), random_matrix(rng, 3, 5)}, p, &t);
    EXPECT_TRUE((r.augmented.array() >= t.target_proj.cwiseMin(t.enhanced).array() - 1e-12).all());
    EXPECT_TRUE((r.augmented.array() <= t.target_proj.cwiseMax(t.enhanced).array() + 1e-12).all());
  }
}

TEST(KaForward, KnowledgePermutationEquivariance) {
  Rng rng(10);
  const KaParams p = KaParams::random(rng, 6, 5, 8, 2, 0.6);
  const Matrix k = random_matrix(rng, 5, 6);
  const Matrix x = random_matrix(rng, 3, 5);
  const std::vector<int> perm{4, 2, 0, 3, 1};
  Matrix kp(5, 6);
  for (int i = 0; i < 5; ++i) kp.row(i) = k.row(perm[static_cast<std::size_t>(i)]);
  KaTrace a, b;
  const KaResult ra = ka_forward({k, x}, p, &a);
  const KaResult rb = ka_forward({kp, x}, p, &b);
  EXPECT_LE((a.condensed - b.condensed).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((a.enhanced - b.enhanced).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((ra.augmented - rb.augmented).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(KaForward, TraceIsConsistent) {
  Rng rng(11);
  const KaParams p = KaParams::random(rng, 6, 5, 8, 2, 0.6);
  const KnowledgeContext ctx{random_matrix(rng, 3, 6), random_matrix(rng, 4, 5)};
  KaTrace t;
  ka_forward(ctx, p, &t);
  EXPECT_LE((t.knowledge_proj - ctx.knowledge * p.w_k).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((t.target_proj - ctx.target * p.w_t).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((t.mat - correlation_matrix(ctx, p)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((t.attn - softmax(t.mat, Axis::kCols)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((t.condensed - t.attn.transpose() * t.knowledge_proj).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((t.enhanced - mha_forward(t.target_proj, t.condensed, p.mha)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KaForward, Errors) {
  Rng rng(12);
  const KaParams p = KaParams::identity(4, 1, 0.0);
  EXPECT_EQ(code_of([&] { ka_forward({Matrix(0, 4), random_matrix(rng, 2, 4)}, p); }), ErrorCode::kEmptyKnowledge);
  EXPECT_EQ(code_of([&] { ka_forward({random_matrix(rng, 2, 3), random_matrix(rng, 2, 4)}, p); }),
            ErrorCode::kDimensionMismatch);
}

TEST(KaForward, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const GradReport r = grad_check(make_grad_problem(GradOperator::kKa, seed), 1e-4);
    EXPECT_TRUE(r.passed) << seed << ": " << r.worst_variable << " " << r.max_rel_error;
  }
}

}  // namespace
}  // namespace btk
