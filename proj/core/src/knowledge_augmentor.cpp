// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/knowledge_augmentor.hpp"

#include <cmath>

#include "btk/error.hpp"
#include "btk/rng.hpp"

namespace btk {

void KaParams::check() const {
  const Eigen::Index d = dim();
  if (d < 1 || w_t.cols() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "KA projections must share their output width");
  }
  if (mha.model_dim() != d || gate.dim() != d)
    throw Error(ErrorCode::kDimensionMismatch, "KA attention/gate width differs from projection width");
  require_finite(w_k, "w_k");
  require_finite(w_t, "w_t");
}

KaParams KaParams::identity(Eigen::Index dim, int heads, double gate_bias) {
  return KaParams{Matrix::Identity(dim, dim), Matrix::Identity(dim, dim),
                  MhaParams::identity(dim, heads), GateParams::zeros(dim, gate_bias)};
}

KaParams KaParams::random(Rng& rng, Eigen::Index knowledge_dim, Eigen::Index target_dim,
                          Eigen::Index dim, int heads, double scale) {
  KaParams p;
  p.w_k = random_matrix(rng, knowledge_dim, dim, scale);
  p.w_t = random_matrix(rng, target_dim, dim, scale);
  p.mha = MhaParams::random(rng, dim, heads, scale);
  p.gate = GateParams::random(rng, dim, scale);
  return p;
}

namespace {

void check_context(const KnowledgeContext& ctx, const KaParams& params) {
  if (ctx.knowledge.rows() < 1) throw Error(ErrorCode::kEmptyKnowledge, "p = 0");
  if (ctx.target.rows() < 1) throw Error(ErrorCode::kDimensionMismatch, "KA target has no rows");
  require_cols(ctx.knowledge, params.w_k.rows(), "knowledge features");
  require_cols(ctx.target, params.w_t.rows(), "target features");
}

}  // namespace

Matrix correlation_matrix(const KnowledgeContext& ctx, const KaParams& params) {
  params.check();
  check_context(ctx, params);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.dim()));
  return (ctx.knowledge * params.w_k) * (ctx.target * params.w_t).transpose() * inv_sqrt_d;
}

Matrix condense_knowledge(const Matrix& mat, const Matrix& projected_knowledge) {
  if (mat.rows() != projected_knowledge.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "correlation has " + std::to_string(mat.rows()) + " knowledge rows, projection has " +
                    std::to_string(projected_knowledge.rows()));
  }
  return softmax(mat, Axis::kCols).transpose() * projected_knowledge;
}

KaResult ka_forward(const KnowledgeContext& ctx, const KaParams& params, KaTrace* trace) {
  params.check();
  check_context(ctx, params);
  KaTrace local;
  KaTrace& t = trace ? *trace : local;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.dim()));

  t.knowledge_proj = ctx.knowledge * params.w_k;
  t.target_proj = ctx.target * params.w_t;
  t.mat = t.knowledge_proj * t.target_proj.transpose() * inv_sqrt_d;
  t.attn = softmax(t.mat, Axis::kCols);
  t.condensed = t.attn.transpose() * t.knowledge_proj;
  t.enhanced = mha_forward(t.target_proj, t.condensed, params.mha, &t.mha);
  t.gate = gate_fuse(t.enhanced, t.target_proj, params.gate, GateOrder::kOriginalFirst);
  return KaResult{t.gate.fused, t.gate.gate};
}

KaGrads ka_backward(const KnowledgeContext& ctx, const KaParams& params, const KaTrace& t,
                    const Matrix& d_augmented) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.dim()));
  KaGrads g;
  g.gate = gate_backward(t.enhanced, t.target_proj, params.gate, GateOrder::kOriginalFirst, t.gate,
                         d_augmented);
  g.mha = mha_backward(t.target_proj, t.condensed, params.mha, t.mha, g.gate.d_enhanced);

  Matrix d_target_proj = g.gate.d_original + g.mha.d_q_src;
  const Matrix& d_condensed = g.mha.d_kv_src;

  // condensed = attn^T * knowledge_proj
  const Matrix d_attn = t.knowledge_proj * d_condensed.transpose();
  Matrix d_knowledge_proj = t.attn * d_condensed;

  const Matrix d_mat = softmax_backward(t.attn, d_attn, Axis::kCols) * inv_sqrt_d;
  d_knowledge_proj += d_mat * t.target_proj;
  d_target_proj += d_mat.transpose() * t.knowledge_proj;

  g.d_w_k = ctx.knowledge.transpose() * d_knowledge_proj;
  g.d_w_t = ctx.target.transpose() * d_target_proj;
  g.d_knowledge = d_knowledge_proj * params.w_k.transpose();
  g.d_target = d_target_proj * params.w_t.transpose();
  return g;
}

}  // namespace btk
