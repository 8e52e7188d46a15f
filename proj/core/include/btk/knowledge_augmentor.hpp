// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "btk/fusion_math.hpp"
#include "btk/linalg.hpp"

namespace btk {

/// One parameter set per application (instruction side, vision side).
struct KaParams {
  Matrix w_k;  // knowledge_dim x d
  Matrix w_t;  // target_dim x d
  MhaParams mha;
  GateParams gate;  // w_enhanced = W_1, w_original = W_2, bias = b

  Eigen::Index dim() const { return w_k.cols(); }
  void check() const;

  static KaParams identity(Eigen::Index dim, int heads, double gate_bias);
  static KaParams random(Rng& rng, Eigen::Index knowledge_dim, Eigen::Index target_dim,
                         Eigen::Index dim, int heads, double scale);
};

struct KnowledgeContext {
  Matrix knowledge;  // p x knowledge_dim (K' or K)
  Matrix target;     // n x target_dim (T'' or R_t')
};

/// Mat = (K W_k)(X W_t)^T / sqrt(d), p x n.
Matrix correlation_matrix(const KnowledgeContext& ctx, const KaParams& params);

/// Softmax of `mat` over the knowledge axis (each column sums to one), then
/// one weighted sum of projected knowledge rows per target row: A^T * K_proj.
Matrix condense_knowledge(const Matrix& mat, const Matrix& projected_knowledge);

/// Every intermediate of ka_forward.
struct KaTrace {
  Matrix knowledge_proj;  // K W_k
  Matrix target_proj;     // X W_t
  Matrix mat;             // correlation
  Matrix attn;            // column softmax of mat
  Matrix condensed;       // K''
  Matrix enhanced;        // MHA(X_proj, K'')
  MhaCache mha;
  GateResult gate;
};

struct KaResult {
  Matrix augmented;  // g * X_proj + (1 - g) * enhanced
  Matrix gate;
};

KaResult ka_forward(const KnowledgeContext& ctx, const KaParams& params, KaTrace* trace = nullptr);

struct KaGrads {
  Matrix d_knowledge, d_target, d_w_k, d_w_t;
  MhaGrads mha;
  GateGrads gate;
};

KaGrads ka_backward(const KnowledgeContext& ctx, const KaParams& params, const KaTrace& trace,
                    const Matrix& d_augmented);

}  // namespace btk
