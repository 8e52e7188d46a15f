// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "btk/linalg.hpp"

namespace btk {

class Rng;

/// kRows: every row sums to one. kCols: every column sums to one.
enum class Axis { kRows, kCols };

/// Max-subtracted softmax. Throws NonFiniteInput.
Matrix softmax(const Matrix& m, Axis axis);

/// Given y = softmax(x) and dL/dy, returns dL/dx.
Matrix softmax_backward(const Matrix& y, const Matrix& d_y, Axis axis);

Matrix sigmoid(const Matrix& m);

/// Projections act on row vectors: Q = Q_src * w_q, and so on.
struct MhaParams {
  int heads = 1;
  Matrix w_q, w_k, w_v, w_o;

  Eigen::Index model_dim() const { return w_q.rows(); }
  /// Throws DimensionMismatch / NonFiniteInput when the bundle is malformed.
  void check() const;

  static MhaParams identity(Eigen::Index dim, int heads);
  static MhaParams random(Rng& rng, Eigen::Index dim, int heads, double scale);
};

struct MhaCache {
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, n_q x n_k
  Matrix concat;             // n_q x d, heads side by side before w_o
};

/// Scaled dot-product attention per head (scale 1/sqrt(d/h)), heads
/// concatenated and projected by w_o. No residual, no normalization.
Matrix mha_forward(const Matrix& q_src, const Matrix& kv_src, const MhaParams& params,
                   MhaCache* cache = nullptr);

struct MhaGrads {
  Matrix d_q_src, d_kv_src, d_w_q, d_w_k, d_w_v, d_w_o;
};

MhaGrads mha_backward(const Matrix& q_src, const Matrix& kv_src, const MhaParams& params,
                      const MhaCache& cache, const Matrix& d_out);

/// Which operand the gate multiplies. The goal-aware fusion weights the
/// enhanced features; the knowledge fusion weights the original ones.
enum class GateOrder { kEnhancedFirst, kOriginalFirst };

/// gate = sigmoid(original * w_original + enhanced * w_enhanced + bias),
/// bias broadcast over rows.
struct GateParams {
  Matrix w_original, w_enhanced;
  Matrix bias;  // 1 x d

  Eigen::Index dim() const { return w_original.rows(); }
  void check() const;

  static GateParams zeros(Eigen::Index dim, double bias = 0.0);
  static GateParams random(Rng& rng, Eigen::Index dim, double scale);
};

struct GateResult {
  Matrix fused;
  Matrix gate;
};

/// fused = gate * first + (1 - gate) * second, elementwise, where `order`
/// decides whether `enhanced` or `original` is first.
GateResult gate_fuse(const Matrix& enhanced, const Matrix& original, const GateParams& params,
                     GateOrder order);

struct GateGrads {
  Matrix d_enhanced, d_original, d_w_original, d_w_enhanced, d_bias;
};

GateGrads gate_backward(const Matrix& enhanced, const Matrix& original, const GateParams& params,
                        GateOrder order, const GateResult& forward, const Matrix& d_fused);

}  // namespace btk
