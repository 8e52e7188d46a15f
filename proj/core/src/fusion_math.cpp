// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/fusion_math.hpp"

#include <cmath>
#include <string>

#include "btk/error.hpp"

namespace btk {

namespace {

void softmax_rows_inplace(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    const double mx = row.maxCoeff();
    row = (row.array() - mx).exp().matrix();
    row /= row.sum();
  }
}

}  // namespace

Matrix softmax(const Matrix& m, Axis axis) {
  require_finite(m, "softmax input");
  if (axis == Axis::kRows) {
    Matrix out = m;
    softmax_rows_inplace(out);
    return out;
  }
  Matrix t = m.transpose();
  softmax_rows_inplace(t);
  return t.transpose();
}

Matrix softmax_backward(const Matrix& y, const Matrix& d_y, Axis axis) {
  const Matrix prod = y.cwiseProduct(d_y);
  if (axis == Axis::kRows) {
    const Eigen::VectorXd s = prod.rowwise().sum();
    return y.cwiseProduct(d_y - s.replicate(1, y.cols()));
  }
  const Eigen::RowVectorXd s = prod.colwise().sum();
  return y.cwiseProduct(d_y - s.replicate(y.rows(), 1));
}

Matrix sigmoid(const Matrix& m) {
  return m.unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

void MhaParams::check() const {
  const Eigen::Index d = model_dim();
  if (d < 1 || heads < 1 || d % heads != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "model dim " + std::to_string(d) +
                                                   " not divisible by " + std::to_string(heads) +
                                                   " heads");
  }
  require_shape(w_q, d, d, "w_q");
  require_shape(w_k, d, d, "w_k");
  require_shape(w_v, d, d, "w_v");
  require_shape(w_o, d, d, "w_o");
  require_finite(w_q, "w_q");
  require_finite(w_k, "w_k");
  require_finite(w_v, "w_v");
  require_finite(w_o, "w_o");
}

MhaParams MhaParams::identity(Eigen::Index dim, int heads) {
  const Matrix eye = Matrix::Identity(dim, dim);
  return MhaParams{heads, eye, eye, eye, eye};
}

MhaParams MhaParams::random(Rng& rng, Eigen::Index dim, int heads, double scale) {
  MhaParams p;
  p.heads = heads;
  p.w_q = random_matrix(rng, dim, dim, scale);
  p.w_k = random_matrix(rng, dim, dim, scale);
  p.w_v = random_matrix(rng, dim, dim, scale);
  p.w_o = random_matrix(rng, dim, dim, scale);
  return p;
}

Matrix mha_forward(const Matrix& q_src, const Matrix& kv_src, const MhaParams& params,
                   MhaCache* cache) {
  params.check();
  const Eigen::Index d = params.model_dim();
  require_cols(q_src, d, "MHA query source");
  require_cols(kv_src, d, "MHA key/value source");
  if (kv_src.rows() < 1) throw Error(ErrorCode::kDimensionMismatch, "MHA needs at least one key");

  const Eigen::Index dh = d / params.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  MhaCache local;
  MhaCache& c = cache ? *cache : local;
  c.q = q_src * params.w_q;
  c.k = kv_src * params.w_k;
  c.v = kv_src * params.w_v;
  c.attn.assign(static_cast<std::size_t>(params.heads), Matrix());
  c.concat.resize(q_src.rows(), d);
  for (int h = 0; h < params.heads; ++h) {
    const Eigen::Index off = h * dh;
    Matrix scores = c.q.middleCols(off, dh) * c.k.middleCols(off, dh).transpose() * scale;
    c.attn[static_cast<std::size_t>(h)] = softmax(scores, Axis::kRows);
    c.concat.middleCols(off, dh) = c.attn[static_cast<std::size_t>(h)] * c.v.middleCols(off, dh);
  }
  return c.concat * params.w_o;
}

MhaGrads mha_backward(const Matrix& q_src, const Matrix& kv_src, const MhaParams& params,
                      const MhaCache& cache, const Matrix& d_out) {
  const Eigen::Index d = params.model_dim();
  const Eigen::Index dh = d / params.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  MhaGrads g;
  g.d_w_o = cache.concat.transpose() * d_out;
  const Matrix d_concat = d_out * params.w_o.transpose();

  Matrix d_q = Matrix::Zero(cache.q.rows(), d);
  Matrix d_k = Matrix::Zero(cache.k.rows(), d);
  Matrix d_v = Matrix::Zero(cache.v.rows(), d);
  for (int h = 0; h < params.heads; ++h) {
    const Eigen::Index off = h * dh;
    const Matrix& a = cache.attn[static_cast<std::size_t>(h)];
    const Matrix d_head = d_concat.middleCols(off, dh);
    d_v.middleCols(off, dh) = a.transpose() * d_head;
    const Matrix d_a = d_head * cache.v.middleCols(off, dh).transpose();
    const Matrix d_scores = softmax_backward(a, d_a, Axis::kRows) * scale;
    d_q.middleCols(off, dh) = d_scores * cache.k.middleCols(off, dh);
    d_k.middleCols(off, dh) = d_scores.transpose() * cache.q.middleCols(off, dh);
  }
  g.d_w_q = q_src.transpose() * d_q;
  g.d_w_k = kv_src.transpose() * d_k;
  g.d_w_v = kv_src.transpose() * d_v;
  g.d_q_src = d_q * params.w_q.transpose();
  g.d_kv_src = d_k * params.w_k.transpose() + d_v * params.w_v.transpose();
  return g;
}

void GateParams::check() const {
  const Eigen::Index d = dim();
  require_shape(w_original, d, d, "gate w_original");
  require_shape(w_enhanced, d, d, "gate w_enhanced");
  require_shape(bias, 1, d, "gate bias");
  require_finite(w_original, "gate w_original");
  require_finite(w_enhanced, "gate w_enhanced");
  require_finite(bias, "gate bias");
}

GateParams GateParams::zeros(Eigen::Index dim, double bias) {
  return GateParams{Matrix::Zero(dim, dim), Matrix::Zero(dim, dim), Matrix::Constant(1, dim, bias)};
}

GateParams GateParams::random(Rng& rng, Eigen::Index dim, double scale) {
  GateParams p;
  p.w_original = random_matrix(rng, dim, dim, scale);
  p.w_enhanced = random_matrix(rng, dim, dim, scale);
  p.bias = random_matrix(rng, 1, dim, scale);
  return p;
}

GateResult gate_fuse(const Matrix& enhanced, const Matrix& original, const GateParams& params,
                     GateOrder order) {
  params.check();
  const Eigen::Index d = params.dim();
  require_cols(enhanced, d, "gate enhanced operand");
  require_shape(original, enhanced.rows(), d, "gate original operand");

  Matrix pre = original * params.w_original + enhanced * params.w_enhanced;
  pre.rowwise() += params.bias.row(0);
  GateResult r;
  r.gate = sigmoid(pre);
  const Matrix& first = order == GateOrder::kEnhancedFirst ? enhanced : original;
  const Matrix& second = order == GateOrder::kEnhancedFirst ? original : enhanced;
  r.fused = r.gate.cwiseProduct(first) + (1.0 - r.gate.array()).matrix().cwiseProduct(second);
  return r;
}

GateGrads gate_backward(const Matrix& enhanced, const Matrix& original, const GateParams& params,
                        GateOrder order, const GateResult& forward, const Matrix& d_fused) {
  const Matrix& gate = forward.gate;
  const Matrix& first = order == GateOrder::kEnhancedFirst ? enhanced : original;
  const Matrix& second = order == GateOrder::kEnhancedFirst ? original : enhanced;

  const Matrix d_first = gate.cwiseProduct(d_fused);
  const Matrix d_second = (1.0 - gate.array()).matrix().cwiseProduct(d_fused);
  const Matrix d_gate = d_fused.cwiseProduct(first - second);
  const Matrix d_pre = d_gate.cwiseProduct(gate.cwiseProduct((1.0 - gate.array()).matrix()));

  GateGrads g;
  g.d_w_original = original.transpose() * d_pre;
  g.d_w_enhanced = enhanced.transpose() * d_pre;
  g.d_bias = d_pre.colwise().sum();
  g.d_original = d_pre * params.w_original.transpose();
  g.d_enhanced = d_pre * params.w_enhanced.transpose();
  if (order == GateOrder::kEnhancedFirst) {
    g.d_enhanced += d_first;
    g.d_original += d_second;
  } else {
    g.d_original += d_first;
    g.d_enhanced += d_second;
  }
  return g;
}

}  // namespace btk
