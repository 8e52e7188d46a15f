// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/linalg.hpp"

#include <string>

#include "btk/error.hpp"
#include "btk/rng.hpp"

namespace btk {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " expected " +
                                                   shape_str(rows, cols) + ", got " +
                                                   shape_str(m.rows(), m.cols()));
  }
}

void require_cols(const Matrix& m, Eigen::Index cols, std::string_view what) {
  if (m.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " expected width " +
                                                   std::to_string(cols) + ", got " +
                                                   std::to_string(m.cols()));
  }
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw Error(ErrorCode::kNonFiniteInput, std::string(what) + " has NaN/Inf");
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

RowVector mean_rows(const Matrix& m) {
  RowVector out = RowVector::Zero(m.cols());
  if (m.rows() == 0) return out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out += m.row(i);
  return out / static_cast<double>(m.rows());
}

Matrix stack_rows(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = blocks.empty() ? 0 : blocks.front().cols();
  for (const auto& b : blocks) {
    require_cols(b, cols, "stacked block");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

RowVector to_row(std::span<const float> v) {
  RowVector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace btk
