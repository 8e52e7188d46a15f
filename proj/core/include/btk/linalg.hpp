// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace btk {

/// Row-major so that one row is one token / view / knowledge entry.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

class Rng;

/// Throws DimensionMismatch with `what` unless rows/cols match.
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, std::string_view what);
void require_cols(const Matrix& m, Eigen::Index cols, std::string_view what);
void require_finite(const Matrix& m, std::string_view what);

/// Entries drawn i.i.d. from N(0, scale^2).
Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0);

/// Mean over rows (1 x cols).
RowVector mean_rows(const Matrix& m);

Matrix stack_rows(const std::vector<Matrix>& blocks);

/// Copies a float span into a 1 x n row.
RowVector to_row(std::span<const float> v);

}  // namespace btk
