// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "btk/fusion_math.hpp"
#include "btk/linalg.hpp"

namespace btk {

struct GradVariable {
  std::string name;
  Matrix* value;
};

/// A scalar loss over a set of mutable tensors plus its analytic gradient.
/// `state` owns whatever the closures and variable pointers refer to.
struct GradProblem {
  std::vector<GradVariable> variables;
  std::function<double()> loss;
  std::function<std::vector<Matrix>()> gradient;  // one per variable, same order
  std::shared_ptr<void> state;
};

struct GradReport {
  double max_rel_error = 0.0;
  std::string worst_variable;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  std::size_t checked = 0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Relative error is |a - n| / max(|a|, |n|, kGradRelFloor).
inline constexpr double kGradRelFloor = 1e-6;
inline constexpr double kGradStep = 1e-4;

/// Compares the analytic gradient against central differences of the loss,
/// entry by entry over every variable. Throws NonFiniteGradient.
GradReport grad_check(const GradProblem& problem, double tol, double step = kGradStep);

enum class GradOperator { kGate, kMha, kGaa, kKa };

std::string_view to_string(GradOperator op);
GradOperator parse_grad_operator(std::string_view name);

/// Seeded random instance of an operator with loss = sum of its output.
/// Shapes: gate n=4,d=8; mha n_q=4,n_k=3,d=8,h=2; gaa L=4,m=3,d=8,h=2;
/// ka p=3,n=4,d=8,h=2 with knowledge/target widths 6/5.
GradProblem make_grad_problem(GradOperator op, std::uint64_t seed,
                              GateOrder order = GateOrder::kEnhancedFirst);

}  // namespace btk
