// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "btk/goal_aware_augmentor.hpp"
#include "btk/knowledge_augmentor.hpp"
#include "btk/tensor_store.hpp"

namespace btk {

/// Every learnable tensor of the pipeline: the goal-aware augmentor and the
/// two knowledge augmentor applications, which do not share weights.
struct AugmentorParams {
  GaaParams gaa;
  KaParams ka_instruction;  // image knowledge -> instruction
  KaParams ka_vision;       // textual knowledge -> views

  /// Untrained desk configuration: identity projections, zero gate weights.
  /// The instruction-side gate leans toward the knowledge branch
  /// (sigmoid(-2) ~ 0.12 on the original), the other two gates sit at 0.5.
  static AugmentorParams identity(int dim, int heads);

  static AugmentorParams random(std::uint64_t seed, int instruction_dim, int view_dim, int dim,
                                int heads, double scale = 0.1);
};

inline constexpr double kInstructionGateBias = -2.0;

TensorStore params_to_tensors(const AugmentorParams& params);
/// Throws MissingEntry / DimensionMismatch for incomplete bundles.
AugmentorParams params_from_tensors(const TensorStore& store);

void save_params(const AugmentorParams& params, const std::filesystem::path& path);
AugmentorParams load_params(const std::filesystem::path& path);

}  // namespace btk
