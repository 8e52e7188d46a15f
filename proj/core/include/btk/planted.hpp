// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "btk/feature_bank.hpp"
#include "btk/goal_aware_augmentor.hpp"
#include "btk/nav_sim.hpp"

namespace btk {

struct PlantSpec {
  int num_nodes = 30;
  int branching = 3;  // target node degree
  int dim = 64;
  double signal_strength = 0.9;  // alpha
};

/// A synthetic episode whose geometry is known: the view facing the next hop
/// toward the goal carries the goal feature g with weight alpha.
struct PlantedEpisode {
  EnvGraph env;
  InstructionRecord instruction;
  std::string goal_node;
  std::string goal_object;
  FeatureBank image_bank;  // goal-phrase exemplars, one row per phrase
  FeatureBank text_bank;   // one caption per view of the environment
};

/// Deterministic per (seed, spec). Nodes lie in a plane at least 4 m apart,
/// the graph is connected, and no two neighbors of a node share a facing view.
PlantedEpisode plant_env(std::uint64_t seed, const PlantSpec& spec);

}  // namespace btk
