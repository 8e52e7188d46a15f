// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "btk/goal_aware_augmentor.hpp"
#include "btk/nav_sim.hpp"

namespace btk {

// Instruction lines:
//   {"id", "text" | "tokens", "subgoals": [{"phrase", "bank_id"}], "start",
//    "goal", "goal_object"?, "features"?}
// "features" names a tensor container (relative to the instruction file)
// holding a tensor keyed by the instruction id. Without it the record is
// encoded with the hash encoder at the requested width.

/// One JSON object, no trailing newline.
std::string instruction_to_json(const InstructionRecord& record);

/// Parses metadata only; features and subgoal embeddings are left empty.
InstructionRecord parse_instruction(std::string_view line);

/// Throws ParseError with the 1-based line number on malformed lines.
std::vector<InstructionRecord> load_instructions(const std::filesystem::path& path, int dim);

/// Writes the JSON-lines file plus `<path>.features.btkt` with every T.
void save_instructions(const std::vector<InstructionRecord>& records, const std::filesystem::path& path);

std::string trajectory_to_json(const Trajectory& t);
Trajectory parse_trajectory(std::string_view line);

std::string trajectories_to_jsonl(const std::vector<Trajectory>& ts);
std::vector<Trajectory> parse_trajectories(std::string_view text);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

}  // namespace btk
