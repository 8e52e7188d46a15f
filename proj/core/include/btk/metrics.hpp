// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "btk/goal_aware_augmentor.hpp"
#include "btk/linalg.hpp"
#include "btk/nav_sim.hpp"

namespace btk {

inline constexpr double kSuccessRadius = 3.0;  // meters

struct EpisodeGoal {
  std::string instruction_id;
  Position goal_position{};
  std::optional<std::string> goal_object;
  double shortest_length = 0.0;  // geodesic start -> goal
};

struct EpisodeMetrics {
  std::string instruction_id;
  double nav_error = 0.0;
  double path_length = 0.0;
  double shortest_length = 0.0;
  bool success = false;
  bool oracle_success = false;
  bool grounded = false;  // success and the right object
  double spl = 0.0;
  double rgspl = 0.0;
};

struct Dispersion {
  double variance = 0.0;           // mean squared distance to centroid / dim
  double avg_pairwise_dist = 0.0;  // over unordered pairs
};

struct DispersionChange {
  Dispersion before;
  Dispersion after;
  double variance_change = 0.0;  // percent
  double avg_dist_change = 0.0;  // percent
};

struct MetricsReport {
  double ne = 0.0;
  double sr = 0.0;
  double osr = 0.0;
  double spl = 0.0;
  double rgs = 0.0;
  double rgspl = 0.0;
  std::vector<EpisodeMetrics> episodes;
  std::optional<DispersionChange> dispersion;
};

/// Goals for a set of instructions: goal node position, target object and
/// geodesic start->goal length.
std::map<std::string, EpisodeGoal> goals_from_instructions(const EnvGraph& env,
                                                           const std::vector<InstructionRecord>& instrs);

/// Throws InvalidPath for an empty path, unknown nodes or non-adjacent hops.
EpisodeMetrics score_episode(const Trajectory& t, const EnvGraph& env, const EpisodeGoal& goal,
                             double radius = kSuccessRadius);

/// Means with compensated summation; throws InternalConsistency if the
/// ordering SPL <= SR <= OSR, RGSPL <= RGS <= SR is broken.
MetricsReport aggregate(std::vector<EpisodeMetrics> episodes);

/// Throws MissingGoal, InvalidPath.
MetricsReport evaluate(const std::vector<Trajectory>& trajectories, const EnvGraph& env,
                       const std::map<std::string, EpisodeGoal>& goals, double radius = kSuccessRadius);

void check_report(const MetricsReport& r);

/// Rows are feature vectors. Throws TooFewVectors for fewer than 2 rows.
Dispersion dispersion(const Matrix& features);
DispersionChange compare_dispersion(const Matrix& before, const Matrix& after);

/// 100 * (after - before) / before.
double percent_change(double before, double after);

std::string report_to_json(const MetricsReport& r);
/// Header plus one row: NE,OSR,SR,SPL,RGS,RGSPL.
std::string report_to_csv(const MetricsReport& r);

}  // namespace btk
