// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "btk/feature_bank.hpp"
#include "btk/goal_aware_augmentor.hpp"
#include "btk/linalg.hpp"
#include "btk/params.hpp"

namespace btk {

// Panorama grid: 12 headings x 3 elevations. View i has azimuth
// (i % 12) * 30 deg and elevation (i / 12 - 1) * 30 deg.
inline constexpr int kViewsPerPanorama = 36;
inline constexpr int kHeadings = 12;
inline constexpr int kElevations = 3;

double view_azimuth(int view);
double view_elevation(int view);

using Position = std::array<double, 3>;

double euclidean(const Position& a, const Position& b);

/// View of a panorama at `from` that best faces `to`: closest azimuth to the
/// bearing, then closest elevation. Azimuth is measured from +y toward +x.
int facing_view(const Position& from, const Position& to);

struct View {
  std::vector<float> feature;
  double azimuth = 0.0;    // radians
  double elevation = 0.0;  // radians
};

struct SceneObject {
  std::string id;
  std::vector<float> feature;
};

struct EnvNode {
  std::string id;
  Position position{};
  std::vector<View> views;
  std::vector<SceneObject> objects;
};

struct EnvEdge {
  std::size_t to;
  double length;
};

/// Undirected navigation graph with per-node 36-view panoramas.
class EnvGraph {
 public:
  /// Validates every invariant: unique ids, 36 views on the fixed grid,
  /// one feature width, known endpoints, no self loops, and (when an edge
  /// carries a length) length == Euclidean distance within 1e-6.
  static EnvGraph build(std::vector<EnvNode> nodes,
                        const std::vector<std::tuple<std::string, std::string, std::optional<double>>>& edges);

  std::size_t size() const { return nodes_.size(); }
  const EnvNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<EnvNode>& nodes() const { return nodes_; }
  const std::vector<EnvEdge>& neighbors(std::size_t i) const { return adj_[i]; }
  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws UnknownNode.
  std::size_t index_of(std::string_view id) const;
  std::optional<double> edge_length(std::size_t a, std::size_t b) const;
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t edge_count() const;

  /// 36 x feature_dim panorama of node i.
  Matrix panorama(std::size_t i) const;

 private:
  std::vector<EnvNode> nodes_;
  std::vector<std::vector<EnvEdge>> adj_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t feature_dim_ = 0;
};

EnvGraph parse_env(std::string_view json_text);
EnvGraph load_env(const std::filesystem::path& path);
std::string env_to_json(const EnvGraph& env);

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Dijkstra over edge lengths; unreachable nodes are +infinity.
std::vector<double> geodesic_distances(const EnvGraph& env, std::size_t source);
std::map<std::string, double> geodesic_distances(const EnvGraph& env, std::string_view source);

/// Node sequence of a shortest path a -> b, empty when unreachable. With
/// `allowed`, only nodes whose flag is set (plus b) may be used.
std::vector<std::size_t> shortest_path(const EnvGraph& env, std::size_t a, std::size_t b,
                                       const std::vector<bool>* allowed = nullptr);

/// Running mean of the features observed for one node.
struct MemoryEntry {
  RowVector sum;
  int observations = 0;
  bool visited = false;

  RowVector mean() const { return sum / static_cast<double>(observations); }
};

struct AgentState {
  std::size_t current = 0;
  std::vector<std::size_t> visited;  // path so far, current node last
  std::map<std::size_t, MemoryEntry> memory;
  int steps_taken = 0;

  /// current == visited.back() and steps_taken == visited.size() - 1.
  bool consistent() const;
};

/// Records the panorama seen at the current node: the node itself gets the
/// pooled augmented panorama, every neighbor the augmented view facing it.
void observe(AgentState& state, const EnvGraph& env, const Matrix& view_aug);

struct ActionScore {
  std::optional<std::size_t> node;  // nullopt: stop
  double coarse = 0.0;              // S_c
  double fine = 0.0;                // S^_c: fine score, -inf off the neighborhood
  double score = 0.0;               // S
};

/// Scores {stop} + neighbors + unvisited frontier. Stop comes first, then
/// nodes in ascending id order. Throws InvalidState.
std::vector<ActionScore> score_actions(const AgentState& state, const EnvGraph& env,
                                       const Matrix& t_aug, const Matrix& view_aug, double lambda,
                                       double stop_bias);

/// Highest score; ties prefer stop, then the smaller node id.
const ActionScore& best_action(const std::vector<ActionScore>& scores);

enum class KnowledgeMode { kOn, kOff, kTextOnly, kImageOnly };

std::string_view to_string(KnowledgeMode mode);
KnowledgeMode parse_knowledge_mode(std::string_view s);
inline bool uses_text_knowledge(KnowledgeMode m) { return m == KnowledgeMode::kOn || m == KnowledgeMode::kTextOnly; }
inline bool uses_image_knowledge(KnowledgeMode m) { return m == KnowledgeMode::kOn || m == KnowledgeMode::kImageOnly; }

struct EpisodeConfig {
  int max_steps = 15;
  double lambda = 0.5;
  double stop_bias = 0.0;
  int top_k = 5;
  KnowledgeMode knowledge = KnowledgeMode::kOn;
};

enum class StopReason { kStopped, kMaxSteps };

struct Trajectory {
  std::string instruction_id;
  std::vector<std::string> path;
  std::optional<std::string> predicted_object;
  StopReason stop_reason = StopReason::kStopped;

  bool operator==(const Trajectory&) const = default;
};

std::string_view to_string(StopReason r);

struct KnowledgeBanks {
  const FeatureBank* text = nullptr;
  const FeatureBank* image = nullptr;
};

/// Instruction-side pipeline: GAA, then (if image knowledge is enabled) the
/// instruction-side KA. With knowledge off this is the raw encoded T.
/// Computed once per episode.
Matrix augment_instruction(const InstructionRecord& instr, const FeatureBank* image_bank,
                           const AugmentorParams& params, KnowledgeMode mode);

/// Vision-side pipeline for one panorama: top-k textual knowledge per view,
/// each view fused with its own knowledge set. Identity when text knowledge
/// is disabled.
Matrix augment_panorama(const EnvGraph& env, std::size_t node, const FeatureBank* text_bank,
                        const AugmentorParams& params, KnowledgeMode mode, int top_k);

Trajectory run_episode(const EnvGraph& env, const InstructionRecord& instr, const KnowledgeBanks& banks,
                       const AugmentorParams& params, const EpisodeConfig& cfg);

}  // namespace btk
