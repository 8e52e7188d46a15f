// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/planted.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>

#include "btk/error.hpp"
#include "btk/rng.hpp"

namespace btk {

namespace {

constexpr double kMinSpacing = 4.0;      // > success radius, so only the goal counts
constexpr double kMaxExtraEdge = 14.0;   // extra (non-tree) edges stay local
constexpr double kCaptionNoise = 0.5;
constexpr int kObjectsPerNode = 2;
constexpr int kDistractorPhrases = 6;

constexpr std::array<const char*, 8> kColors = {"red", "blue", "green", "wooden",
                                                "white", "black", "yellow", "leather"};
constexpr std::array<const char*, 12> kThings = {"chair", "sofa",  "table",    "lamp",
                                                 "bed",   "sink",  "painting", "plant",
                                                 "door",  "stairs", "mirror",  "shelf"};

std::vector<double> unit_noise(Rng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double n = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

std::vector<float> to_unit_float(const std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

/// normalize(a * signal + b * noise)
std::vector<float> blend(const std::vector<double>& signal, double a, const std::vector<double>& noise,
                         double b) {
  std::vector<double> v(signal.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * signal[i] + b * noise[i];
  return to_unit_float(v);
}

std::string phrase_of(Rng& rng) {
  return std::string(kColors[rng.below(kColors.size())]) + " " + kThings[rng.below(kThings.size())];
}

struct Layout {
  std::vector<Position> positions;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Connected planar layout where every node's neighbors sit in distinct views.
std::optional<Layout> try_layout(Rng& rng, const PlantSpec& spec) {
  const auto n = static_cast<std::size_t>(spec.num_nodes);
  const double side = 6.0 * std::sqrt(static_cast<double>(n)) + 4.0;
  Layout layout;
  int attempts = 0;
  while (layout.positions.size() < n) {
    if (++attempts > 100000) return std::nullopt;
    Position p{rng.uniform(0.0, side), rng.uniform(0.0, side), 0.0};
    bool ok = true;
    for (const auto& q : layout.positions) ok = ok && euclidean(p, q) >= kMinSpacing;
    if (ok) layout.positions.push_back(p);
  }

  std::vector<std::set<int>> used(n);
  std::vector<std::set<std::size_t>> adj(n);
  auto slots_free = [&](std::size_t a, std::size_t b) {
    return !used[a].count(facing_view(layout.positions[a], layout.positions[b])) &&
           !used[b].count(facing_view(layout.positions[b], layout.positions[a]));
  };
  auto connect = [&](std::size_t a, std::size_t b) {
    used[a].insert(facing_view(layout.positions[a], layout.positions[b]));
    used[b].insert(facing_view(layout.positions[b], layout.positions[a]));
    adj[a].insert(b);
    adj[b].insert(a);
    layout.edges.emplace_back(std::min(a, b), std::max(a, b));
  };

  // Prim-style spanning tree over the shortest admissible links.
  std::vector<bool> in_tree(n, false);
  in_tree[0] = true;
  for (std::size_t added = 1; added < n; ++added) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> pick{n, n};
    for (std::size_t a = 0; a < n; ++a) {
      if (!in_tree[a]) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (in_tree[b]) continue;
        const double d = euclidean(layout.positions[a], layout.positions[b]);
        if (d < best && slots_free(a, b)) {
          best = d;
          pick = {a, b};
        }
      }
    }
    if (pick.first == n) return std::nullopt;
    connect(pick.first, pick.second);
    in_tree[pick.second] = true;
  }

  for (std::size_t a = 0; a < n; ++a) {
    std::vector<std::size_t> order;
    for (std::size_t b = 0; b < n; ++b)
      if (b != a && !adj[a].count(b)) order.push_back(b);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return euclidean(layout.positions[a], layout.positions[x]) <
             euclidean(layout.positions[a], layout.positions[y]);
    });
    for (std::size_t b : order) {
      if (static_cast<int>(adj[a].size()) >= spec.branching) break;
      if (euclidean(layout.positions[a], layout.positions[b]) > kMaxExtraEdge) break;
      if (static_cast<int>(adj[b].size()) >= spec.branching + 1) continue;
      if (slots_free(a, b)) connect(a, b);
    }
  }
  return layout;
}

}  // namespace

PlantedEpisode plant_env(std::uint64_t seed, const PlantSpec& spec) {
  if (spec.num_nodes < 2) throw Error(ErrorCode::kInvalidArgument, "planted env needs >= 2 nodes");
  if (spec.dim < 1) throw Error(ErrorCode::kInvalidArgument, "planted env needs dim >= 1");
  if (!(spec.signal_strength >= 0.0 && spec.signal_strength <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "signal strength must be in [0, 1]");
  const double alpha = spec.signal_strength;
  Rng rng(mix_seed(seed, 0x504c414e54));

  std::optional<Layout> layout;
  for (int attempt = 0; attempt < 64 && !layout; ++attempt) layout = try_layout(rng, spec);
  if (!layout) throw Error(ErrorCode::kInternalConsistency, "could not lay out planted graph");

  const auto n = static_cast<std::size_t>(spec.num_nodes);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "n%03zu", i);
    ids[i] = buf;
  }
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : layout->edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }

  const std::size_t goal = rng.below(n);
  std::vector<int> hops(n, -1);
  std::deque<std::size_t> bfs{goal};
  hops[goal] = 0;
  while (!bfs.empty()) {
    auto u = bfs.front();
    bfs.pop_front();
    for (auto v : adj[u])
      if (hops[v] < 0) {
        hops[v] = hops[u] + 1;
        bfs.push_back(v);
      }
  }
  const int max_hops = *std::max_element(hops.begin(), hops.end());
  const int want = std::min(3, max_hops);
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n; ++i)
    if (hops[i] >= want && i != goal) starts.push_back(i);
  const std::size_t start = starts[rng.below(starts.size())];

  // Goal feature and phrases.
  const std::vector<double> g = unit_noise(rng, spec.dim);
  const std::string goal_phrase = phrase_of(rng);
  std::string landmark_phrase = phrase_of(rng);
  while (landmark_phrase == goal_phrase) landmark_phrase = phrase_of(rng);

  // Distance-to-goal field; next hop = argmin over neighbors of edge + remaining.
  std::vector<double> to_goal(n, kUnreachable);
  {
    std::vector<bool> done(n, false);
    to_goal[goal] = 0.0;
    for (std::size_t it = 0; it < n; ++it) {
      std::size_t u = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!done[i] && (u == n || to_goal[i] < to_goal[u])) u = i;
      done[u] = true;
      for (auto v : adj[u]) {
        const double d = to_goal[u] + euclidean(layout->positions[u], layout->positions[v]);
        if (d < to_goal[v]) to_goal[v] = d;
      }
    }
  }

  std::vector<EnvNode> nodes(n);
  for (std::size_t u = 0; u < n; ++u) {
    EnvNode& node = nodes[u];
    node.id = ids[u];
    node.position = layout->positions[u];
    node.views.resize(kViewsPerPanorama);
    for (int v = 0; v < kViewsPerPanorama; ++v) {
      auto& view = node.views[static_cast<std::size_t>(v)];
      view.azimuth = view_azimuth(v);
      view.elevation = view_elevation(v);
      view.feature = to_unit_float(unit_noise(rng, spec.dim));
    }
    std::set<int> exits;
    for (auto w : adj[u]) exits.insert(facing_view(node.position, layout->positions[w]));

    if (u == goal) {
      // The target is visible everywhere except through the exits.
      for (int v = 0; v < kViewsPerPanorama; ++v) {
        if (exits.count(v)) continue;
        node.views[static_cast<std::size_t>(v)].feature = blend(g, alpha, unit_noise(rng, spec.dim), 1.0);
      }
    } else {
      std::size_t next = n;
      double best = kUnreachable;
      for (auto w : adj[u]) {
        const double d = euclidean(node.position, layout->positions[w]) + to_goal[w];
        if (d < best) {
          best = d;
          next = w;
        }
      }
      const int facing = facing_view(node.position, layout->positions[next]);
      node.views[static_cast<std::size_t>(facing)].feature =
          blend(g, alpha, unit_noise(rng, spec.dim), 1.0 - alpha);
    }

    for (int k = 0; k < kObjectsPerNode; ++k)
      node.objects.push_back({ids[u] + "/obj" + std::to_string(k), to_unit_float(unit_noise(rng, spec.dim))});
  }
  const std::string goal_object = ids[goal] + "/target";
  nodes[goal].objects.push_back({goal_object, to_unit_float(g)});

  // Captions: one per view, a noisy copy of the view it describes.
  std::vector<KnowledgeEntry> captions;
  captions.reserve(n * kViewsPerPanorama);
  for (std::size_t u = 0; u < n; ++u) {
    for (int v = 0; v < kViewsPerPanorama; ++v) {
      const auto& f = nodes[u].views[static_cast<std::size_t>(v)].feature;
      std::vector<double> base(f.begin(), f.end());
      KnowledgeEntry e;
      e.id = "cap-" + ids[u] + "-" + (v < 10 ? "0" : "") + std::to_string(v);
      e.feature = blend(base, 1.0, unit_noise(rng, spec.dim), kCaptionNoise);
      captions.push_back(std::move(e));
    }
  }
  BankManifest text_manifest{"planted-text-" + std::to_string(seed), Modality::kText,
                             static_cast<std::uint32_t>(spec.dim), 0, true, "f32-le", "btk plant_env"};

  // Goal-phrase exemplars: landmark, goal, and unrelated phrases.
  std::vector<KnowledgeEntry> exemplars;
  exemplars.push_back({"ik-000", landmark_phrase, std::nullopt, to_unit_float(unit_noise(rng, spec.dim))});
  exemplars.push_back({"ik-001", goal_phrase, std::nullopt, to_unit_float(g)});
  for (int i = 0; i < kDistractorPhrases; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "ik-%03d", i + 2);
    exemplars.push_back({id, phrase_of(rng), std::nullopt, to_unit_float(unit_noise(rng, spec.dim))});
  }
  BankManifest image_manifest{"planted-image-" + std::to_string(seed), Modality::kImage,
                              static_cast<std::uint32_t>(spec.dim), 0, true, "f32-le", "btk plant_env"};

  std::vector<std::tuple<std::string, std::string, std::optional<double>>> edges;
  for (auto [a, b] : layout->edges) edges.emplace_back(ids[a], ids[b], std::nullopt);

  PlantedEpisode ep{EnvGraph::build(std::move(nodes), edges),
                    InstructionRecord{},
                    ids[goal],
                    goal_object,
                    create_bank(std::move(exemplars), image_manifest),
                    create_bank(std::move(captions), text_manifest)};

  InstructionRecord& instr = ep.instruction;
  instr.id = "planted-" + std::to_string(seed);
  instr.tokens = tokenize("walk past the " + landmark_phrase + " and stop next to the " + goal_phrase);
  instr.subgoals = {Subgoal{landmark_phrase, "ik-000", {}}, Subgoal{goal_phrase, "ik-001", {}}};
  instr.start_node = ids[start];
  instr.goal_node = ids[goal];
  instr.goal_object = goal_object;
  encode_record(instr, spec.dim);
  return ep;
}

}  // namespace btk
