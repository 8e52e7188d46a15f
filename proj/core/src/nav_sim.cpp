// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/nav_sim.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <queue>
#include <set>

#include "btk/error.hpp"
#include "btk/file_util.hpp"
#include "btk/retrieval.hpp"

namespace btk {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kAngleTolerance = 1e-4;
constexpr double kEdgeTolerance = 1e-6;

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * std::numbers::pi);
  if (a < 0) a += 2.0 * std::numbers::pi;
  return a;
}

double angle_gap(double a, double b) {
  const double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

double dot(const RowVector& a, const RowVector& b) { return a.dot(b); }

}  // namespace

double view_azimuth(int view) { return (view % kHeadings) * 30.0 * kDeg; }
double view_elevation(int view) { return (view / kHeadings - 1) * 30.0 * kDeg; }

double euclidean(const Position& a, const Position& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

int facing_view(const Position& from, const Position& to) {
  const double dx = to[0] - from[0], dy = to[1] - from[1], dz = to[2] - from[2];
  const double bearing = std::atan2(dx, dy);
  const double pitch = std::atan2(dz, std::hypot(dx, dy));
  int heading = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int h = 0; h < kHeadings; ++h) {
    const double gap = angle_gap(bearing, view_azimuth(h));
    if (gap < best - 1e-12) {
      best = gap;
      heading = h;
    }
  }
  int level = 0;
  best = std::numeric_limits<double>::infinity();
  for (int l = 0; l < kElevations; ++l) {
    const double gap = std::abs(pitch - view_elevation(l * kHeadings));
    if (gap < best - 1e-12) {
      best = gap;
      level = l;
    }
  }
  return level * kHeadings + heading;
}

EnvGraph EnvGraph::build(
    std::vector<EnvNode> nodes,
    const std::vector<std::tuple<std::string, std::string, std::optional<double>>>& edges) {
  EnvGraph g;
  bool have_dim = false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (!g.index_.emplace(n.id, i).second) throw Error(ErrorCode::kDuplicateNode, n.id);
    if (n.views.size() != kViewsPerPanorama) {
      throw Error(ErrorCode::kInvariantViolation, "node " + n.id + " has " +
                                                      std::to_string(n.views.size()) + " views, expected 36");
    }
    for (int v = 0; v < kViewsPerPanorama; ++v) {
      const auto& view = n.views[static_cast<std::size_t>(v)];
      if (angle_gap(view.azimuth, view_azimuth(v)) > kAngleTolerance ||
          std::abs(view.elevation - view_elevation(v)) > kAngleTolerance) {
        throw Error(ErrorCode::kInvariantViolation,
                    "node " + n.id + " view " + std::to_string(v) + " is off the 12x3 grid");
      }
      if (!have_dim) {
        g.feature_dim_ = view.feature.size();
        have_dim = true;
      }
      if (view.feature.size() != g.feature_dim_ || view.feature.empty()) {
        throw Error(ErrorCode::kInvariantViolation, "node " + n.id + " view " + std::to_string(v) +
                                                        " has feature width " +
                                                        std::to_string(view.feature.size()));
      }
      for (float x : view.feature)
        if (!std::isfinite(x)) throw Error(ErrorCode::kInvariantViolation, "non-finite view feature at " + n.id);
    }
    for (const auto& o : n.objects) {
      if (o.feature.size() != g.feature_dim_)
        throw Error(ErrorCode::kInvariantViolation, "object " + o.id + " has the wrong feature width");
    }
  }
  g.nodes_ = std::move(nodes);
  g.adj_.assign(g.nodes_.size(), {});

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [a_id, b_id, given] : edges) {
    auto a = g.find(a_id);
    auto b = g.find(b_id);
    if (!a || !b) throw Error(ErrorCode::kInvariantViolation, "edge " + a_id + "-" + b_id + " names an unknown node");
    if (*a == *b) throw Error(ErrorCode::kInvariantViolation, "self loop at " + a_id);
    const double len = euclidean(g.nodes_[*a].position, g.nodes_[*b].position);
    if (given && std::abs(*given - len) > kEdgeTolerance) {
      throw Error(ErrorCode::kInvariantViolation, "edge " + a_id + "-" + b_id + " length " +
                                                      std::to_string(*given) + " != distance " +
                                                      std::to_string(len));
    }
    if (!seen.emplace(std::min(*a, *b), std::max(*a, *b)).second) continue;
    g.adj_[*a].push_back({*b, len});
    g.adj_[*b].push_back({*a, len});
  }
  for (auto& list : g.adj_) {
    std::sort(list.begin(), list.end(), [&](const EnvEdge& x, const EnvEdge& y) {
      return g.nodes_[x.to].id < g.nodes_[y.to].id;
    });
  }
  return g;
}

std::optional<std::size_t> EnvGraph::find(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EnvGraph::index_of(std::string_view id) const {
  auto i = find(id);
  if (!i) throw Error(ErrorCode::kUnknownNode, std::string(id));
  return *i;
}

std::optional<double> EnvGraph::edge_length(std::size_t a, std::size_t b) const {
  for (const auto& e : adj_[a])
    if (e.to == b) return e.length;
  return std::nullopt;
}

std::size_t EnvGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& l : adj_) n += l.size();
  return n / 2;
}

Matrix EnvGraph::panorama(std::size_t i) const {
  Matrix m(kViewsPerPanorama, static_cast<Eigen::Index>(feature_dim_));
  for (int v = 0; v < kViewsPerPanorama; ++v) m.row(v) = to_row(nodes_[i].views[static_cast<std::size_t>(v)].feature);
  return m;
}

EnvGraph parse_env(std::string_view json_text) {
  using nlohmann::json;
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParseError, "env file is not valid JSON");
  std::vector<EnvNode> nodes;
  std::vector<std::tuple<std::string, std::string, std::optional<double>>> edges;
  try {
    for (const auto& jn : j.at("nodes")) {
      EnvNode n;
      n.id = jn.at("id").get<std::string>();
      const auto& pos = jn.at("pos");
      if (pos.size() != 3) throw Error(ErrorCode::kParseError, "node " + n.id + " pos must have 3 entries");
      for (std::size_t k = 0; k < 3; ++k) n.position[k] = pos.at(k).get<double>();
      for (const auto& jv : jn.at("views")) {
        View v;
        v.azimuth = jv.at("az").get<double>();
        v.elevation = jv.at("el").get<double>();
        v.feature = jv.at("feat").get<std::vector<float>>();
        n.views.push_back(std::move(v));
      }
      if (jn.contains("objects")) {
        for (const auto& jo : jn.at("objects"))
          n.objects.push_back({jo.at("id").get<std::string>(), jo.at("feat").get<std::vector<float>>()});
      }
      nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
      if (je.size() != 2 && je.size() != 3) throw Error(ErrorCode::kParseError, "edge must be [a, b] or [a, b, length]");
      std::optional<double> len;
      if (je.size() == 3) len = je.at(2).get<double>();
      edges.emplace_back(je.at(0).get<std::string>(), je.at(1).get<std::string>(), len);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return EnvGraph::build(std::move(nodes), edges);
}

EnvGraph load_env(const std::filesystem::path& path) { return parse_env(read_file(path)); }

std::string env_to_json(const EnvGraph& env) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : env.nodes()) {
    json views = json::array();
    for (const auto& v : n.views) views.push_back({{"az", v.azimuth}, {"el", v.elevation}, {"feat", v.feature}});
    json objects = json::array();
    for (const auto& o : n.objects) objects.push_back({{"id", o.id}, {"feat", o.feature}});
    nodes.push_back({{"id", n.id},
                     {"pos", {n.position[0], n.position[1], n.position[2]}},
                     {"views", std::move(views)},
                     {"objects", std::move(objects)}});
  }
  json edges = json::array();
  for (std::size_t a = 0; a < env.size(); ++a)
    for (const auto& e : env.neighbors(a))
      if (a < e.to) edges.push_back({env.node(a).id, env.node(e.to).id});
  return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}}.dump() + "\n";
}

std::vector<double> geodesic_distances(const EnvGraph& env, std::size_t source) {
  if (source >= env.size()) throw Error(ErrorCode::kUnknownNode, "index " + std::to_string(source));
  std::vector<double> dist(env.size(), kUnreachable);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& e : env.neighbors(u)) {
      const double nd = d + e.length;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        pq.emplace(nd, e.to);
      }
    }
  }
  return dist;
}

std::map<std::string, double> geodesic_distances(const EnvGraph& env, std::string_view source) {
  const auto dist = geodesic_distances(env, env.index_of(source));
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < env.size(); ++i) out.emplace(env.node(i).id, dist[i]);
  return out;
}

std::vector<std::size_t> shortest_path(const EnvGraph& env, std::size_t a, std::size_t b,
                                       const std::vector<bool>* allowed) {
  std::vector<double> dist(env.size(), kUnreachable);
  std::vector<std::size_t> prev(env.size(), env.size());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[a] = 0.0;
  pq.emplace(0.0, a);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == b) break;
    for (const auto& e : env.neighbors(u)) {
      if (allowed && e.to != b && !(*allowed)[e.to]) continue;
      const double nd = d + e.length;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        prev[e.to] = u;
        pq.emplace(nd, e.to);
      }
    }
  }
  if (dist[b] == kUnreachable) return {};
  std::vector<std::size_t> path;
  for (std::size_t v = b; v != env.size(); v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

bool AgentState::consistent() const {
  return !visited.empty() && visited.back() == current &&
         steps_taken == static_cast<int>(visited.size()) - 1;
}

void observe(AgentState& state, const EnvGraph& env, const Matrix& view_aug) {
  auto add = [&](std::size_t node, const RowVector& feat) {
    auto& m = state.memory[node];
    if (m.observations == 0) m.sum = RowVector::Zero(feat.cols());
    m.sum += feat;
    ++m.observations;
  };
  const std::size_t u = state.current;
  add(u, mean_rows(view_aug));
  state.memory[u].visited = true;
  for (const auto& e : env.neighbors(u)) {
    const int v = facing_view(env.node(u).position, env.node(e.to).position);
    add(e.to, view_aug.row(v));
  }
}

std::vector<ActionScore> score_actions(const AgentState& state, const EnvGraph& env,
                                       const Matrix& t_aug, const Matrix& view_aug, double lambda,
                                       double stop_bias) {
  if (!state.consistent() || state.current >= env.size())
    throw Error(ErrorCode::kInvalidState, "agent state is inconsistent");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::kInvalidState, "lambda outside [0, 1]");
  if (view_aug.rows() != kViewsPerPanorama)
    throw Error(ErrorCode::kInvalidState, "view features must have 36 rows");
  if (t_aug.cols() != view_aug.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "instruction width " + std::to_string(t_aug.cols()) +
                                                   " vs view width " + std::to_string(view_aug.cols()));
  }
  const RowVector pooled = mean_rows(t_aug);
  const std::size_t u = state.current;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<ActionScore> out;
  ActionScore stop;
  stop.score = dot(pooled, mean_rows(view_aug)) + stop_bias;
  stop.fine = stop.coarse = stop.score;
  out.push_back(stop);

  std::map<std::string_view, ActionScore> moves;
  auto coarse_of = [&](std::size_t v) {
    auto it = state.memory.find(v);
    if (it == state.memory.end() || it->second.observations == 0)
      throw Error(ErrorCode::kInvalidState, "candidate " + env.node(v).id + " missing from topological memory");
    return dot(pooled, it->second.mean());
  };
  auto combine = [&](double coarse, double fine) {
    // 0 * -inf is taken as 0 so that lambda = 1 reduces to the coarse score.
    const double f = (lambda == 1.0) ? 0.0 : (1.0 - lambda) * fine;
    return lambda * coarse + f;
  };
  for (const auto& e : env.neighbors(u)) {
    ActionScore a;
    a.node = e.to;
    a.coarse = coarse_of(e.to);
    a.fine = dot(pooled, view_aug.row(facing_view(env.node(u).position, env.node(e.to).position)));
    a.score = combine(a.coarse, a.fine);
    moves.emplace(env.node(e.to).id, a);
  }
  for (const auto& [v, m] : state.memory) {
    if (m.visited || v == u || moves.count(env.node(v).id)) continue;
    ActionScore a;
    a.node = v;
    a.coarse = coarse_of(v);
    a.fine = -inf;
    a.score = combine(a.coarse, a.fine);
    moves.emplace(env.node(v).id, a);
  }
  for (auto& [id, a] : moves) out.push_back(a);
  return out;
}

const ActionScore& best_action(const std::vector<ActionScore>& scores) {
  // Stop is first and nodes follow in ascending id order, so a strict
  // comparison keeps the earliest candidate on ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i].score > scores[best].score) best = i;
  return scores[best];
}

std::string_view to_string(KnowledgeMode mode) {
  switch (mode) {
    case KnowledgeMode::kOn: return "on";
    case KnowledgeMode::kOff: return "off";
    case KnowledgeMode::kTextOnly: return "text-only";
    case KnowledgeMode::kImageOnly: return "image-only";
  }
  return "on";
}

KnowledgeMode parse_knowledge_mode(std::string_view s) {
  if (s == "on") return KnowledgeMode::kOn;
  if (s == "off") return KnowledgeMode::kOff;
  if (s == "text-only") return KnowledgeMode::kTextOnly;
  if (s == "image-only") return KnowledgeMode::kImageOnly;
  throw Error(ErrorCode::kInvalidArgument, "unknown knowledge mode '" + std::string(s) + "'");
}

std::string_view to_string(StopReason r) { return r == StopReason::kStopped ? "stopped" : "max_steps"; }

Matrix augment_instruction(const InstructionRecord& instr, const FeatureBank* image_bank,
                           const AugmentorParams& params, KnowledgeMode mode) {
  if (mode == KnowledgeMode::kOff) return instr.features;
  const Matrix fused = gaa_forward(instr.features, instr.subgoal_matrix(), params.gaa).fused;
  if (!uses_image_knowledge(mode)) return fused;
  if (!image_bank) throw Error(ErrorCode::kInvalidArgument, "image knowledge enabled without an image bank");
  KnowledgeContext ctx{index_image_knowledge(instr.id, instr.subgoal_bank_ids(), *image_bank), fused};
  return ka_forward(ctx, params.ka_instruction).augmented;
}

Matrix augment_panorama(const EnvGraph& env, std::size_t node, const FeatureBank* text_bank,
                        const AugmentorParams& params, KnowledgeMode mode, int top_k) {
  Matrix views = env.panorama(node);
  if (!uses_text_knowledge(mode)) return views;
  if (!text_bank) throw Error(ErrorCode::kInvalidArgument, "text knowledge enabled without a text bank");

  std::vector<std::vector<float>> pano;
  pano.reserve(kViewsPerPanorama);
  for (const auto& v : env.node(node).views) pano.push_back(v.feature);
  const ViewKnowledge vk = retrieve_view_knowledge(env.node(node).id, pano, *text_bank, top_k);

  Matrix out(kViewsPerPanorama, params.ka_vision.dim());
  for (int v = 0; v < kViewsPerPanorama; ++v) {
    KnowledgeContext ctx{gather_rows(*text_bank, vk.per_view[static_cast<std::size_t>(v)]), views.row(v)};
    out.row(v) = ka_forward(ctx, params.ka_vision).augmented;
  }
  return out;
}

Trajectory run_episode(const EnvGraph& env, const InstructionRecord& instr, const KnowledgeBanks& banks,
                       const AugmentorParams& params, const EpisodeConfig& cfg) {
  if (cfg.max_steps < 0) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 0");
  const Matrix t_aug = augment_instruction(instr, banks.image, params, cfg.knowledge);
  const RowVector pooled = mean_rows(t_aug);

  AgentState state;
  state.current = env.index_of(instr.start_node);
  state.visited.push_back(state.current);

  Trajectory traj;
  traj.instruction_id = instr.id;
  traj.stop_reason = StopReason::kMaxSteps;
  while (state.steps_taken < cfg.max_steps) {
    const Matrix view_aug = augment_panorama(env, state.current, banks.text, params, cfg.knowledge, cfg.top_k);
    observe(state, env, view_aug);
    const auto scores = score_actions(state, env, t_aug, view_aug, cfg.lambda, cfg.stop_bias);
    const ActionScore& best = best_action(scores);
    if (!best.node) {
      traj.stop_reason = StopReason::kStopped;
      break;
    }
    std::vector<std::size_t> route{state.current, *best.node};
    if (!env.edge_length(state.current, *best.node)) {
      std::vector<bool> allowed(env.size(), false);
      for (const auto& [v, m] : state.memory) allowed[v] = m.visited;
      route = shortest_path(env, state.current, *best.node, &allowed);
      if (route.empty()) throw Error(ErrorCode::kInvalidState, "frontier node unreachable through visited nodes");
    }
    for (std::size_t i = 1; i < route.size() && state.steps_taken < cfg.max_steps; ++i) {
      state.current = route[i];
      state.visited.push_back(route[i]);
      ++state.steps_taken;
      if (i + 1 < route.size()) state.memory[route[i]].visited = true;
    }
  }

  for (auto v : state.visited) traj.path.push_back(env.node(v).id);
  const auto& objects = env.node(state.current).objects;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& o : objects) {
    if (o.feature.size() != static_cast<std::size_t>(pooled.cols()))
      throw Error(ErrorCode::kDimensionMismatch, "object " + o.id + " width differs from instruction width");
    const double s = dot(pooled, to_row(o.feature));
    if (s > best_score || (s == best_score && traj.predicted_object && o.id < *traj.predicted_object)) {
      best_score = s;
      traj.predicted_object = o.id;
    }
  }
  return traj;
}

}  // namespace btk
