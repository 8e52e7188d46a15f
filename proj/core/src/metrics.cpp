// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "btk/error.hpp"

namespace btk {

namespace {

constexpr double kOrderSlack = 1e-12;

// Neumaier summation.
class Sum {
 public:
  void add(double x) {
    const double t = s_ + x;
    if (std::abs(s_) >= std::abs(x)) {
      c_ += (s_ - t) + x;
    } else {
      c_ += (x - t) + s_;
    }
    s_ = t;
  }
  double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace

std::map<std::string, EpisodeGoal> goals_from_instructions(const EnvGraph& env,
                                                           const std::vector<InstructionRecord>& instrs) {
  std::map<std::string, EpisodeGoal> out;
  for (const auto& r : instrs) {
    const std::size_t goal = env.index_of(r.goal_node);
    const auto dist = geodesic_distances(env, env.index_of(r.start_node));
    out[r.id] = EpisodeGoal{r.id, env.node(goal).position, r.goal_object, dist[goal]};
  }
  return out;
}

EpisodeMetrics score_episode(const Trajectory& t, const EnvGraph& env, const EpisodeGoal& goal, double radius) {
  if (t.path.empty()) throw Error(ErrorCode::kInvalidPath, "'" + t.instruction_id + "': empty path");
  if (!std::isfinite(goal.shortest_length) || goal.shortest_length < 0.0)
    throw Error(ErrorCode::kInvalidArgument, "'" + t.instruction_id + "': shortest length must be finite and >= 0");

  std::vector<std::size_t> idx;
  idx.reserve(t.path.size());
  for (const auto& id : t.path) {
    const auto i = env.find(id);
    if (!i) throw Error(ErrorCode::kInvalidPath, "'" + t.instruction_id + "': unknown node '" + id + "'");
    idx.push_back(*i);
  }

  EpisodeMetrics m;
  m.instruction_id = t.instruction_id;
  m.shortest_length = goal.shortest_length;
  double closest = euclidean(env.node(idx[0]).position, goal.goal_position);
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (idx[i] != idx[i - 1]) {
      const auto len = env.edge_length(idx[i - 1], idx[i]);
      if (!len)
        throw Error(ErrorCode::kInvalidPath, "'" + t.instruction_id + "': " + t.path[i - 1] + " and " + t.path[i] +
                                                 " are not adjacent");
      m.path_length += *len;
    }
    closest = std::min(closest, euclidean(env.node(idx[i]).position, goal.goal_position));
  }
  m.nav_error = euclidean(env.node(idx.back()).position, goal.goal_position);
  m.success = m.nav_error <= radius;
  m.oracle_success = closest <= radius;

  const double denom = std::max(m.path_length, m.shortest_length);
  const double weight = denom > 0.0 ? m.shortest_length / denom : 1.0;
  m.spl = m.success ? weight : 0.0;
  m.grounded = m.success && goal.goal_object && t.predicted_object == goal.goal_object;
  m.rgspl = m.grounded ? weight : 0.0;
  return m;
}

void check_report(const MetricsReport& r) {
  const auto le = [](double a, double b) { return a <= b + kOrderSlack; };
  if (!(le(0.0, r.spl) && le(r.spl, r.sr) && le(r.sr, r.osr) && le(r.osr, 1.0)))
    throw Error(ErrorCode::kInternalConsistency, "expected 0 <= SPL <= SR <= OSR <= 1");
  if (!(le(0.0, r.rgspl) && le(r.rgspl, r.rgs) && le(r.rgs, r.sr)))
    throw Error(ErrorCode::kInternalConsistency, "expected 0 <= RGSPL <= RGS <= SR");
}

MetricsReport aggregate(std::vector<EpisodeMetrics> episodes) {
  MetricsReport r;
  if (!episodes.empty()) {
    Sum ne, sr, osr, spl, rgs, rgspl;
    for (const auto& e : episodes) {
      ne.add(e.nav_error);
      sr.add(e.success ? 1.0 : 0.0);
      osr.add(e.oracle_success ? 1.0 : 0.0);
      spl.add(e.spl);
      rgs.add(e.grounded ? 1.0 : 0.0);
      rgspl.add(e.rgspl);
    }
    const auto n = static_cast<double>(episodes.size());
    r.ne = ne.value() / n;
    r.sr = sr.value() / n;
    r.osr = osr.value() / n;
    r.spl = spl.value() / n;
    r.rgs = rgs.value() / n;
    r.rgspl = rgspl.value() / n;
  }
  r.episodes = std::move(episodes);
  check_report(r);
  return r;
}

MetricsReport evaluate(const std::vector<Trajectory>& trajectories, const EnvGraph& env,
                       const std::map<std::string, EpisodeGoal>& goals, double radius) {
  std::vector<EpisodeMetrics> eps;
  eps.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    const auto it = goals.find(t.instruction_id);
    if (it == goals.end()) throw Error(ErrorCode::kMissingGoal, "no goal for '" + t.instruction_id + "'");
    eps.push_back(score_episode(t, env, it->second, radius));
  }
  return aggregate(std::move(eps));
}

Dispersion dispersion(const Matrix& f) {
  const Eigen::Index n = f.rows();
  if (n < 2) throw Error(ErrorCode::kTooFewVectors, "dispersion needs at least 2 vectors");
  const Eigen::Index d = f.cols();
  if (d < 1) throw Error(ErrorCode::kDimensionMismatch, "dispersion needs dim >= 1");

  double pair_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = f(i, k) - f(j, k);
        sq += diff * diff;
      }
      pair_sum += std::sqrt(sq);
    }
  }

  std::vector<double> centroid(static_cast<std::size_t>(d), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) centroid[static_cast<std::size_t>(k)] += f(i, k);
  for (auto& c : centroid) c /= static_cast<double>(n);
  double dev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double diff = f(i, k) - centroid[static_cast<std::size_t>(k)];
      dev += diff * diff;
    }
  }

  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return Dispersion{dev / static_cast<double>(n) / static_cast<double>(d), pair_sum / pairs};
}

double percent_change(double before, double after) {
  if (before == 0.0) throw Error(ErrorCode::kInvalidArgument, "percent change from zero");
  return 100.0 * (after - before) / before;
}

DispersionChange compare_dispersion(const Matrix& before, const Matrix& after) {
  if (before.cols() != after.cols())
    throw Error(ErrorCode::kDimensionMismatch, "dispersion sets have different widths");
  DispersionChange c{dispersion(before), dispersion(after), 0.0, 0.0};
  c.variance_change = percent_change(c.before.variance, c.after.variance);
  c.avg_dist_change = percent_change(c.before.avg_pairwise_dist, c.after.avg_pairwise_dist);
  return c;
}

std::string report_to_json(const MetricsReport& r) {
  using nlohmann::json;
  json j;
  j["NE"] = r.ne;
  j["SR"] = r.sr;
  j["OSR"] = r.osr;
  j["SPL"] = r.spl;
  j["RGS"] = r.rgs;
  j["RGSPL"] = r.rgspl;
  j["episodes"] = json::array();
  for (const auto& e : r.episodes) {
    j["episodes"].push_back({{"instruction_id", e.instruction_id},
                             {"NE", e.nav_error},
                             {"path_length", e.path_length},
                             {"shortest_length", e.shortest_length},
                             {"success", e.success},
                             {"oracle_success", e.oracle_success},
                             {"grounded", e.grounded},
                             {"SPL", e.spl},
                             {"RGSPL", e.rgspl}});
  }
  if (r.dispersion) {
    const auto& d = *r.dispersion;
    j["dispersion"] = {{"before", {{"variance", d.before.variance}, {"avg_pairwise_dist", d.before.avg_pairwise_dist}}},
                       {"after", {{"variance", d.after.variance}, {"avg_pairwise_dist", d.after.avg_pairwise_dist}}},
                       {"variance_change", d.variance_change},
                       {"avg_dist_change", d.avg_dist_change}};
  }
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "NE,OSR,SR,SPL,RGS,RGSPL\n%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", r.ne, r.osr, r.sr,
                r.spl, r.rgs, r.rgspl);
  return buf;
}

}  // namespace btk
