// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <btk/feature_bank.hpp>
#include <btk/file_util.hpp>
#include <btk/fusion_math.hpp>
#include <btk/goal_aware_augmentor.hpp>
#include <btk/grad_check.hpp>
#include <btk/knowledge_augmentor.hpp>
#include <btk/metrics.hpp>
#include <btk/retrieval.hpp>
#include <btk/rng.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "dispatch.hpp"
#include "oracles.hpp"

namespace btk {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Pinned tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr int kGradSeeds = 10;
constexpr double kGradBudgetS = 60.0;
constexpr int kRetrievalQueries = 100;
constexpr double kRetrievalBudgetS = 30.0;
constexpr double kGateTol = 1e-6;
constexpr double kSoftmaxTol = 1e-6;
constexpr double kPermutationTol = 1e-6;
constexpr double kBoundSlack = 1e-12;
constexpr int kMetricSets = 1000;
constexpr double kPercentTol = 0.01;
constexpr int kPlantedEpisodes = 200;
constexpr double kPlantedAlpha = 0.9;
constexpr int kPlantedNodes = 30;
constexpr double kBenefitPoints = 10.0;
constexpr double kBenefitBudgetS = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

int btk_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "btk");
  std::ostringstream o, e;
  const int code = cli::dispatch(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "btk %s: %s\n", args[1].c_str(), e.str().c_str());
  return code;
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  double worst = 0.0;
  for (auto op : {GradOperator::kGaa, GradOperator::kKa}) {
    for (std::uint64_t seed = 0; seed < kGradSeeds; ++seed) {
      const GradReport r = grad_check(make_grad_problem(op, seed), kGradTol);
      worst = std::max(worst, r.max_rel_error);
      o.require(r.passed, std::string(to_string(op)) + " seed " + std::to_string(seed) + " " + r.worst_variable +
                              " rel " + fmt("%.3g", r.max_rel_error));
    }
  }
  const double t = seconds_since(t0);
  o.require(t < kGradBudgetS, "runtime " + fmt("%.1fs", t));
  if (o.pass) o.detail = "gaa+ka x" + std::to_string(kGradSeeds) + " seeds, max rel " + fmt("%.2e", worst);
  return o;
}

Outcome retrieval() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  std::vector<FeatureBank> banks;
  for (std::uint64_t n : {10u, 100u, 1000u, 10000u}) banks.push_back(synth_bank(n, n, 64, Modality::kText));
  {
    // Few distinct directions, so equal scores are common and the id rule decides.
    Rng rng(77);
    std::vector<std::vector<float>> protos(8, std::vector<float>(64));
    for (auto& p : protos)
      for (auto& x : p) x = static_cast<float>(rng.normal());
    std::vector<KnowledgeEntry> e;
    for (int i = 0; i < 10000; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "t%05d", (i * 7919) % 10000);
      e.push_back({id, {}, {}, protos[rng.below(protos.size())]});
    }
    banks.push_back(create_bank(std::move(e), BankManifest{"ties", Modality::kText, 64, 0, false, "f32-le", "acc"}));
  }
  Rng rng(2024);
  std::size_t compared = 0;
  for (int q = 0; q < kRetrievalQueries; ++q) {
    std::vector<double> query(64);
    for (auto& x : query) x = rng.normal();
    const int k = 1 + q % 20;
    for (const auto& bank : banks) {
      const auto got = cosine_topk(std::span<const double>(query), bank, k);
      const auto want = oracle::brute_topk(query, bank, k);
      bool same = got.size() == want.size();
      for (std::size_t r = 0; same && r < got.size(); ++r)
        same = got[r].entry_id == want[r].first && got[r].score == want[r].second &&
               got[r].rank == static_cast<int>(r) + 1;
      o.require(same, "query " + std::to_string(q) + " differs on bank of " + std::to_string(bank.size()));
      ++compared;
    }
  }
  const double t = seconds_since(t0);
  o.require(t < kRetrievalBudgetS, "runtime " + fmt("%.1fs", t));
  if (o.pass) o.detail = std::to_string(compared) + " query/bank pairs exact, banks 10..10000";
  return o;
}

Outcome gate_algebra() {
  Outcome o;
  Rng rng(31);
  for (auto order : {GateOrder::kEnhancedFirst, GateOrder::kOriginalFirst}) {
    const std::string tag = order == GateOrder::kEnhancedFirst ? "enhanced-first" : "original-first";
    const Matrix e = random_matrix(rng, 5, 8), x = random_matrix(rng, 5, 8);
    const GateResult mid = gate_fuse(e, x, GateParams::zeros(8), order);
    o.require(max_abs(mid.gate.array() - 0.5) <= kGateTol, tag + ": gate not 0.5");
    o.require(max_abs(mid.fused - (e + x) / 2.0) <= kGateTol, tag + ": midpoint");
    const Matrix& first = order == GateOrder::kEnhancedFirst ? e : x;
    const GateResult sat = gate_fuse(e, x, GateParams::zeros(8, 100.0), order);
    o.require(max_abs(sat.fused - first) <= kGateTol, tag + ": saturation");
    const GateResult same = gate_fuse(x, x, GateParams::random(rng, 8, 2.0), order);
    o.require(max_abs(same.fused - x) <= kGateTol, tag + ": idempotence");
  }
  if (o.pass) o.detail = "midpoint, saturation, idempotence; both operand orders";
  return o;
}

Outcome shape_invariants() {
  Outcome o;
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = random_matrix(rng, 1 + trial % 7, 1 + trial % 5, 1.0 + trial);
    const Matrix r = softmax(m, Axis::kRows), c = softmax(m, Axis::kCols);
    o.require(max_abs(r.rowwise().sum().array() - 1.0) <= kSoftmaxTol, "row softmax sum");
    o.require(max_abs(c.colwise().sum().array() - 1.0) <= kSoftmaxTol, "column softmax sum");
  }

  {
    const KaParams p = KaParams::identity(4, 1, 0.0);
    Matrix k = Matrix::Zero(1, 4), x = Matrix::Zero(1, 4);
    k(0, 0) = x(0, 0) = 1.0;
    o.require(correlation_matrix({k, x}, p)(0, 0) == 0.5, "correlation not scaled by 1/sqrt(4)");
  }

  for (int trial = 0; trial < 10; ++trial) {
    const KaParams p = KaParams::random(rng, 6, 5, 8, 2, 0.6);
    const Matrix k = random_matrix(rng, 5, 6), x = random_matrix(rng, 3, 5);
    const std::vector<int> perm{3, 0, 4, 1, 2};
    Matrix kp(5, 6);
    for (int i = 0; i < 5; ++i) kp.row(i) = k.row(perm[static_cast<std::size_t>(i)]);
    KaTrace ta, tb;
    const KaResult a = ka_forward({k, x}, p, &ta), b = ka_forward({kp, x}, p, &tb);
    o.require(max_abs(a.augmented - b.augmented) <= kPermutationTol, "knowledge permutation changed output");
    o.require((a.augmented.array() >= ta.target_proj.cwiseMin(ta.enhanced).array() - kBoundSlack).all() &&
                  (a.augmented.array() <= ta.target_proj.cwiseMax(ta.enhanced).array() + kBoundSlack).all(),
              "knowledge fusion out of bounds");
  }

  for (int trial = 0; trial < 10; ++trial) {
    const GaaParams p{MhaParams::random(rng, 8, 2, 0.6), GateParams::random(rng, 8, 0.6)};
    const Matrix t = random_matrix(rng, 6, 8), g = random_matrix(rng, 4, 8);
    const GaaResult r = gaa_forward(t, g, p);
    o.require((r.fused.array() >= t.cwiseMin(r.enhanced).array() - kBoundSlack).all() &&
                  (r.fused.array() <= t.cwiseMax(r.enhanced).array() + kBoundSlack).all(),
              "goal-aware fusion out of bounds");
    o.require(r.fused.rows() == 6 && r.fused.cols() == 8 && r.weights.rows() == 6, "goal-aware shapes");
  }
  if (o.pass) o.detail = "softmax sums, 1/sqrt(d) scaling, permutation equivariance, fusion bounds";
  return o;
}

EnvGraph metric_line() {
  auto node = [](std::string id, Position p) {
    EnvNode n{std::move(id), p, {}, {}};
    for (int v = 0; v < kViewsPerPanorama; ++v) n.views.push_back({{0.0f, 0.0f}, view_azimuth(v), view_elevation(v)});
    return n;
  };
  return EnvGraph::build({node("x0", {0, 0, 0}), node("x4", {4, 0, 0}), node("x8", {8, 0, 0}), node("y2", {4, 2, 0})},
                         {{"x0", "x4", {}}, {"x4", "x8", {}}, {"x4", "y2", {}}});
}

Outcome metrics_oracle() {
  Outcome o;
  const EnvGraph env = metric_line();
  {
    std::map<std::string, EpisodeGoal> goals{{"a", {"a", {8, 0, 0}, std::nullopt, 8.0}},
                                             {"b", {"b", {8, 0, 0}, std::nullopt, 4.0}},
                                             {"c", {"c", {8, 0, 0}, std::nullopt, 8.0}}};
    const std::vector<Trajectory> ts{{"a", {"x0", "x4", "x8"}, {}, StopReason::kStopped},
                                     {"b", {"x4", "y2", "x4", "x8"}, {}, StopReason::kStopped},
                                     {"c", {"x0"}, {}, StopReason::kStopped}};
    const MetricsReport r = evaluate(ts, env, goals);
    o.require(r.spl == 0.5, "three-episode SPL " + fmt("%.17g", r.spl));
    o.require(r.sr == 2.0 / 3.0, "three-episode SR " + fmt("%.17g", r.sr));
  }

  Rng rng(55);
  const std::vector<std::string> ids{"x0", "x4", "x8", "y2"};
  for (int set = 0; set < kMetricSets; ++set) {
    std::vector<Trajectory> ts;
    std::map<std::string, EpisodeGoal> goals;
    const int n = 1 + static_cast<int>(rng.below(10));
    for (int e = 0; e < n; ++e) {
      const std::string id = std::to_string(e);
      std::size_t cur = rng.below(env.size());
      const std::size_t goal = rng.below(env.size());
      const double l = geodesic_distances(env, cur)[goal];
      std::vector<std::string> path{env.node(cur).id};
      for (auto s = rng.below(6); s > 0; --s) {
        cur = env.neighbors(cur)[rng.below(env.neighbors(cur).size())].to;
        path.push_back(env.node(cur).id);
      }
      goals[id] = {id, env.node(goal).position, "o", l};
      ts.push_back({id, path, rng.below(2) ? std::optional<std::string>("o") : std::nullopt, StopReason::kStopped});
    }
    const MetricsReport r = evaluate(ts, env, goals, rng.uniform(0.0, 6.0));
    o.require(r.spl <= r.sr && r.sr <= r.osr, "ordering violated in set " + std::to_string(set));
  }

  for (int trial = 0; trial < 5; ++trial) {
    const Matrix m = random_matrix(rng, 2 + static_cast<Eigen::Index>(rng.below(100)), 32, 2.0);
    const Dispersion got = dispersion(m);
    const auto want = oracle::dispersion(oracle::to_dense(m));
    o.require(got.avg_pairwise_dist == want.avg_pairwise_dist && got.variance == want.variance,
              "dispersion differs from pair loop");
  }
  const double pc = percent_change(23.195, 20.930);
  o.require(std::abs(pc - (-9.76)) <= kPercentTol, "percent change " + fmt("%.4f", pc));
  if (o.pass)
    o.detail = "SPL 0.5 exact; " + std::to_string(kMetricSets) + " random sets ordered; dispersion exact; " +
               fmt("%.2f%%", pc);
  return o;
}

double planted_sr(const fs::path& dir, const std::string& mode) {
  const std::string traj = (dir / ("planted-" + mode + ".jsonl")).string();
  const std::string n = std::to_string(kPlantedEpisodes);
  const std::string nodes = std::to_string(kPlantedNodes);
  const std::string alpha = fmt("%.17g", kPlantedAlpha);
  if (btk_cli({"simulate", "--planted", "--episodes", n, "--nodes", nodes, "--alpha", alpha, "--knowledge", mode,
               "--out", traj}) != 0)
    return -1.0;
  std::string report;
  if (btk_cli({"evaluate", "--planted", "--trajectories", traj, "--episodes", n, "--nodes", nodes, "--alpha", alpha},
              &report) != 0)
    return -1.0;
  return json::parse(report)["SR"].get<double>();
}

Outcome knowledge_benefit(const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const double on = planted_sr(dir, "on");
  const double off = planted_sr(dir, "off");
  o.require(on >= 0.0 && off >= 0.0, "simulate/evaluate failed");
  const double gain = 100.0 * (on - off);
  o.require(gain >= kBenefitPoints, "gain " + fmt("%.1f", gain) + " points");
  const double t = seconds_since(t0);
  o.require(t < kBenefitBudgetS, "runtime " + fmt("%.1fs", t));
  if (o.pass)
    o.detail = "SR on " + fmt("%.3f", on) + " vs off " + fmt("%.3f", off) + " (+" + fmt("%.1f", gain) +
               " points) in " + fmt("%.0fs", t);
  return o;
}

Outcome determinism(const fs::path& dir) {
  Outcome o;
  std::vector<std::string> files;
  for (const char* name : {"d1.jsonl", "d2.jsonl"}) {
    files.push_back((dir / name).string());
    o.require(btk_cli({"simulate", "--planted", "--episodes", "20", "--seed", "9", "--out", files.back()}) == 0,
              "simulate failed");
  }
  if (o.pass) o.require(read_file(files[0]) == read_file(files[1]), "trajectory files differ");

  const FeatureBank bank = synth_bank(3, 4096, 96, Modality::kImage);
  save_bank(bank, dir / "b1.btkb");
  const FeatureBank back = load_bank(dir / "b1.btkb");
  o.require(back == bank, "bank differs after reload");
  save_bank(back, dir / "b2.btkb");
  o.require(read_file(dir / "b1.btkb") == read_file(dir / "b2.btkb"), "bank bytes differ after re-save");
  if (o.pass) o.detail = "simulate byte-identical; bank round trip bit-exact";
  return o;
}

}  // namespace
}  // namespace btk

int main() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "btk_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::vector<std::pair<std::string, std::function<btk::Outcome()>>> criteria{
      {"gradient suite", btk::gradients},
      {"retrieval oracle", btk::retrieval},
      {"gate algebra", btk::gate_algebra},
      {"shape/invariant suite", btk::shape_invariants},
      {"metrics oracle", btk::metrics_oracle},
      {"knowledge benefit", [&] { return btk::knowledge_benefit(dir); }},
      {"determinism", [&] { return btk::determinism(dir); }},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    btk::Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s  %-22s %6.1fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), btk::seconds_since(t0),
                o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(dir);
  return failed == 0 ? 0 : 1;
}
