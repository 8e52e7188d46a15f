// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <btk/error.hpp>
#include <btk/feature_bank.hpp>
#include <btk/file_util.hpp>
#include <btk/grad_check.hpp>
#include <btk/metrics.hpp>
#include <btk/nav_sim.hpp>
#include <btk/parallel.hpp>
#include <btk/params.hpp>
#include <btk/planted.hpp>
#include <btk/records.hpp>
#include <btk/retrieval.hpp>
#include <btk/rng.hpp>
#include <btk/tensor_store.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <optional>

#include "dispatch.hpp"

namespace btk::cli {

using nlohmann::json;

namespace {

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::optional<FeatureBank> maybe_bank(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_bank(path);
}

AugmentorParams resolve_params(const std::string& path, int dim, int heads) {
  if (!path.empty()) return load_params(path);
  return AugmentorParams::identity(dim, heads);
}

KnowledgeBanks banks_for(const std::optional<FeatureBank>& text, const std::optional<FeatureBank>& image) {
  return KnowledgeBanks{text ? &*text : nullptr, image ? &*image : nullptr};
}

PlantSpec spec_of(const PlantedOptions& p) {
  return PlantSpec{p.nodes, p.branching, p.dim, p.alpha};
}

/// Episode i of a planted batch.
PlantedEpisode planted_episode(std::uint64_t seed, std::size_t i, const PlantedOptions& p) {
  PlantedEpisode ep = plant_env(mix_seed(seed, i), spec_of(p));
  char id[32];
  std::snprintf(id, sizeof id, "ep%05zu", i);
  ep.instruction.id = id;
  return ep;
}

void add_ka_trace(TensorStore& store, const std::string& prefix, const KnowledgeContext& ctx, const KaTrace& t,
                  const Matrix& augmented) {
  store.add(prefix + ".knowledge", ctx.knowledge);
  store.add(prefix + ".mat", t.mat);
  store.add(prefix + ".attn", t.attn);
  store.add(prefix + ".condensed", t.condensed);
  store.add(prefix + ".enhanced", t.enhanced);
  store.add(prefix + ".gate", t.gate.gate);
  store.add(prefix + ".augmented", augmented);
}

}  // namespace

int run_bank_synth(const BankSynthOptions& o, std::ostream& out, std::ostream&) {
  const FeatureBank bank = synth_bank(o.seed, o.count, o.dim, parse_modality(o.modality));
  save_bank(bank, o.out);
  out << json{{"path", o.out}, {"count", bank.size()}, {"dim", bank.dim()}}.dump() << "\n";
  return kOk;
}

int run_bank_validate(const BankValidateOptions& o, std::ostream& out, std::ostream& err) {
  const FeatureBank bank = load_bank(o.path);
  const ValidationReport report = validate_bank(bank);
  out << json{{"path", o.path}, {"valid", report.ok()}, {"count", bank.size()}, {"findings", report.findings}}.dump()
      << "\n";
  for (const auto& f : report.findings) err << "finding: " << f << "\n";
  return report.ok() ? kOk : kFailed;
}

int run_retrieve(const RetrieveOptions& o, std::ostream& out, std::ostream&) {
  const EnvGraph env = load_env(o.env);
  const FeatureBank bank = load_bank(o.text_bank);
  std::vector<std::size_t> nodes;
  if (!o.node.empty()) {
    nodes.push_back(env.index_of(o.node));
  } else {
    for (std::size_t i = 0; i < env.size(); ++i) nodes.push_back(i);
  }
  std::string text;
  for (auto i : nodes) {
    std::vector<std::vector<float>> pano;
    for (const auto& v : env.node(i).views) pano.push_back(v.feature);
    text += view_knowledge_to_jsonl(retrieve_view_knowledge(env.node(i).id, pano, bank, o.k, o.workers));
  }
  emit(o.out, text, out);
  return kOk;
}

int run_augment(const AugmentOptions& o, std::ostream& out, std::ostream&) {
  const KnowledgeMode mode = parse_knowledge_mode(o.knowledge);
  std::optional<EnvGraph> env;
  if (!o.env.empty()) env = load_env(o.env);
  const auto text_bank = maybe_bank(o.text_bank);
  const auto image_bank = maybe_bank(o.image_bank);

  int dim = env ? static_cast<int>(env->feature_dim()) : (image_bank ? static_cast<int>(image_bank->dim()) : 0);
  if (!o.params.empty()) dim = static_cast<int>(load_params(o.params).gaa.gate.dim());
  if (dim <= 0) throw Error(ErrorCode::kInvalidArgument, "cannot infer the model width; pass --env or --params");
  const AugmentorParams params = resolve_params(o.params, dim, o.heads);

  const auto records = load_instructions(o.instr, dim);
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "instruction file is empty");
  const InstructionRecord* rec = &records.front();
  if (!o.instruction_id.empty()) {
    rec = nullptr;
    for (const auto& r : records)
      if (r.id == o.instruction_id) rec = &r;
    if (!rec) throw Error(ErrorCode::kMissingEntry, "no instruction '" + o.instruction_id + "'");
  }

  TensorStore store;
  store.set_attr("instruction_id", rec->id);
  store.set_attr("knowledge", std::string(to_string(mode)));
  store.add("instruction.T", rec->features);
  store.add("instruction.subgoals", rec->subgoal_matrix());
  GaaTrace gaa_trace;
  const GaaResult gaa = gaa_forward(rec->features, rec->subgoal_matrix(), params.gaa, &gaa_trace);
  store.add("gaa.enhanced", gaa.enhanced);
  store.add("gaa.weights", gaa.weights);
  store.add("gaa.fused", gaa.fused);
  if (uses_image_knowledge(mode)) {
    if (!image_bank) throw Error(ErrorCode::kInvalidArgument, "image knowledge enabled without --image-bank");
    KnowledgeContext ctx{index_image_knowledge(rec->id, rec->subgoal_bank_ids(), *image_bank), gaa.fused};
    KaTrace t;
    const KaResult r = ka_forward(ctx, params.ka_instruction, &t);
    add_ka_trace(store, "ka_instruction", ctx, t, r.augmented);
  }
  store.add("instruction.augmented", augment_instruction(*rec, image_bank ? &*image_bank : nullptr, params, mode));

  if (!o.node.empty()) {
    if (!env) throw Error(ErrorCode::kInvalidArgument, "--node needs --env");
    const std::size_t node = env->index_of(o.node);
    store.set_attr("node", o.node);
    store.add("vision.views", env->panorama(node));
    if (uses_text_knowledge(mode)) {
      if (!text_bank) throw Error(ErrorCode::kInvalidArgument, "text knowledge enabled without --text-bank");
      std::vector<std::vector<float>> pano;
      for (const auto& v : env->node(node).views) pano.push_back(v.feature);
      const ViewKnowledge vk = retrieve_view_knowledge(o.node, pano, *text_bank, o.k);
      const Matrix views = env->panorama(node);
      for (int v = 0; v < kViewsPerPanorama; ++v) {
        KnowledgeContext ctx{gather_rows(*text_bank, vk.per_view[static_cast<std::size_t>(v)]), views.row(v)};
        KaTrace t;
        const KaResult r = ka_forward(ctx, params.ka_vision, &t);
        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "ka_vision.v%02d", v);
        add_ka_trace(store, prefix, ctx, t, r.augmented);
      }
    }
    store.add("vision.augmented",
              augment_panorama(*env, node, text_bank ? &*text_bank : nullptr, params, mode, o.k));
  }

  save_tensors(store, o.out);
  json names = json::array();
  for (const auto& [name, m] : store.tensors()) names.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}});
  out << json{{"path", o.out}, {"tensors", names}}.dump() << "\n";
  return kOk;
}

int run_simulate(const SimulateOptions& o, std::ostream& out, std::ostream&) {
  EpisodeConfig cfg;
  cfg.max_steps = o.max_steps;
  cfg.lambda = o.lambda;
  cfg.stop_bias = o.stop_bias;
  cfg.top_k = o.k;
  cfg.knowledge = parse_knowledge_mode(o.knowledge);
  if (cfg.max_steps < 0) throw Error(ErrorCode::kInvalidArgument, "--max-steps must be >= 0");
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "--lambda must be in [0, 1]");

  std::vector<Trajectory> trajs;
  if (o.planted.enabled) {
    const std::size_t n = static_cast<std::size_t>(o.episodes >= 0 ? o.episodes : o.planted.episodes);
    const AugmentorParams params = resolve_params(o.params, o.planted.dim, o.heads);
    trajs.resize(n);
    parallel_for(n, o.workers, [&](std::size_t i) {
      const PlantedEpisode ep = planted_episode(o.seed, i, o.planted);
      trajs[i] = run_episode(ep.env, ep.instruction, {&ep.text_bank, &ep.image_bank}, params, cfg);
    });
  } else {
    if (o.env.empty() || o.instr.empty()) throw Error(ErrorCode::kInvalidArgument, "simulate needs --env and --instr (or --planted)");
    const EnvGraph env = load_env(o.env);
    const auto text_bank = maybe_bank(o.text_bank);
    const auto image_bank = maybe_bank(o.image_bank);
    const int dim = static_cast<int>(env.feature_dim());
    const AugmentorParams params = resolve_params(o.params, dim, o.heads);
    auto records = load_instructions(o.instr, static_cast<int>(params.gaa.gate.dim()));
    if (o.episodes >= 0 && static_cast<std::size_t>(o.episodes) < records.size()) records.resize(static_cast<std::size_t>(o.episodes));
    const KnowledgeBanks banks = banks_for(text_bank, image_bank);
    trajs.resize(records.size());
    parallel_for(records.size(), o.workers,
                 [&](std::size_t i) { trajs[i] = run_episode(env, records[i], banks, params, cfg); });
  }
  emit(o.out, trajectories_to_jsonl(trajs), out);
  return kOk;
}

int run_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream&) {
  const auto trajs = load_trajectories(o.trajectories);
  MetricsReport report;
  if (o.planted.enabled) {
    std::vector<EpisodeMetrics> eps(trajs.size());
    const auto n = static_cast<std::size_t>(o.planted.episodes);
    parallel_for(trajs.size(), 1, [&](std::size_t i) {
      const auto& t = trajs[i];
      std::size_t idx = n;
      if (t.instruction_id.size() == 7 && t.instruction_id.rfind("ep", 0) == 0)
        idx = static_cast<std::size_t>(std::stoul(t.instruction_id.substr(2)));
      if (idx >= n) throw Error(ErrorCode::kMissingGoal, "no planted episode for '" + t.instruction_id + "'");
      const PlantedEpisode ep = planted_episode(o.seed, idx, o.planted);
      const auto goals = goals_from_instructions(ep.env, {ep.instruction});
      eps[i] = score_episode(t, ep.env, goals.at(t.instruction_id), o.radius);
    });
    report = aggregate(std::move(eps));
  } else {
    if (o.env.empty() || o.instr.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluate needs --env and --instr (or --planted)");
    const EnvGraph env = load_env(o.env);
    const auto records = load_instructions(o.instr, static_cast<int>(env.feature_dim()));
    report = evaluate(trajs, env, goals_from_instructions(env, records), o.radius);
  }

  if (!o.dispersion_before.empty() || !o.dispersion_after.empty()) {
    if (o.dispersion_before.empty() || o.dispersion_after.empty())
      throw Error(ErrorCode::kInvalidArgument, "--dispersion-before and --dispersion-after go together");
    report.dispersion = compare_dispersion(load_tensors(o.dispersion_before).tensors().at(0).second,
                                           load_tensors(o.dispersion_after).tensors().at(0).second);
  }
  check_report(report);

  const std::string json_text = report_to_json(report);
  if (!o.csv.empty()) write_file_atomic(o.csv, report_to_csv(report));
  emit(o.out, json_text, out);
  return kOk;
}

int run_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream& err) {
  const GradOperator op = parse_grad_operator(o.module);
  GateOrder order = GateOrder::kEnhancedFirst;
  if (o.order == "original-first") {
    order = GateOrder::kOriginalFirst;
  } else if (o.order != "enhanced-first") {
    throw Error(ErrorCode::kInvalidArgument, "--order must be enhanced-first or original-first");
  }
  const GradReport r = grad_check(make_grad_problem(op, o.seed, order), o.tol);
  out << json{{"module", o.module},
              {"seed", o.seed},
              {"checked", r.checked},
              {"max_rel_error", r.max_rel_error},
              {"worst", {{"variable", r.worst_variable}, {"row", r.worst_row}, {"col", r.worst_col}}},
              {"tolerance", r.tolerance},
              {"passed", r.passed}}
             .dump()
      << "\n";
  if (!r.passed) err << "gradient mismatch: max relative error " << r.max_rel_error << " > " << o.tol << "\n";
  return r.passed ? kOk : kFailed;
}

int run_bench(const BenchOptions& o, std::ostream& out, std::ostream&) {
  using clock = std::chrono::steady_clock;
  const FeatureBank bank = synth_bank(o.seed, o.count, o.dim, Modality::kText);
  Rng rng(mix_seed(o.seed, 1));
  std::vector<std::vector<float>> queries(static_cast<std::size_t>(o.queries));
  for (auto& q : queries) {
    q.resize(o.dim);
    for (auto& x : q) x = static_cast<float>(rng.normal());
  }

  double best_retrieval = 1e300;
  std::size_t sink = 0;
  for (int r = 0; r < o.repeats; ++r) {
    const auto t0 = clock::now();
    for (const auto& q : queries) sink += cosine_topk(std::span<const float>(q), bank, o.k).size();
    best_retrieval = std::min(best_retrieval, std::chrono::duration<double>(clock::now() - t0).count());
  }

  const int d = static_cast<int>(std::min<std::uint32_t>(o.dim, 512));
  const KaParams ka = KaParams::random(rng, d, d, d, 8 <= d && d % 8 == 0 ? 8 : 1, 0.1);
  KnowledgeContext ctx{random_matrix(rng, o.k, d), random_matrix(rng, 1, d)};
  double best_ka = 1e300;
  for (int r = 0; r < o.repeats; ++r) {
    const auto t0 = clock::now();
    for (int i = 0; i < o.queries; ++i) sink += static_cast<std::size_t>(ka_forward(ctx, ka).augmented.cols());
    best_ka = std::min(best_ka, std::chrono::duration<double>(clock::now() - t0).count());
  }

  const json result{{"bank_count", o.count},
              {"dim", o.dim},
              {"queries", o.queries},
              {"k", o.k},
              {"retrieval_ms_per_query", 1e3 * best_retrieval / o.queries},
              {"ka_forward_ms_per_view", 1e3 * best_ka / o.queries},
              {"checksum", sink}};
  emit(o.out, result.dump() + "\n", out);
  return kOk;
}

int run_plant(const PlantOptions& o, std::ostream& out, std::ostream&) {
  const PlantedEpisode ep = plant_env(o.seed, spec_of(o.planted));
  const std::filesystem::path dir = o.out_dir;
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "env.json", env_to_json(ep.env));
  save_instructions({ep.instruction}, dir / "instructions.jsonl");
  save_bank(ep.text_bank, dir / "text.btkb");
  save_bank(ep.image_bank, dir / "image.btkb");
  out << json{{"dir", o.out_dir},
              {"instruction_id", ep.instruction.id},
              {"start", ep.instruction.start_node},
              {"goal", ep.goal_node},
              {"goal_object", ep.goal_object},
              {"nodes", ep.env.size()},
              {"edges", ep.env.edge_count()}}
             .dump()
      << "\n";
  return kOk;
}

}  // namespace btk::cli
