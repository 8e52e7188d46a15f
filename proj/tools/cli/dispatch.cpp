// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "dispatch.hpp"

#include <btk/error.hpp>

#include <CLI11.hpp>
#include <algorithm>
#include <exception>

#include "commands.hpp"

namespace btk::cli {

namespace {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInternalConsistency:
    case ErrorCode::kNonFiniteGradient:
      return kFailed;
    default:
      return kMalformed;
  }
}

void add_planted(CLI::App* cmd, PlantedOptions& p) {
  cmd->add_flag("--planted", p.enabled, "Generate planted environments instead of reading files");
  cmd->add_option("--nodes", p.nodes, "Planted graph size")->capture_default_str();
  cmd->add_option("--branching", p.branching, "Planted node degree")->capture_default_str();
  cmd->add_option("--dim", p.dim, "Planted feature width")->capture_default_str();
  cmd->add_option("--alpha", p.alpha, "Planted signal strength")->capture_default_str()->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"btk: knowledge-augmented navigation toolkit", "btk"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto* bank = app.add_subcommand("bank", "Feature bank management");
  bank->require_subcommand(1);
  BankSynthOptions synth;
  auto* synth_cmd = bank->add_subcommand("synth", "Write a seeded random bank");
  synth_cmd->add_option("--out", synth.out, "Bank path")->required();
  synth_cmd->add_option("--count", synth.count)->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--modality", synth.modality)->capture_default_str()->check(CLI::IsMember({"text", "image", "view"}));
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  BankValidateOptions validate;
  auto* validate_cmd = bank->add_subcommand("validate", "Check a bank file (exit 1 on findings, 2 if unreadable)");
  validate_cmd->add_option("path", validate.path, "Bank path")->required();

  RetrieveOptions retrieve;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Top-k textual knowledge per view, as JSON lines");
  retrieve_cmd->add_option("--env", retrieve.env)->required();
  retrieve_cmd->add_option("--text-bank", retrieve.text_bank)->required();
  retrieve_cmd->add_option("--node", retrieve.node, "Single node (default: all)");
  retrieve_cmd->add_option("--k", retrieve.k)->capture_default_str()->check(CLI::PositiveNumber);
  retrieve_cmd->add_option("--workers", retrieve.workers)->capture_default_str()->check(CLI::PositiveNumber);
  retrieve_cmd->add_option("--out", retrieve.out)->capture_default_str();

  AugmentOptions augment;
  auto* augment_cmd = app.add_subcommand("augment", "Run both augmentors on one instruction and dump trace tensors");
  augment_cmd->add_option("--instr", augment.instr)->required();
  augment_cmd->add_option("--env", augment.env);
  augment_cmd->add_option("--image-bank", augment.image_bank);
  augment_cmd->add_option("--text-bank", augment.text_bank);
  augment_cmd->add_option("--params", augment.params);
  augment_cmd->add_option("--id", augment.instruction_id, "Instruction id (default: first)");
  augment_cmd->add_option("--node", augment.node, "Also trace the vision side at this node");
  augment_cmd->add_option("--k", augment.k)->capture_default_str()->check(CLI::PositiveNumber);
  augment_cmd->add_option("--heads", augment.heads)->capture_default_str()->check(CLI::PositiveNumber);
  augment_cmd->add_option("--knowledge", augment.knowledge)->capture_default_str()->check(CLI::IsMember({"on", "off", "text-only", "image-only"}));
  augment_cmd->add_option("--out", augment.out, "Tensor container path")->required();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run episodes and write trajectories as JSON lines");
  sim_cmd->add_option("--env", sim.env);
  sim_cmd->add_option("--instr", sim.instr);
  sim_cmd->add_option("--text-bank", sim.text_bank);
  sim_cmd->add_option("--image-bank", sim.image_bank);
  sim_cmd->add_option("--params", sim.params);
  sim_cmd->add_option("--k", sim.k)->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--lambda", sim.lambda)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--max-steps", sim.max_steps)->capture_default_str()->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--stop-bias", sim.stop_bias)->capture_default_str();
  sim_cmd->add_option("--episodes", sim.episodes, "Episode count (default: all / 200 planted)");
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--workers", sim.workers)->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--heads", sim.heads)->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--knowledge", sim.knowledge)->capture_default_str()->check(CLI::IsMember({"on", "off", "text-only", "image-only"}));
  sim_cmd->add_option("--out", sim.out)->capture_default_str();
  add_planted(sim_cmd, sim.planted);

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score trajectories (NE, SR, OSR, SPL, RGS, RGSPL)");
  eval_cmd->add_option("--trajectories", eval.trajectories)->required();
  eval_cmd->add_option("--env", eval.env);
  eval_cmd->add_option("--instr", eval.instr);
  eval_cmd->add_option("--radius", eval.radius)->capture_default_str()->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--episodes", eval.planted.episodes, "Planted batch size")->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed)->capture_default_str();
  eval_cmd->add_option("--csv", eval.csv, "Also write a one-row CSV table");
  eval_cmd->add_option("--dispersion-before", eval.dispersion_before, "Tensor container, first tensor = feature rows");
  eval_cmd->add_option("--dispersion-after", eval.dispersion_after);
  eval_cmd->add_option("--out", eval.out)->capture_default_str();
  add_planted(eval_cmd, eval.planted);

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  grad_cmd->add_option("--module", grad.module)->capture_default_str()->check(CLI::IsMember({"gate", "mha", "gaa", "ka"}));
  grad_cmd->add_option("--seed", grad.seed)->capture_default_str();
  grad_cmd->add_option("--tol", grad.tol)->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--order", grad.order, "Gate operand order")->capture_default_str()->check(CLI::IsMember({"enhanced-first", "original-first"}));

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Wall-clock timing of retrieval and ka_forward");
  bench_cmd->add_option("--count", bench.count)->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--dim", bench.dim)->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--queries", bench.queries)->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--k", bench.k)->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats)->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--out", bench.out)->capture_default_str();

  PlantOptions plant;
  auto* plant_cmd = app.add_subcommand("plant", "Write one planted environment with its banks and instruction");
  plant_cmd->add_option("--out", plant.out_dir, "Output directory")->required();
  plant_cmd->add_option("--seed", plant.seed)->capture_default_str();
  plant_cmd->add_option("--nodes", plant.planted.nodes)->capture_default_str();
  plant_cmd->add_option("--branching", plant.planted.branching)->capture_default_str();
  plant_cmd->add_option("--dim", plant.planted.dim)->capture_default_str();
  plant_cmd->add_option("--alpha", plant.planted.alpha)->capture_default_str()->check(CLI::Range(0.0, 1.0));

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kMalformed;
  }

  try {
    if (synth_cmd->parsed()) return run_bank_synth(synth, out, err);
    if (validate_cmd->parsed()) return run_bank_validate(validate, out, err);
    if (retrieve_cmd->parsed()) return run_retrieve(retrieve, out, err);
    if (augment_cmd->parsed()) return run_augment(augment, out, err);
    if (sim_cmd->parsed()) return run_simulate(sim, out, err);
    if (eval_cmd->parsed()) return run_evaluate(eval, out, err);
    if (grad_cmd->parsed()) return run_gradcheck(grad, out, err);
    if (bench_cmd->parsed()) return run_bench(bench, out, err);
    if (plant_cmd->parsed()) return run_plant(plant, out, err);
  } catch (const Error& e) {
    err << "btk: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "btk: " << e.what() << "\n";
    return kMalformed;
  }
  return kMalformed;
}

}  // namespace btk::cli
