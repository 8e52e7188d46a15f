// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>

namespace btk::cli {

struct PlantedOptions {
  bool enabled = false;
  int episodes = 200;
  int nodes = 30;
  int branching = 3;
  int dim = 64;
  double alpha = 0.9;
};

struct BankSynthOptions {
  std::string out;
  std::uint64_t count = 1000;
  std::uint32_t dim = 512;
  std::string modality = "text";
  std::uint64_t seed = 0;
};

struct BankValidateOptions {
  std::string path;
};

struct RetrieveOptions {
  std::string env, text_bank, node, out = "-";
  int k = 5;
  int workers = 1;
};

struct AugmentOptions {
  std::string instr, env, image_bank, text_bank, params, instruction_id, node, out;
  std::string knowledge = "on";
  int k = 5;
  int heads = 4;
};

struct SimulateOptions {
  std::string env, instr, text_bank, image_bank, params, out = "-";
  std::string knowledge = "on";
  int k = 5;
  double lambda = 0.5;
  int max_steps = 15;
  double stop_bias = 0.0;
  int episodes = -1;
  std::uint64_t seed = 0;
  int workers = 1;
  int heads = 4;
  PlantedOptions planted;
};

struct EvaluateOptions {
  std::string trajectories, env, instr, out = "-", csv;
  std::string dispersion_before, dispersion_after;
  double radius = 3.0;
  std::uint64_t seed = 0;
  PlantedOptions planted;
};

struct GradcheckOptions {
  std::string module = "ka";
  std::string order = "enhanced-first";
  std::uint64_t seed = 0;
  double tol = 1e-4;
};

struct BenchOptions {
  std::uint64_t count = 10000;
  std::uint32_t dim = 512;
  int queries = 100;
  int k = 5;
  int repeats = 3;
  std::uint64_t seed = 0;
  std::string out = "-";
};

struct PlantOptions {
  std::string out_dir;
  std::uint64_t seed = 0;
  PlantedOptions planted;
};

// Each returns an exit code; btk::Error propagates to dispatch.
int run_bank_synth(const BankSynthOptions& o, std::ostream& out, std::ostream& err);
int run_bank_validate(const BankValidateOptions& o, std::ostream& out, std::ostream& err);
int run_retrieve(const RetrieveOptions& o, std::ostream& out, std::ostream& err);
int run_augment(const AugmentOptions& o, std::ostream& out, std::ostream& err);
int run_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err);
int run_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err);
int run_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream& err);
int run_bench(const BenchOptions& o, std::ostream& out, std::ostream& err);
int run_plant(const PlantOptions& o, std::ostream& out, std::ostream& err);

}  // namespace btk::cli
