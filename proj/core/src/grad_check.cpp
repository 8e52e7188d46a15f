// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "btk/error.hpp"
#include "btk/goal_aware_augmentor.hpp"
#include "btk/knowledge_augmentor.hpp"
#include "btk/rng.hpp"

namespace btk {

GradReport grad_check(const GradProblem& problem, double tol, double step) {
  const auto analytic = problem.gradient();
  if (analytic.size() != problem.variables.size())
    throw Error(ErrorCode::kInvalidArgument, "gradient count differs from variable count");

  GradReport report;
  report.tolerance = tol;
  for (std::size_t v = 0; v < problem.variables.size(); ++v) {
    Matrix& x = *problem.variables[v].value;
    const Matrix& a = analytic[v];
    require_shape(a, x.rows(), x.cols(), "analytic gradient of " + problem.variables[v].name);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double saved = x(i, j);
        x(i, j) = saved + step;
        const double up = problem.loss();
        x(i, j) = saved - step;
        const double down = problem.loss();
        x(i, j) = saved;
        const double numeric = (up - down) / (2.0 * step);
        if (!std::isfinite(numeric) || !std::isfinite(a(i, j))) {
          throw Error(ErrorCode::kNonFiniteGradient, problem.variables[v].name);
        }
        const double denom = std::max({std::abs(a(i, j)), std::abs(numeric), kGradRelFloor});
        const double rel = std::abs(a(i, j) - numeric) / denom;
        ++report.checked;
        if (rel > report.max_rel_error || report.checked == 1) {
          report.max_rel_error = rel;
          report.worst_variable = problem.variables[v].name;
          report.worst_row = i;
          report.worst_col = j;
        }
      }
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

std::string_view to_string(GradOperator op) {
  switch (op) {
    case GradOperator::kGate: return "gate";
    case GradOperator::kMha: return "mha";
    case GradOperator::kGaa: return "gaa";
    case GradOperator::kKa: return "ka";
  }
  return "gate";
}

GradOperator parse_grad_operator(std::string_view name) {
  if (name == "gate") return GradOperator::kGate;
  if (name == "mha") return GradOperator::kMha;
  if (name == "gaa") return GradOperator::kGaa;
  if (name == "ka") return GradOperator::kKa;
  throw Error(ErrorCode::kInvalidArgument, "unknown gradient module '" + std::string(name) + "'");
}

namespace {

constexpr Eigen::Index kDim = 8;
constexpr int kHeads = 2;
constexpr double kScale = 0.5;

void add_mha_vars(std::vector<GradVariable>& vars, const std::string& prefix, MhaParams& p) {
  vars.push_back({prefix + "w_q", &p.w_q});
  vars.push_back({prefix + "w_k", &p.w_k});
  vars.push_back({prefix + "w_v", &p.w_v});
  vars.push_back({prefix + "w_o", &p.w_o});
}

void add_gate_vars(std::vector<GradVariable>& vars, const std::string& prefix, GateParams& p) {
  vars.push_back({prefix + "w_original", &p.w_original});
  vars.push_back({prefix + "w_enhanced", &p.w_enhanced});
  vars.push_back({prefix + "bias", &p.bias});
}

GradProblem gate_problem(Rng& rng, GateOrder order) {
  struct State {
    Matrix enhanced, original;
    GateParams params;
    GateOrder order;
  };
  auto s = std::make_shared<State>();
  s->enhanced = random_matrix(rng, 4, kDim);
  s->original = random_matrix(rng, 4, kDim);
  s->params = GateParams::random(rng, kDim, kScale);
  s->order = order;

  GradProblem p;
  p.variables = {{"enhanced", &s->enhanced}, {"original", &s->original}};
  add_gate_vars(p.variables, "gate.", s->params);
  p.loss = [s] { return gate_fuse(s->enhanced, s->original, s->params, s->order).fused.sum(); };
  p.gradient = [s] {
    auto fwd = gate_fuse(s->enhanced, s->original, s->params, s->order);
    auto g = gate_backward(s->enhanced, s->original, s->params, s->order, fwd,
                           Matrix::Ones(fwd.fused.rows(), fwd.fused.cols()));
    return std::vector<Matrix>{g.d_enhanced, g.d_original, g.d_w_original, g.d_w_enhanced, g.d_bias};
  };
  p.state = s;
  return p;
}

GradProblem mha_problem(Rng& rng) {
  struct State {
    Matrix q_src, kv_src;
    MhaParams params;
  };
  auto s = std::make_shared<State>();
  s->q_src = random_matrix(rng, 4, kDim);
  s->kv_src = random_matrix(rng, 3, kDim);
  s->params = MhaParams::random(rng, kDim, kHeads, kScale);

  GradProblem p;
  p.variables = {{"q_src", &s->q_src}, {"kv_src", &s->kv_src}};
  add_mha_vars(p.variables, "mha.", s->params);
  p.loss = [s] { return mha_forward(s->q_src, s->kv_src, s->params).sum(); };
  p.gradient = [s] {
    MhaCache cache;
    Matrix out = mha_forward(s->q_src, s->kv_src, s->params, &cache);
    auto g = mha_backward(s->q_src, s->kv_src, s->params, cache, Matrix::Ones(out.rows(), out.cols()));
    return std::vector<Matrix>{g.d_q_src, g.d_kv_src, g.d_w_q, g.d_w_k, g.d_w_v, g.d_w_o};
  };
  p.state = s;
  return p;
}

GradProblem gaa_problem(Rng& rng) {
  struct State {
    Matrix instruction, subgoals;
    GaaParams params;
  };
  auto s = std::make_shared<State>();
  s->instruction = random_matrix(rng, 4, kDim);
  s->subgoals = random_matrix(rng, 3, kDim);
  s->params.mha = MhaParams::random(rng, kDim, kHeads, kScale);
  s->params.gate = GateParams::random(rng, kDim, kScale);

  GradProblem p;
  p.variables = {{"T", &s->instruction}, {"I_g", &s->subgoals}};
  add_mha_vars(p.variables, "gaa.mha.", s->params.mha);
  add_gate_vars(p.variables, "gaa.gate.", s->params.gate);
  p.loss = [s] { return gaa_forward(s->instruction, s->subgoals, s->params).fused.sum(); };
  p.gradient = [s] {
    GaaTrace trace;
    auto r = gaa_forward(s->instruction, s->subgoals, s->params, &trace);
    auto g = gaa_backward(s->instruction, s->subgoals, s->params, r, trace,
                          Matrix::Ones(r.fused.rows(), r.fused.cols()));
    return std::vector<Matrix>{g.d_instruction, g.d_subgoal_tokens, g.mha.d_w_q, g.mha.d_w_k,
                               g.mha.d_w_v,     g.mha.d_w_o,        g.gate.d_w_original,
                               g.gate.d_w_enhanced, g.gate.d_bias};
  };
  p.state = s;
  return p;
}

GradProblem ka_problem(Rng& rng) {
  struct State {
    KnowledgeContext ctx;
    KaParams params;
  };
  auto s = std::make_shared<State>();
  s->ctx.knowledge = random_matrix(rng, 3, 6);
  s->ctx.target = random_matrix(rng, 4, 5);
  s->params = KaParams::random(rng, 6, 5, kDim, kHeads, kScale);

  GradProblem p;
  p.variables = {{"K", &s->ctx.knowledge},
                 {"X", &s->ctx.target},
                 {"ka.w_k", &s->params.w_k},
                 {"ka.w_t", &s->params.w_t}};
  add_mha_vars(p.variables, "ka.mha.", s->params.mha);
  add_gate_vars(p.variables, "ka.gate.", s->params.gate);
  p.loss = [s] { return ka_forward(s->ctx, s->params).augmented.sum(); };
  p.gradient = [s] {
    KaTrace trace;
    auto r = ka_forward(s->ctx, s->params, &trace);
    auto g = ka_backward(s->ctx, s->params, trace,
                         Matrix::Ones(r.augmented.rows(), r.augmented.cols()));
    return std::vector<Matrix>{g.d_knowledge, g.d_target, g.d_w_k, g.d_w_t,
                               g.mha.d_w_q,   g.mha.d_w_k, g.mha.d_w_v, g.mha.d_w_o,
                               g.gate.d_w_original, g.gate.d_w_enhanced, g.gate.d_bias};
  };
  p.state = s;
  return p;
}

}  // namespace

GradProblem make_grad_problem(GradOperator op, std::uint64_t seed, GateOrder order) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(op) + 100));
  switch (op) {
    case GradOperator::kGate: return gate_problem(rng, order);
    case GradOperator::kMha: return mha_problem(rng);
    case GradOperator::kGaa: return gaa_problem(rng);
    case GradOperator::kKa: return ka_problem(rng);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown operator");
}

}  // namespace btk
