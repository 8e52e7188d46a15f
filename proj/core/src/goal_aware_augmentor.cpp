// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/goal_aware_augmentor.hpp"

#include <cctype>
#include <cmath>

#include "btk/error.hpp"
#include "btk/rng.hpp"

namespace btk {

namespace {

constexpr std::uint64_t kTokenSalt = 0x6274'6b5f'746f'6b31ULL;

RowVector unit(RowVector v) {
  const double n = v.norm();
  if (n < 1e-12) throw Error(ErrorCode::kZeroVector, "embedding row");
  return v / n;
}

}  // namespace

std::vector<std::string> InstructionRecord::subgoal_bank_ids() const {
  std::vector<std::string> ids;
  ids.reserve(subgoals.size());
  for (const auto& s : subgoals) ids.push_back(s.bank_id);
  return ids;
}

Matrix InstructionRecord::subgoal_matrix() const {
  std::vector<Matrix> blocks;
  blocks.reserve(subgoals.size());
  for (const auto& s : subgoals) blocks.push_back(s.embedding);
  return stack_rows(blocks);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

RowVector token_embedding(std::string_view token, int dim) {
  Rng rng(fnv1a64(token.data(), token.size()) ^ kTokenSalt);
  RowVector v(dim);
  for (int j = 0; j < dim; ++j) v(j) = rng.normal();
  return unit(std::move(v));
}

RowVector position_code(int position, int dim) {
  RowVector v(dim);
  for (int j = 0; j < dim; ++j) {
    const double freq = std::pow(10000.0, -static_cast<double>(2 * (j / 2)) / dim);
    v(j) = (j % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
  }
  return unit(std::move(v));
}

Matrix encode_instruction(const std::vector<std::string>& tokens, int dim) {
  if (tokens.empty()) throw Error(ErrorCode::kEmptyInstruction, "no tokens");
  if (dim < 1) throw Error(ErrorCode::kDimensionMismatch, "dim must be >= 1");
  Matrix t(static_cast<Eigen::Index>(tokens.size()), dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    t.row(static_cast<Eigen::Index>(i)) =
        unit(token_embedding(tokens[i], dim) + position_code(static_cast<int>(i), dim));
  }
  return t;
}

std::vector<Matrix> embed_subgoals(const std::vector<std::string>& phrases, int dim) {
  std::vector<Matrix> out;
  out.reserve(phrases.size());
  for (const auto& phrase : phrases) {
    const auto tokens = tokenize(phrase);
    if (tokens.empty()) throw Error(ErrorCode::kEmptyPhrase, "'" + phrase + "'");
    Matrix m(static_cast<Eigen::Index>(tokens.size()), dim);
    for (std::size_t i = 0; i < tokens.size(); ++i)
      m.row(static_cast<Eigen::Index>(i)) = token_embedding(tokens[i], dim);
    out.push_back(std::move(m));
  }
  return out;
}

void encode_record(InstructionRecord& record, int dim) {
  record.features = encode_instruction(record.tokens, dim);
  std::vector<std::string> phrases;
  for (const auto& s : record.subgoals) phrases.push_back(s.phrase);
  auto embs = embed_subgoals(phrases, dim);
  for (std::size_t i = 0; i < embs.size(); ++i) record.subgoals[i].embedding = std::move(embs[i]);
}

GaaResult gaa_forward(const Matrix& instruction, const Matrix& subgoal_tokens,
                      const GaaParams& params, GaaTrace* trace) {
  if (subgoal_tokens.rows() < 1) throw Error(ErrorCode::kEmptySubgoalList, "GAA needs subgoal tokens");
  if (params.gate.dim() != params.dim())
    throw Error(ErrorCode::kDimensionMismatch, "GAA gate width differs from MHA width");
  GaaTrace local;
  GaaTrace& t = trace ? *trace : local;
  GaaResult r;
  r.enhanced = mha_forward(instruction, subgoal_tokens, params.mha, &t.mha);
  t.gate = gate_fuse(r.enhanced, instruction, params.gate, GateOrder::kEnhancedFirst);
  r.fused = t.gate.fused;
  r.weights = t.gate.gate;
  return r;
}

GaaGrads gaa_backward(const Matrix& instruction, const Matrix& subgoal_tokens,
                      const GaaParams& params, const GaaResult& result, const GaaTrace& trace,
                      const Matrix& d_fused) {
  GaaGrads g;
  g.gate = gate_backward(result.enhanced, instruction, params.gate, GateOrder::kEnhancedFirst,
                         trace.gate, d_fused);
  g.mha = mha_backward(instruction, subgoal_tokens, params.mha, trace.mha, g.gate.d_enhanced);
  g.d_instruction = g.gate.d_original + g.mha.d_q_src;
  g.d_subgoal_tokens = g.mha.d_kv_src;
  return g;
}

}  // namespace btk
