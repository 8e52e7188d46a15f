// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "btk/fusion_math.hpp"
#include "btk/linalg.hpp"

namespace btk {

inline constexpr int kInstructionDim = 768;

struct Subgoal {
  std::string phrase;
  std::string bank_id;  // image-knowledge entry for this phrase; may be empty
  Matrix embedding;     // one row per phrase token
};

struct InstructionRecord {
  std::string id;
  std::vector<std::string> tokens;
  Matrix features;  // T, L x dim
  std::vector<Subgoal> subgoals;
  std::string start_node;
  std::string goal_node;
  std::optional<std::string> goal_object;

  std::vector<std::string> subgoal_bank_ids() const;
  Matrix subgoal_matrix() const;  // I_g', all subgoal token rows stacked
};

/// Lowercased whitespace split.
std::vector<std::string> tokenize(std::string_view text);

/// Unit-norm hash embedding of one token (same vector for the same token in
/// instructions and subgoals).
RowVector token_embedding(std::string_view token, int dim);

/// Unit-norm sinusoidal position code.
RowVector position_code(int position, int dim);

/// Row i = normalize(token_embedding(tokens[i]) + position_code(i)).
/// Stand-in for a pretrained text encoder; throws EmptyInstruction.
Matrix encode_instruction(const std::vector<std::string>& tokens, int dim = kInstructionDim);

/// One token_embedding row per token of each phrase, no position codes.
/// Throws EmptyPhrase for a phrase without tokens.
std::vector<Matrix> embed_subgoals(const std::vector<std::string>& phrases,
                                   int dim = kInstructionDim);

/// Fills features and subgoal embeddings from the tokens and phrases.
void encode_record(InstructionRecord& record, int dim);

struct GaaParams {
  MhaParams mha;
  GateParams gate;  // w_original = W_g, w_enhanced = W_c, bias = b_I

  Eigen::Index dim() const { return mha.model_dim(); }
};

struct GaaResult {
  Matrix fused;     // T''
  Matrix weights;   // omega
  Matrix enhanced;  // T'
};

struct GaaTrace {
  MhaCache mha;
  GateResult gate;
};

/// T' = MHA(T, I_g'); omega = sigmoid(T W_g + T' W_c + b_I);
/// T'' = omega * T' + (1 - omega) * T.
GaaResult gaa_forward(const Matrix& instruction, const Matrix& subgoal_tokens,
                      const GaaParams& params, GaaTrace* trace = nullptr);

struct GaaGrads {
  Matrix d_instruction, d_subgoal_tokens;
  MhaGrads mha;
  GateGrads gate;
};

GaaGrads gaa_backward(const Matrix& instruction, const Matrix& subgoal_tokens,
                      const GaaParams& params, const GaaResult& result, const GaaTrace& trace,
                      const Matrix& d_fused);

}  // namespace btk
