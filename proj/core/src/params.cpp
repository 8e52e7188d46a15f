// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/params.hpp"

#include <string>

#include "btk/error.hpp"
#include "btk/rng.hpp"

namespace btk {

AugmentorParams AugmentorParams::identity(int dim, int heads) {
  AugmentorParams p;
  p.gaa.mha = MhaParams::identity(dim, heads);
  p.gaa.gate = GateParams::zeros(dim);
  p.ka_instruction = KaParams::identity(dim, heads, kInstructionGateBias);
  p.ka_vision = KaParams::identity(dim, heads, 0.0);
  return p;
}

AugmentorParams AugmentorParams::random(std::uint64_t seed, int instruction_dim, int view_dim,
                                        int dim, int heads, double scale) {
  Rng rng(mix_seed(seed, 0x5041524d));
  AugmentorParams p;
  p.gaa.mha = MhaParams::random(rng, instruction_dim, heads, scale);
  p.gaa.gate = GateParams::random(rng, instruction_dim, scale);
  p.ka_instruction = KaParams::random(rng, view_dim, instruction_dim, dim, heads, scale);
  p.ka_vision = KaParams::random(rng, view_dim, view_dim, dim, heads, scale);
  return p;
}

namespace {

void put_mha(TensorStore& s, const std::string& prefix, const MhaParams& m) {
  s.add(prefix + "w_q", m.w_q);
  s.add(prefix + "w_k", m.w_k);
  s.add(prefix + "w_v", m.w_v);
  s.add(prefix + "w_o", m.w_o);
  s.set_attr(prefix + "heads", std::to_string(m.heads));
}

void put_gate(TensorStore& s, const std::string& prefix, const GateParams& g) {
  s.add(prefix + "w_original", g.w_original);
  s.add(prefix + "w_enhanced", g.w_enhanced);
  s.add(prefix + "bias", g.bias);
}

MhaParams get_mha(const TensorStore& s, const std::string& prefix) {
  MhaParams m;
  m.w_q = s.get(prefix + "w_q");
  m.w_k = s.get(prefix + "w_k");
  m.w_v = s.get(prefix + "w_v");
  m.w_o = s.get(prefix + "w_o");
  try {
    m.heads = std::stoi(s.attr(prefix + "heads"));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kManifestMismatch, prefix + "heads is not an integer");
  }
  m.check();
  return m;
}

GateParams get_gate(const TensorStore& s, const std::string& prefix) {
  GateParams g{s.get(prefix + "w_original"), s.get(prefix + "w_enhanced"), s.get(prefix + "bias")};
  g.check();
  return g;
}

void put_ka(TensorStore& s, const std::string& prefix, const KaParams& ka) {
  s.add(prefix + "w_k", ka.w_k);
  s.add(prefix + "w_t", ka.w_t);
  put_mha(s, prefix + "mha.", ka.mha);
  put_gate(s, prefix + "gate.", ka.gate);
}

KaParams get_ka(const TensorStore& s, const std::string& prefix) {
  KaParams ka{s.get(prefix + "w_k"), s.get(prefix + "w_t"), get_mha(s, prefix + "mha."),
              get_gate(s, prefix + "gate.")};
  ka.check();
  return ka;
}

}  // namespace

TensorStore params_to_tensors(const AugmentorParams& params) {
  TensorStore s;
  put_mha(s, "gaa.mha.", params.gaa.mha);
  put_gate(s, "gaa.gate.", params.gaa.gate);
  put_ka(s, "ka_instruction.", params.ka_instruction);
  put_ka(s, "ka_vision.", params.ka_vision);
  return s;
}

AugmentorParams params_from_tensors(const TensorStore& store) {
  AugmentorParams p;
  p.gaa.mha = get_mha(store, "gaa.mha.");
  p.gaa.gate = get_gate(store, "gaa.gate.");
  if (p.gaa.gate.dim() != p.gaa.mha.model_dim())
    throw Error(ErrorCode::kDimensionMismatch, "gaa gate width differs from gaa attention width");
  p.ka_instruction = get_ka(store, "ka_instruction.");
  p.ka_vision = get_ka(store, "ka_vision.");
  return p;
}

void save_params(const AugmentorParams& params, const std::filesystem::path& path) {
  save_tensors(params_to_tensors(params), path);
}

AugmentorParams load_params(const std::filesystem::path& path) {
  return params_from_tensors(load_tensors(path));
}

}  // namespace btk
