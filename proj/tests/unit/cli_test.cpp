// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include <btk/feature_bank.hpp>
#include <btk/file_util.hpp>
#include <btk/records.hpp>
#include <btk/tensor_store.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "dispatch.hpp"
#include "test_util.hpp"

namespace btk::cli {
namespace {

using btk::testing::TempDir;
using nlohmann::json;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun btk(std::vector<std::string> args) {
  args.insert(args.begin(), "btk");
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(btk({"--help"}).code, 0);
  EXPECT_EQ(btk({}).code, 2);
  EXPECT_EQ(btk({"frobnicate"}).code, 2);
  EXPECT_EQ(btk({"bank", "synth"}).code, 2);
  EXPECT_EQ(btk({"simulate", "--planted", "--knowledge", "maybe"}).code, 2);
  EXPECT_EQ(btk({"simulate"}).code, 2);
}

TEST(Cli, BankSynthAndValidate) {
  TempDir dir;
  const std::string bank = (dir / "b.btkb").string();
  ASSERT_EQ(btk({"bank", "synth", "--out", bank, "--count", "50", "--dim", "16", "--seed", "3"}).code, 0);
  const CliRun ok = btk({"bank", "validate", bank});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  EXPECT_TRUE(json::parse(ok.out)["valid"].get<bool>());

  const std::string bytes = read_file(bank);
  write_file_atomic(dir / "t.btkb", bytes.substr(0, bytes.size() - 7));
  EXPECT_EQ(btk({"bank", "validate", (dir / "t.btkb").string()}).code, 2);
  EXPECT_EQ(btk({"bank", "validate", (dir / "missing.btkb").string()}).code, 2);

  FeatureBank b = load_bank(bank);
  std::vector<KnowledgeEntry> entries;
  for (std::size_t i = 0; i < b.size(); ++i)
    entries.push_back({b.id(i), "", "", std::vector<float>(b.row(i).begin(), b.row(i).end())});
  entries[3].id = entries[2].id;
  save_bank(FeatureBank(b.manifest(), std::move(entries)), dir / "dup.btkb");
  const CliRun dup = btk({"bank", "validate", (dir / "dup.btkb").string()});
  EXPECT_EQ(dup.code, 1);
  EXPECT_NE(dup.out.find("duplicate id"), std::string::npos);
}

TEST(Cli, Gradcheck) {
  const CliRun r = btk({"gradcheck", "--module", "ka", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_LE(j["max_rel_error"].get<double>(), 1e-4);
  EXPECT_EQ(btk({"gradcheck", "--module", "gaa", "--seed", "1", "--order", "original-first"}).code, 0);
}

TEST(Cli, PlantedSimulateIsDeterministic) {
  TempDir dir;
  const std::vector<std::string> base{"simulate", "--planted", "--episodes", "6", "--nodes", "12", "--seed", "4"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  ASSERT_EQ(btk(with({"--out", (dir / "a.jsonl").string()})).code, 0);
  ASSERT_EQ(btk(with({"--out", (dir / "b.jsonl").string(), "--workers", "3"})).code, 0);
  const std::string a = read_file(dir / "a.jsonl");
  EXPECT_EQ(a, read_file(dir / "b.jsonl"));
  EXPECT_EQ(parse_trajectories(a).size(), 6u);

  const CliRun eval = btk({"evaluate", "--planted", "--trajectories", (dir / "a.jsonl").string(), "--episodes", "6",
                        "--nodes", "12", "--seed", "4", "--csv", (dir / "m.csv").string()});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const json m = json::parse(eval.out);
  EXPECT_EQ(m["episodes"].size(), 6u);
  EXPECT_GE(m["OSR"].get<double>(), m["SR"].get<double>());
  EXPECT_EQ(read_file(dir / "m.csv").substr(0, 23), "NE,OSR,SR,SPL,RGS,RGSPL");
}

TEST(Cli, FileBasedPipeline) {
  TempDir dir;
  const std::string d = dir.path().string();
  ASSERT_EQ(btk({"plant", "--out", d, "--seed", "2", "--nodes", "10", "--dim", "32"}).code, 0);
  for (const char* f : {"env.json", "instructions.jsonl", "text.btkb", "image.btkb"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_EQ(btk({"bank", "validate", (dir / "text.btkb").string()}).code, 0);

  const CliRun ret = btk({"retrieve", "--env", (dir / "env.json").string(), "--text-bank", (dir / "text.btkb").string(),
                       "--node", "n000", "--k", "3"});
  ASSERT_EQ(ret.code, 0) << ret.err;
  const json hits = json::parse(ret.out.substr(0, ret.out.find('\n')));
  EXPECT_EQ(hits["views"].size(), 36u);

  const std::vector<std::string> sim{"simulate",    "--env",  (dir / "env.json").string(),
                                     "--instr",     (dir / "instructions.jsonl").string(),
                                     "--text-bank", (dir / "text.btkb").string(),
                                     "--image-bank", (dir / "image.btkb").string()};
  auto sim_to = [&](const std::string& out) {
    auto a = sim;
    a.push_back("--out");
    a.push_back(out);
    return btk(a);
  };
  ASSERT_EQ(sim_to((dir / "t1.jsonl").string()).code, 0);
  ASSERT_EQ(sim_to((dir / "t2.jsonl").string()).code, 0);
  EXPECT_EQ(read_file(dir / "t1.jsonl"), read_file(dir / "t2.jsonl"));

  const CliRun eval = btk({"evaluate", "--trajectories", (dir / "t1.jsonl").string(), "--env",
                        (dir / "env.json").string(), "--instr", (dir / "instructions.jsonl").string()});
  EXPECT_EQ(eval.code, 0) << eval.err;

  const CliRun aug = btk({"augment", "--instr", (dir / "instructions.jsonl").string(), "--env",
                       (dir / "env.json").string(), "--image-bank", (dir / "image.btkb").string(), "--text-bank",
                       (dir / "text.btkb").string(), "--node", "n001", "--out", (dir / "trace.btkt").string()});
  ASSERT_EQ(aug.code, 0) << aug.err;
  const TensorStore trace = load_tensors(dir / "trace.btkt");
  EXPECT_TRUE(trace.has("gaa.weights"));
  EXPECT_TRUE(trace.has("instruction.augmented"));
  EXPECT_EQ(trace.get("vision.augmented").rows(), 36);
}

TEST(Cli, EvaluateRejectsBadInput) {
  TempDir dir;
  write_file_atomic(dir / "t.jsonl", "{not json\n");
  EXPECT_EQ(btk({"evaluate", "--planted", "--trajectories", (dir / "t.jsonl").string()}).code, 2);
  write_file_atomic(dir / "u.jsonl",
                    R"({"instruction_id":"ep99999","path":["n000"],"predicted_object":null,"stop_reason":"stopped"})"
                    "\n");
  EXPECT_EQ(btk({"evaluate", "--planted", "--episodes", "3", "--trajectories", (dir / "u.jsonl").string()}).code, 2);
}

}  // namespace
}  // namespace btk::cli
