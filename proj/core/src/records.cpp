// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/records.hpp"

#include <json.hpp>
#include <map>

#include "btk/error.hpp"
#include "btk/file_util.hpp"
#include "btk/tensor_store.hpp"

namespace btk {

using nlohmann::json;

namespace {

json parse_object(std::string_view line, std::string_view what) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParseError, std::string(what) + ": expected an object");
  return j;
}

template <class F>
auto field(const json& j, const char* key, F&& get) {
  if (!j.contains(key)) throw Error(ErrorCode::kParseError, std::string("missing field '") + key + "'");
  try {
    return get(j.at(key));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("bad field '") + key + "': " + e.what());
  }
}

std::string str(const json& j) { return j.get<std::string>(); }

template <class F>
void for_each_line(std::string_view text, F&& fn) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      fn(line);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParseError) throw;
      throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::string instruction_to_json(const InstructionRecord& r) {
  json j;
  j["id"] = r.id;
  j["tokens"] = r.tokens;
  json subs = json::array();
  for (const auto& s : r.subgoals) subs.push_back({{"phrase", s.phrase}, {"bank_id", s.bank_id}});
  j["subgoals"] = std::move(subs);
  j["start"] = r.start_node;
  j["goal"] = r.goal_node;
  if (r.goal_object) j["goal_object"] = *r.goal_object;
  return j.dump();
}

InstructionRecord parse_instruction(std::string_view line) {
  const json j = parse_object(line, "instruction");
  InstructionRecord r;
  r.id = field(j, "id", str);
  if (j.contains("tokens")) {
    r.tokens = field(j, "tokens", [](const json& v) { return v.get<std::vector<std::string>>(); });
  } else {
    r.tokens = tokenize(field(j, "text", str));
  }
  if (j.contains("subgoals")) {
    field(j, "subgoals", [&](const json& arr) {
      for (const auto& s : arr) {
        Subgoal sg;
        sg.phrase = s.at("phrase").get<std::string>();
        if (s.contains("bank_id") && !s.at("bank_id").is_null()) sg.bank_id = s.at("bank_id").get<std::string>();
        r.subgoals.push_back(std::move(sg));
      }
      return 0;
    });
  }
  r.start_node = field(j, "start", str);
  r.goal_node = field(j, "goal", str);
  if (j.contains("goal_object") && !j.at("goal_object").is_null()) r.goal_object = field(j, "goal_object", str);
  return r;
}

std::vector<InstructionRecord> load_instructions(const std::filesystem::path& path, int dim) {
  const std::string text = read_file(path);
  std::vector<InstructionRecord> out;
  std::vector<std::string> feature_refs;
  for_each_line(text, [&](std::string_view line) {
    out.push_back(parse_instruction(line));
    const json j = json::parse(line);
    feature_refs.push_back(j.contains("features") && j["features"].is_string() ? j["features"].get<std::string>()
                                                                                 : std::string{});
  });

  std::map<std::string, TensorStore> stores;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& r = out[i];
    if (feature_refs[i].empty()) {
      encode_record(r, dim);
      continue;
    }
    const auto file = path.parent_path() / feature_refs[i];
    auto it = stores.find(file.string());
    if (it == stores.end()) it = stores.emplace(file.string(), load_tensors(file)).first;
    r.features = it->second.get(r.id);
    if (r.features.rows() != static_cast<Eigen::Index>(r.tokens.size()))
      throw Error(ErrorCode::kDimensionMismatch, "features for '" + r.id + "' do not match its token count");
    std::vector<std::string> phrases;
    for (const auto& s : r.subgoals) phrases.push_back(s.phrase);
    const auto emb = embed_subgoals(phrases, static_cast<int>(r.features.cols()));
    for (std::size_t k = 0; k < emb.size(); ++k) r.subgoals[k].embedding = emb[k];
  }
  return out;
}

void save_instructions(const std::vector<InstructionRecord>& records, const std::filesystem::path& path) {
  const std::string store_name = path.filename().string() + ".features.btkt";
  TensorStore store;
  std::string text;
  for (const auto& r : records) {
    json j = json::parse(instruction_to_json(r));
    if (r.features.size() > 0) {
      store.add(r.id, r.features);
      j["features"] = store_name;
    }
    text += j.dump();
    text += '\n';
  }
  save_tensors(store, path.parent_path() / store_name);
  write_file_atomic(path, text);
}

std::string trajectory_to_json(const Trajectory& t) {
  json j;
  j["instruction_id"] = t.instruction_id;
  j["path"] = t.path;
  j["predicted_object"] = t.predicted_object ? json(*t.predicted_object) : json(nullptr);
  j["stop_reason"] = std::string(to_string(t.stop_reason));
  return j.dump();
}

Trajectory parse_trajectory(std::string_view line) {
  const json j = parse_object(line, "trajectory");
  Trajectory t;
  t.instruction_id = field(j, "instruction_id", str);
  t.path = field(j, "path", [](const json& v) { return v.get<std::vector<std::string>>(); });
  if (j.contains("predicted_object") && !j.at("predicted_object").is_null())
    t.predicted_object = field(j, "predicted_object", str);
  const std::string reason = field(j, "stop_reason", str);
  if (reason == "stopped") {
    t.stop_reason = StopReason::kStopped;
  } else if (reason == "max_steps") {
    t.stop_reason = StopReason::kMaxSteps;
  } else {
    throw Error(ErrorCode::kParseError, "unknown stop_reason '" + reason + "'");
  }
  return t;
}

std::string trajectories_to_jsonl(const std::vector<Trajectory>& ts) {
  std::string out;
  for (const auto& t : ts) {
    out += trajectory_to_json(t);
    out += '\n';
  }
  return out;
}

std::vector<Trajectory> parse_trajectories(std::string_view text) {
  std::vector<Trajectory> out;
  for_each_line(text, [&](std::string_view line) { out.push_back(parse_trajectory(line)); });
  return out;
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  return parse_trajectories(read_file(path));
}

}  // namespace btk
