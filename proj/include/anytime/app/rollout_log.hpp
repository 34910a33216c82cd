#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anytime/core/errors.hpp"
#include "anytime/core/types.hpp"
#include "anytime/diagnostics/diagnostics.hpp"

namespace anytime::app {

/// One line of rollouts.jsonl.
struct RolloutRecord {
  std::size_t iteration = 0;
  QuestionId question_id = 0;
  std::uint64_t run_seed = 0;
  std::size_t slot = 0;
  std::size_t member = 0;
  std::uint64_t trace_seed = 0;
  std::vector<Token> tokens;
  bool terminated_naturally = false;
  std::vector<double> rewards;
};

inline nlohmann::json to_json(const RolloutRecord& r) {
  nlohmann::json toks = nlohmann::json::array();
  for (const Token& t : r.tokens) toks.push_back({{"id", t.id}, {"origin", t.origin == Origin::Policy ? "policy" : "env"}});
  return {{"iteration", r.iteration},
          {"question_id", r.question_id},
          {"seed_path",
           {{"run", r.run_seed}, {"iteration", r.iteration}, {"slot", r.slot}, {"member", r.member},
            {"trace_seed", r.trace_seed}}},
          {"tokens", toks},
          {"terminated_naturally", r.terminated_naturally},
          {"rewards", r.rewards}};
}

inline RolloutRecord from_json(const nlohmann::json& j) {
  RolloutRecord r;
  r.iteration = j.at("iteration").get<std::size_t>();
  r.question_id = j.at("question_id").get<QuestionId>();
  const auto& sp = j.at("seed_path");
  r.run_seed = sp.at("run").get<std::uint64_t>();
  r.slot = sp.at("slot").get<std::size_t>();
  r.member = sp.at("member").get<std::size_t>();
  r.trace_seed = sp.at("trace_seed").get<std::uint64_t>();
  for (const auto& t : j.at("tokens")) {
    const std::string origin = t.at("origin").get<std::string>();
    if (origin != "policy" && origin != "env") throw ValidationError("rollout token origin must be policy|env");
    r.tokens.push_back({t.at("id").get<TokenId>(), origin == "policy" ? Origin::Policy : Origin::Env});
  }
  r.terminated_naturally = j.at("terminated_naturally").get<bool>();
  r.rewards = j.at("rewards").get<std::vector<double>>();
  return r;
}

inline void append_rollouts(std::ostream& os, std::size_t iteration, std::uint64_t run_seed,
                            std::span<const RolloutGroup> groups) {
  for (std::size_t s = 0; s < groups.size(); ++s) {
    const RolloutGroup& g = groups[s];
    for (std::size_t i = 0; i < g.size(); ++i) {
      RolloutRecord r;
      r.iteration = iteration;
      r.question_id = g.question_id;
      r.run_seed = run_seed;
      r.slot = s;
      r.member = i;
      r.trace_seed = g.trace_seeds.empty() ? 0 : g.trace_seeds[i];
      r.tokens = g.traces[i].tokens;
      r.terminated_naturally = g.traces[i].terminated_naturally;
      r.rewards = g.rewards[i].estimates;
      os << to_json(r).dump() << '\n';
    }
  }
}

inline std::vector<RolloutRecord> read_rollouts(std::istream& in) {
  std::vector<RolloutRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("rollouts.jsonl line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

/// Training-batch statistics per iteration, recomputed from logged rollouts.
struct ReplayRow {
  std::size_t iteration = 0;
  std::size_t traces = 0;
  double mean_budget_reward = 0.0;  // uniform mean of r_hat over the support
  double mean_final_reward = 0.0;   // r_hat at the largest budget
  double mean_thinking_length = 0.0;
  double natural_fraction = 0.0;
};

inline std::vector<ReplayRow> replay_metrics(std::span<const RolloutRecord> records) {
  std::map<std::size_t, ReplayRow> by_iter;
  for (const auto& r : records) {
    ReplayRow& row = by_iter[r.iteration];
    row.iteration = r.iteration;
    ++row.traces;
    double mean = 0.0;
    for (double v : r.rewards) mean += v;
    if (!r.rewards.empty()) {
      row.mean_budget_reward += mean / static_cast<double>(r.rewards.size());
      row.mean_final_reward += r.rewards.back();
    }
    row.mean_thinking_length += static_cast<double>(r.tokens.size());
    row.natural_fraction += r.terminated_naturally ? 1.0 : 0.0;
  }
  std::vector<ReplayRow> rows;
  for (auto& [it, row] : by_iter) {
    const double n = static_cast<double>(row.traces);
    row.mean_budget_reward /= n;
    row.mean_final_reward /= n;
    row.mean_thinking_length /= n;
    row.natural_fraction /= n;
    rows.push_back(row);
  }
  return rows;
}

inline void write_replay_csv(std::ostream& os, std::span<const ReplayRow> rows) {
  os << "iteration,traces,mean_budget_reward,mean_final_reward,mean_thinking_length,natural_fraction\n";
  for (const auto& r : rows)
    os << r.iteration << ',' << r.traces << ',' << format_real(r.mean_budget_reward) << ','
       << format_real(r.mean_final_reward) << ',' << format_real(r.mean_thinking_length) << ','
       << format_real(r.natural_fraction) << '\n';
}

}  // namespace anytime::app
