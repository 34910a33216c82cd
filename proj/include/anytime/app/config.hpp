#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anytime/advantage/brpo.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/trainer/gradients.hpp"
#include "anytime/trainer/length_penalty.hpp"
#include "anytime/trainer/optimizer.hpp"
#include "anytime/trainer/training.hpp"

namespace anytime::app {

/// Everything a run needs, in the flat key space of the config file.
struct RunConfig {
  std::string preset;

  std::string env = "needle";  // needle | scripted
  std::size_t needle_size = 16;
  std::string scripted_table;
  std::vector<std::size_t> budgets{8, 16, 24, 32};

  std::string thinking_prior = "uniform";  // base | uniform | linear | custom
  std::vector<double> prior_probs;         // custom only
  std::string summary_prior = "uniform";   // coupled | base | uniform | linear
  AdvantageMode advantage_mode = AdvantageMode::BRPO;
  double lambda = 0.5;
  bool leave_one_out = false;
  bool train_summary = true;

  std::size_t iterations = 300;
  std::size_t batch_questions = 32;
  std::size_t group_size = 8;
  std::size_t summary_samples = 4;
  std::size_t summary_group = 4;
  std::size_t eval_samples = 16;
  std::size_t eval_questions = 256;
  std::size_t eval_every = 50;

  OptimizerKind optimizer = OptimizerKind::AdaptiveMoment;
  double thinking_lr = 0.02;
  double summary_lr = 0.02;
  Surrogate surrogate = Surrogate::PlainPG;
  Surrogate summary_surrogate = Surrogate::PlainPG;
  double clip_low = 0.2;
  double clip_high = 0.28;
  std::size_t inner_epochs = 1;

  LengthPenalty length_penalty = LengthPenalty::None;
  double length_penalty_coef = 0.2;

  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool log_rollouts = false;
  bool wall_clock = true;
  std::size_t enum_cap = 1'000'000;

  BudgetSpec thinking_spec() const {
    if (thinking_prior == "custom") return BudgetSpec(budgets, prior_probs);
    return make_prior(parse_prior_kind(thinking_prior), budgets);
  }

  BudgetSpec summary_spec() const {
    if (summary_prior == "coupled") return thinking_spec();
    return make_prior(parse_prior_kind(summary_prior), budgets);
  }

  TrainerConfig trainer() const {
    TrainerConfig t;
    t.iterations = iterations;
    t.batch_questions = batch_questions;
    t.group_size = group_size;
    t.summary_samples = summary_samples;
    t.summary_group = summary_group;
    t.eval_samples = eval_samples;
    t.eval_questions = eval_questions;
    t.eval_every = eval_every;
    t.thinking_spec = thinking_spec();
    t.summary_spec = summary_spec();
    t.brpo.lambda = lambda;
    t.brpo.leave_one_out = leave_one_out;
    t.brpo.mode = advantage_mode;
    t.shaping.variant = length_penalty;
    t.shaping.coef = length_penalty_coef;
    t.train_summary = train_summary;
    t.optimizer = optimizer;
    t.thinking_lr = thinking_lr;
    t.summary_lr = summary_lr;
    t.thinking_surrogate = {surrogate, clip_low, clip_high};
    t.summary_surrogate = {summary_surrogate, clip_low, clip_high};
    t.inner_epochs = inner_epochs;
    t.seed = seed;
    t.workers = workers;
    return t;
  }

  void validate() const {
    if (env != "needle" && env != "scripted") throw ValidationError("env: expected needle|scripted, got '" + env + "'");
    if (env == "needle" && needle_size < 1) throw ValidationError("needle_size: must be >= 1");
    if (env == "scripted" && scripted_table.empty()) throw ValidationError("scripted_table: required when env = scripted");
    if (thinking_prior == "custom" && prior_probs.size() != budgets.size())
      throw ValidationError("prior_probs: needs one probability per budget");
    if (workers < 1) throw ValidationError("workers: must be >= 1");
    if (enum_cap < 1) throw ValidationError("enum_cap: must be >= 1");
    trainer().validate();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] inline void bad_value(std::string_view key, std::string_view what, std::string_view value) {
  throw ValidationError(std::string(key) + ": expected " + std::string(what) + ", got '" + std::string(value) + "'");
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, "a nonnegative integer", v);
  return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used != v.size()) bad_value(key, "a real number", v);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, "a real number", v);
  }
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad_value(key, "true|false", v);
}

template <typename F>
auto wrap(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(key) + ": " + e.what());
  }
}

}  // namespace detail

/// Sets one typed key. Unknown keys and malformed values raise ValidationError
/// naming the key.
inline void set_key(RunConfig& c, std::string_view key, std::string_view raw) {
  using namespace detail;
  const std::string v = trim(raw);
  auto size = [&] { return parse_unsigned<std::size_t>(key, v); };
  if (key == "preset") c.preset = v;
  else if (key == "env") c.env = v;
  else if (key == "needle_size") c.needle_size = size();
  else if (key == "scripted_table") c.scripted_table = v;
  else if (key == "budgets") {
    c.budgets.clear();
    for (const auto& b : split_list(v)) c.budgets.push_back(parse_unsigned<std::size_t>(key, b));
  } else if (key == "thinking_prior") {
    if (v != "custom") wrap(key, [&] { return parse_prior_kind(v); });
    c.thinking_prior = v;
  } else if (key == "prior_probs") {
    c.prior_probs.clear();
    for (const auto& p : split_list(v)) c.prior_probs.push_back(parse_real(key, p));
  } else if (key == "summary_prior") {
    if (v != "coupled") wrap(key, [&] { return parse_prior_kind(v); });
    c.summary_prior = v;
  } else if (key == "advantage_mode") c.advantage_mode = wrap(key, [&] { return parse_advantage_mode(v); });
  else if (key == "lambda") c.lambda = parse_real(key, v);
  else if (key == "leave_one_out") c.leave_one_out = parse_bool(key, v);
  else if (key == "train_summary") c.train_summary = parse_bool(key, v);
  else if (key == "iterations") c.iterations = size();
  else if (key == "batch_questions") c.batch_questions = size();
  else if (key == "group_size") c.group_size = size();
  else if (key == "summary_samples") c.summary_samples = size();
  else if (key == "summary_group") c.summary_group = size();
  else if (key == "eval_samples") c.eval_samples = size();
  else if (key == "eval_questions") c.eval_questions = size();
  else if (key == "eval_every") c.eval_every = size();
  else if (key == "optimizer") c.optimizer = wrap(key, [&] { return parse_optimizer_kind(v); });
  else if (key == "thinking_lr") c.thinking_lr = parse_real(key, v);
  else if (key == "summary_lr") c.summary_lr = parse_real(key, v);
  else if (key == "surrogate") c.surrogate = wrap(key, [&] { return parse_surrogate(v); });
  else if (key == "summary_surrogate") c.summary_surrogate = wrap(key, [&] { return parse_surrogate(v); });
  else if (key == "clip_low") c.clip_low = parse_real(key, v);
  else if (key == "clip_high") c.clip_high = parse_real(key, v);
  else if (key == "inner_epochs") c.inner_epochs = size();
  else if (key == "length_penalty") c.length_penalty = wrap(key, [&] { return parse_length_penalty(v); });
  else if (key == "length_penalty_coef") c.length_penalty_coef = parse_real(key, v);
  else if (key == "seed") c.seed = parse_unsigned<std::uint64_t>(key, v);
  else if (key == "workers") c.workers = size();
  else if (key == "log_rollouts") c.log_rollouts = parse_bool(key, v);
  else if (key == "wall_clock") c.wall_clock = parse_bool(key, v);
  else if (key == "enum_cap") c.enum_cap = size();
  else throw ValidationError("unknown key '" + std::string(key) + "'");
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Named configurations; each is a list of key overrides on the defaults.
inline const std::map<std::string, KeyValues>& presets() {
  static const std::map<std::string, KeyValues> table = {
      {"anytime-uniform", {{"thinking_prior", "uniform"}, {"advantage_mode", "brpo"}, {"summary_prior", "uniform"}}},
      {"anytime-linear", {{"thinking_prior", "linear"}, {"advantage_mode", "brpo"}, {"summary_prior", "uniform"}}},
      {"anytime-base", {{"thinking_prior", "base"}, {"advantage_mode", "brpo"}, {"summary_prior", "uniform"}}},
      {"grpo-baseline", {{"thinking_prior", "base"}, {"advantage_mode", "grpo"}, {"summary_prior", "coupled"}}},
      {"ablation-dense-rewards",
       {{"thinking_prior", "linear"}, {"advantage_mode", "v2only"}, {"summary_prior", "coupled"}}},
      {"ablation-decoupled", {{"thinking_prior", "base"}, {"advantage_mode", "grpo"}, {"summary_prior", "uniform"}}},
      {"ablation-brpo", {{"thinking_prior", "base"}, {"advantage_mode", "brpo"}, {"summary_prior", "coupled"}}},
      {"ablation-length-penalty-v1",
       {{"thinking_prior", "base"}, {"advantage_mode", "grpo"}, {"summary_prior", "coupled"}, {"length_penalty", "v1"}}},
      {"ablation-length-penalty-v2",
       {{"thinking_prior", "base"}, {"advantage_mode", "grpo"}, {"summary_prior", "coupled"}, {"length_penalty", "v2"}}},
  };
  return table;
}

inline void apply_preset(RunConfig& c, std::string_view name) {
  const auto it = presets().find(std::string(name));
  if (it == presets().end()) throw ValidationError("preset: unknown preset '" + std::string(name) + "'");
  for (const auto& [k, v] : it->second) set_key(c, k, v);
  c.preset = std::string(name);
}

/// `key = value` lines; '#' starts a comment. Duplicate keys: last one wins.
inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + t + "'");
    kv.emplace_back(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  return kv;
}

/// "key=value" as given on the command line.
inline std::pair<std::string, std::string> parse_override(std::string_view s) {
  const auto eq = s.find('=');
  if (eq == std::string_view::npos) throw ValidationError("override '" + std::string(s) + "' is not key=value");
  return {detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1))};
}

/// Preset first (file key or `preset_override`), then the remaining file keys, then overrides.
inline RunConfig resolve_config(const KeyValues& file, const KeyValues& overrides = {},
                                std::string_view preset_override = {}) {
  RunConfig c;
  std::string preset(preset_override);
  if (preset.empty())
    for (const auto& [k, v] : file)
      if (k == "preset") preset = v;
  if (!preset.empty()) apply_preset(c, preset);
  for (const auto& [k, v] : file)
    if (k != "preset") set_key(c, k, v);
  for (const auto& [k, v] : overrides) set_key(c, k, v);
  c.validate();
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path, const KeyValues& overrides = {},
                             std::string_view preset_override = {}) {
  std::istringstream in(read_text_file(path));
  return resolve_config(parse_key_values(in), overrides, preset_override);
}

namespace detail {
template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream ss;
  ss.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) ss << (i ? "," : "") << xs[i];
  return ss.str();
}
inline std::string real(double d) {
  std::ostringstream ss;
  ss.precision(17);
  ss << d;
  return ss.str();
}
}  // namespace detail

/// Every key with its resolved value; loading this text back gives the same config.
inline std::string render_config(const RunConfig& c) {
  using detail::join;
  using detail::real;
  std::ostringstream o;
  auto b = [](bool x) { return x ? "true" : "false"; };
  if (!c.preset.empty()) o << "preset = " << c.preset << "\n";
  o << "env = " << c.env << "\n"
    << "needle_size = " << c.needle_size << "\n";
  if (!c.scripted_table.empty()) o << "scripted_table = " << c.scripted_table << "\n";
  o << "budgets = " << join(c.budgets) << "\n"
    << "thinking_prior = " << c.thinking_prior << "\n";
  if (!c.prior_probs.empty()) o << "prior_probs = " << join(c.prior_probs) << "\n";
  o << "summary_prior = " << c.summary_prior << "\n"
    << "advantage_mode = " << to_string(c.advantage_mode) << "\n"
    << "lambda = " << real(c.lambda) << "\n"
    << "leave_one_out = " << b(c.leave_one_out) << "\n"
    << "train_summary = " << b(c.train_summary) << "\n"
    << "iterations = " << c.iterations << "\n"
    << "batch_questions = " << c.batch_questions << "\n"
    << "group_size = " << c.group_size << "\n"
    << "summary_samples = " << c.summary_samples << "\n"
    << "summary_group = " << c.summary_group << "\n"
    << "eval_samples = " << c.eval_samples << "\n"
    << "eval_questions = " << c.eval_questions << "\n"
    << "eval_every = " << c.eval_every << "\n"
    << "optimizer = " << to_string(c.optimizer) << "\n"
    << "thinking_lr = " << real(c.thinking_lr) << "\n"
    << "summary_lr = " << real(c.summary_lr) << "\n"
    << "surrogate = " << to_string(c.surrogate) << "\n"
    << "summary_surrogate = " << to_string(c.summary_surrogate) << "\n"
    << "clip_low = " << real(c.clip_low) << "\n"
    << "clip_high = " << real(c.clip_high) << "\n"
    << "inner_epochs = " << c.inner_epochs << "\n"
    << "length_penalty = " << to_string(c.length_penalty) << "\n"
    << "length_penalty_coef = " << real(c.length_penalty_coef) << "\n"
    << "seed = " << c.seed << "\n"
    << "workers = " << c.workers << "\n"
    << "log_rollouts = " << b(c.log_rollouts) << "\n"
    << "wall_clock = " << b(c.wall_clock) << "\n"
    << "enum_cap = " << c.enum_cap << "\n";
  return o.str();
}

}  // namespace anytime::app
