#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "anytime/app/config.hpp"
#include "anytime/app/rollout_log.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/diagnostics/accuracy.hpp"
#include "anytime/diagnostics/diagnostics.hpp"
#include "anytime/envs/needle_search.hpp"
#include "anytime/envs/scripted.hpp"
#include "anytime/envs/scripted_io.hpp"
#include "anytime/policy/checkpoint.hpp"
#include "anytime/trainer/training.hpp"

namespace anytime::app {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNonFinite = 3;
inline constexpr int kExitEnumerationCap = 4;

/// Builds the configured environment and calls f(env).
template <typename F>
decltype(auto) with_env(const RunConfig& c, F&& f) {
  if (c.env == "scripted") {
    const ScriptedEnv env(load_scripted_table(c.scripted_table));
    return f(env);
  }
  const NeedleSearch env(c.needle_size, c.budgets.empty() ? 1 : c.budgets.back());
  return f(env);
}

inline fs::path run_root() {
  const char* root = std::getenv("ANYTIME_RUN_ROOT");
  return root && *root ? fs::path(root) : fs::path("runs");
}

/// Creates root/name, or root/name-1, root/name-2, ... if taken. Never reuses a directory.
inline fs::path create_run_dir(const fs::path& root, const std::string& name) {
  fs::create_directories(root);
  for (std::size_t k = 0;; ++k) {
    const fs::path p = root / (k == 0 ? name : name + "-" + std::to_string(k));
    if (fs::create_directory(p)) return p;
  }
}

inline std::string checkpoint_name(std::size_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter_%06zu.bin", iteration);
  return buf;
}

inline void write_metrics_header(std::ostream& os) {
  os << "iteration,anytime_accuracy,final_accuracy,mean_thinking_length,wall_time_s\n";
}

/// wall_time_s is left empty when wall-clock recording is off.
inline void write_metrics_row(std::ostream& os, const MetricsRow& r, bool wall_clock) {
  os << r.iteration << ',' << format_real(r.anytime_accuracy) << ',' << format_real(r.final_accuracy) << ','
     << format_real(r.mean_thinking_length) << ',' << (wall_clock ? format_real(r.wall_time_s) : std::string()) << '\n';
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

/// Trains with `cfg` into a fresh run directory and returns its path. `source_text`
/// is the config file as given; it is stored verbatim next to the resolved keys.
inline fs::path train_run(const RunConfig& cfg, const std::string& source_text, const fs::path& root,
                          const std::string& name, std::ostream& log) {
  const fs::path dir = create_run_dir(root, name);
  write_text(dir / "config.txt", source_text);
  write_text(dir / "resolved_config.txt", render_config(cfg));
  fs::create_directories(dir / "checkpoints");
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  write_metrics_header(metrics);
  std::ofstream rollouts;
  if (cfg.log_rollouts) rollouts.open(dir / "rollouts.jsonl", std::ios::binary);

  TrainingObserver obs;
  obs.on_metrics = [&](const MetricsRow& r) {
    write_metrics_row(metrics, r, cfg.wall_clock);
    metrics.flush();
    log << "iter " << r.iteration << "  anytime " << format_real(r.anytime_accuracy) << "  final "
        << format_real(r.final_accuracy) << "  length " << format_real(r.mean_thinking_length) << '\n';
  };
  obs.on_checkpoint = [&](std::size_t it, const Checkpoint& ck) {
    save_checkpoint((dir / "checkpoints" / checkpoint_name(it)).string(), ck);
  };
  if (cfg.log_rollouts)
    obs.on_groups = [&](std::size_t it, std::span<const RolloutGroup> groups) {
      append_rollouts(rollouts, it, cfg.seed, groups);
    };
  try {
    with_env(cfg, [&](const auto& env) { run_training(env, cfg.trainer(), obs, cfg.wall_clock); });
  } catch (const NonFiniteError& e) {
    write_text(dir / "nonfinite_dump.txt", std::string(e.what()) + "\n" + e.dump());
    throw;
  }
  return dir;
}

/// Evaluation grid: 0..b_m in 16 steps (or every token when b_m < 16).
inline std::vector<std::size_t> default_eval_grid(std::size_t max_budget) {
  const std::size_t step = std::max<std::size_t>(1, max_budget / 16);
  std::vector<std::size_t> grid;
  for (std::size_t b = 0; b <= max_budget; b += step) grid.push_back(b);
  if (grid.back() != max_budget) grid.push_back(max_budget);
  return grid;
}

struct EvalOptions {
  std::string checkpoint;
  std::vector<std::size_t> budgets;  // empty = default grid
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  bool oracle_summary = false;
  std::string label;
  fs::path out_dir = ".";
};

/// curves.csv (config, budget, accuracy) and curve_summary.csv (AUC per prior).
inline void eval_checkpoint(const RunConfig& cfg, const EvalOptions& o) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const BudgetSpec support = cfg.thinking_spec();
  const std::vector<std::size_t> grid = o.budgets.empty() ? default_eval_grid(support.max_budget()) : o.budgets;
  const std::size_t m = o.samples.value_or(cfg.eval_samples);
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  const std::string label = !o.label.empty() ? o.label : !cfg.preset.empty() ? cfg.preset : "run";
  const Summarizer summary = o.oracle_summary ? Summarizer::oracle() : Summarizer::learned(ck.summary);
  with_env(cfg, [&](const auto& env) {
    const auto es = env.spec();
    if (ck.thinking.features() != es.thinking_dim || ck.thinking.actions() != es.action_count ||
        ck.summary.features() != es.summary_dim || ck.summary.actions() != es.answer_count)
      throw ValidationError("checkpoint shape does not match the configured environment");
    const auto questions = eval_questions(env, cfg.eval_questions, seed);
    const AccuracyCurve curve =
        accuracy_curve(env, questions, ck.thinking, summary, grid, support.max_budget(), m, seed, &support, cfg.workers);
    const AccuracyCurve on_support = accuracy_curve(env, questions, ck.thinking, summary, support.budgets(),
                                                    support.max_budget(), m, seed, &support, cfg.workers);
    fs::create_directories(o.out_dir);
    std::ofstream curves(o.out_dir / "curves.csv", std::ios::binary);
    write_curves_header(curves);
    write_curve_rows(curves, label, curve);
    std::ofstream summary_csv(o.out_dir / "curve_summary.csv", std::ios::binary);
    write_curve_summary_header(summary_csv);
    write_curve_summary_row(summary_csv, label, "grid-uniform", curve_auc_uniform(curve), on_support.final_accuracy);
    for (PriorKind k : {PriorKind::Base, PriorKind::Uniform, PriorKind::Linear}) {
      const BudgetSpec p = make_prior(k, {support.budgets().begin(), support.budgets().end()});
      write_curve_summary_row(summary_csv, label, std::string(to_string(k)), curve_auc(on_support, p.probabilities()),
                              on_support.final_accuracy);
    }
  });
}

struct DiagnoseOptions {
  std::string checkpoint;
  std::size_t groups = 512;
  std::optional<std::uint64_t> seed;
  std::size_t credit_groups = 4;  // groups written to credit.csv
  std::size_t bin_width = 0;      // 0 = budget segments
  fs::path out_dir = ".";
};

/// correlation.csv, variance.csv and credit.csv for a checkpoint.
inline void diagnose_checkpoint(const RunConfig& cfg, const DiagnoseOptions& o) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const BudgetSpec spec = cfg.thinking_spec();
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  BrpoConfig brpo;
  brpo.lambda = cfg.lambda;
  brpo.leave_one_out = cfg.leave_one_out;
  const Binning binning{o.bin_width};
  with_env(cfg, [&](const auto& env) {
    const auto groups = collect_groups(env, ck.thinking, Summarizer::learned(ck.summary), spec, cfg.group_size,
                                       cfg.summary_samples, o.groups, seed, cfg.workers);
    const std::span<const RolloutGroup> gs(groups);
    fs::create_directories(o.out_dir);
    {
      std::ofstream out(o.out_dir / "correlation.csv", std::ios::binary);
      const auto rows = baseline_correlations(gs, spec, brpo.lambda, brpo.leave_one_out, binning);
      write_correlation_csv(out, rows);
    }
    {
      std::ofstream out(o.out_dir / "variance.csv", std::ios::binary);
      const AdvantageMode modes[] = {AdvantageMode::BRPO, AdvantageMode::V2Only, AdvantageMode::GRPO};
      const auto rows = normalized_variance(gs, spec, brpo, modes, binning);
      write_variance_csv(out, rows);
    }
    {
      std::ofstream out(o.out_dir / "credit.csv", std::ios::binary);
      std::vector<LabelledCredit> profiles;
      for (std::size_t g = 0; g < std::min(o.credit_groups, groups.size()); ++g)
        for (std::size_t i = 0; i < groups[g].size(); ++i)
          profiles.push_back({g, i, credit_profile(groups[g].rewards, i, spec, brpo)});
      write_credit_csv(out, profiles);
    }
  });
}

inline void replay_rollouts(const fs::path& jsonl, const fs::path& out_csv) {
  std::ifstream in(jsonl, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + jsonl.string());
  const auto records = read_rollouts(in);
  const auto rows = replay_metrics(records);
  std::ofstream out(out_csv, std::ios::binary);
  write_replay_csv(out, rows);
}

}  // namespace anytime::app
