#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "anytime/advantage/brpo.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/core/parallel.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/diagnostics/accuracy.hpp"
#include "anytime/envs/environment.hpp"
#include "anytime/policy/checkpoint.hpp"
#include "anytime/policy/linear_softmax.hpp"
#include "anytime/rollout/rollout.hpp"
#include "anytime/trainer/gradients.hpp"
#include "anytime/trainer/length_penalty.hpp"
#include "anytime/trainer/optimizer.hpp"

namespace anytime {

struct TrainerConfig {
  std::size_t iterations = 300;
  std::size_t batch_questions = 32;
  std::size_t group_size = 8;        // G
  std::size_t summary_samples = 4;   // K
  std::size_t summary_group = 4;     // S
  std::size_t eval_samples = 16;     // M
  std::size_t eval_questions = 256;
  std::size_t eval_every = 50;

  /// Prior used for thinking returns and the prior the summary is trained under (P').
  BudgetSpec thinking_spec = make_prior(PriorKind::Uniform, {8, 16, 24, 32});
  BudgetSpec summary_spec = make_prior(PriorKind::Uniform, {8, 16, 24, 32});
  BrpoConfig brpo;
  RewardShaping shaping;
  bool train_summary = true;

  OptimizerKind optimizer = OptimizerKind::AdaptiveMoment;
  double thinking_lr = 0.02;
  double summary_lr = 0.02;
  SurrogateConfig thinking_surrogate;
  SurrogateConfig summary_surrogate;
  std::size_t inner_epochs = 1;

  std::uint64_t seed = 1;
  std::size_t workers = 1;

  void validate() const {
    if (batch_questions < 1) throw ValidationError("batch_questions must be >= 1");
    if (group_size < 1) throw ValidationError("group_size must be >= 1");
    if (summary_samples < 1) throw ValidationError("summary_samples must be >= 1");
    if (train_summary && summary_group < 2) throw ValidationError("summary_group must be >= 2");
    if (eval_samples < 1) throw ValidationError("eval_samples must be >= 1");
    if (eval_every < 1) throw ValidationError("eval_every must be >= 1");
    if (inner_epochs < 1) throw ValidationError("inner_epochs must be >= 1");
    if (!(thinking_lr >= 0.0) || !(summary_lr >= 0.0)) throw ValidationError("step sizes must be nonnegative");
    if (group_size < 2 && brpo.leave_one_out) throw ValidationError("leave_one_out needs group_size >= 2");
    const auto a = thinking_spec.budgets();
    const auto b = summary_spec.budgets();
    if (!std::equal(a.begin(), a.end(), b.begin(), b.end()))
      throw ValidationError("thinking and summary priors must share the budget support");
    brpo.validate();
    thinking_surrogate.validate();
    summary_surrogate.validate();
  }
};

struct MetricsRow {
  std::size_t iteration = 0;
  double anytime_accuracy = 0.0;
  double final_accuracy = 0.0;
  double mean_thinking_length = 0.0;
  double wall_time_s = 0.0;
};

/// Callbacks for run persistence; any may be empty.
struct TrainingObserver {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(std::size_t iteration, const Checkpoint&)> on_checkpoint;
  std::function<void(std::size_t iteration, std::span<const RolloutGroup>)> on_groups;
};

struct TrainingResult {
  Checkpoint final;
  std::vector<MetricsRow> metrics;
};

/// Anytime accuracy (uniform over the training support), final accuracy at b_m and
/// mean thinking length, with the learned summary.
template <Environment Env>
MetricsRow evaluate_policies(const Env& env, const Checkpoint& ckpt, const TrainerConfig& cfg) {
  const auto questions = eval_questions(env, cfg.eval_questions, cfg.seed);
  const auto budgets = cfg.thinking_spec.budgets();
  const AccuracyCurve curve =
      accuracy_curve(env, questions, ckpt.thinking, Summarizer::learned(ckpt.summary), budgets,
                     cfg.thinking_spec.max_budget(), cfg.eval_samples, cfg.seed, &cfg.thinking_spec, cfg.workers);
  MetricsRow row;
  row.anytime_accuracy = curve_auc_uniform(curve);
  row.final_accuracy = curve.final_accuracy;
  row.mean_thinking_length = curve.mean_thinking_length;
  return row;
}

/// Rollout groups for one iteration. Slot s draws its question and traces from
/// derive(seed, {iteration, s}).
template <Environment Env>
std::vector<RolloutGroup> collect_batch(const Env& env, const Checkpoint& ckpt, const TrainerConfig& cfg,
                                        std::size_t iteration) {
  std::vector<RolloutGroup> groups(cfg.batch_questions);
  const Summarizer summary = Summarizer::learned(ckpt.summary);
  parallel_for(cfg.batch_questions, cfg.workers, [&](std::size_t s) {
    const std::uint64_t slot_seed = derive_seed(cfg.seed, {iteration, s});
    const QuestionId q = env.sample_question(slot_seed);
    groups[s] = collect_group(env, q, ckpt.thinking, summary, cfg.thinking_spec, cfg.group_size,
                              cfg.summary_samples, slot_seed);
  });
  return groups;
}

/// Replays `batch` for `epochs` updates; epoch 0 is the plain policy gradient.
inline void optimise(PolicyParams& params, const ScoreBatch& batch, OptimizerState& state, double lr,
                     const SurrogateConfig& surrogate, std::size_t epochs) {
  for (std::size_t e = 0; e < epochs; ++e) {
    const GradientEstimate g = surrogate_gradient(batch, params, surrogate);
    apply_update(params, g.values, state, lr);
  }
}

/// Decoupled training loop: each iteration collects a batch, updates the thinking
/// policy with BRPO/GRPO advantages under the thinking prior, then the summary
/// policy under its own prior. Evaluates (and checkpoints) at iteration 0, every
/// `eval_every` iterations and at the end.
template <Environment Env>
TrainingResult run_training(const Env& env, const TrainerConfig& cfg, const TrainingObserver& observer = {},
                            bool record_wall_time = true) {
  cfg.validate();
  const EnvSpec es = env.spec();
  if (cfg.thinking_spec.max_budget() > es.max_length)
    throw ValidationError("largest budget exceeds the environment's max thinking length");
  TrainingResult result;
  Checkpoint ckpt{PolicyParams(es.thinking_dim, es.action_count), PolicyParams(es.summary_dim, es.answer_count)};
  OptimizerState thinking_opt(cfg.optimizer);
  OptimizerState summary_opt(cfg.optimizer);
  const auto start = std::chrono::steady_clock::now();

  auto evaluate = [&](std::size_t iteration) {
    MetricsRow row = evaluate_policies(env, ckpt, cfg);
    row.iteration = iteration;
    if (record_wall_time)
      row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.metrics.push_back(row);
    if (observer.on_metrics) observer.on_metrics(row);
    if (observer.on_checkpoint) observer.on_checkpoint(iteration, ckpt);
  };

  evaluate(0);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const auto groups = collect_batch(env, ckpt, cfg, it);
    if (observer.on_groups) observer.on_groups(it, groups);
    const ScoreBatch thinking_terms =
        thinking_batch(env, std::span<const RolloutGroup>(groups), cfg.thinking_spec, cfg.brpo, ckpt.thinking,
                       cfg.shaping, cfg.workers);
    std::optional<ScoreBatch> summary_terms;
    if (cfg.train_summary)
      summary_terms = summary_batch(env, std::span<const RolloutGroup>(groups), cfg.summary_spec, ckpt.summary,
                                    cfg.summary_group, cfg.workers);
    optimise(ckpt.thinking, thinking_terms, thinking_opt, cfg.thinking_lr, cfg.thinking_surrogate,
             cfg.thinking_surrogate.kind == Surrogate::PlainPG ? 1 : cfg.inner_epochs);
    if (summary_terms)
      optimise(ckpt.summary, *summary_terms, summary_opt, cfg.summary_lr, cfg.summary_surrogate,
               cfg.summary_surrogate.kind == Surrogate::PlainPG ? 1 : cfg.inner_epochs);
    if (it % cfg.eval_every == 0 || it == cfg.iterations) evaluate(it);
  }
  result.final = ckpt;
  return result;
}

}  // namespace anytime
