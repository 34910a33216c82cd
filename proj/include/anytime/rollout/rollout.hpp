#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/core/parallel.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/core/types.hpp"
#include "anytime/envs/environment.hpp"
#include "anytime/policy/linear_softmax.hpp"

namespace anytime {

struct RolloutConfig {
  std::size_t group_size = 8;        // G
  std::size_t summary_samples = 4;   // K, training estimates
  std::size_t eval_samples = 16;     // M, evaluation estimates
  std::uint64_t seed = 1;

  void validate() const {
    if (group_size < 1) throw ValidationError("group_size must be >= 1");
    if (summary_samples < 1) throw ValidationError("summary_samples must be >= 1");
    if (eval_samples < 1) throw ValidationError("eval_samples must be >= 1");
  }
};

/// Either a learned linear-softmax summary policy or the optimal-summary oracle.
/// Non-owning: the parameters must outlive the summarizer.
class Summarizer {
 public:
  static Summarizer learned(const PolicyParams& params) { return Summarizer(&params); }
  static Summarizer oracle() { return Summarizer(nullptr); }

  bool is_oracle() const noexcept { return params_ == nullptr; }
  const PolicyParams& params() const { return *params_; }

 private:
  explicit Summarizer(const PolicyParams* p) : params_(p) {}
  const PolicyParams* params_;
};

/// Samples z ~ pi_theta(.|x). Probes are answered by the environment; a probe that
/// lands exactly on the cap keeps no feedback, so |z| <= max_length always.
template <Environment Env>
ThinkingTrace sample_trace(const Env& env, const typename Env::Instance& inst, QuestionId question,
                           const PolicyParams& thinking, std::size_t max_length, Rng& rng) {
  ThinkingTrace trace;
  trace.question_id = question;
  trace.tokens.reserve(max_length);
  const TokenId stop = env.spec().stop_token;
  while (trace.tokens.size() < max_length) {
    const auto dist = action_distribution(thinking, to_sparse(env.thinking_features(inst, trace.tokens)));
    const auto action = static_cast<TokenId>(sample_from(dist, rng.uniform()));
    trace.tokens.push_back({action, Origin::Policy});
    if (action == stop) {
      trace.terminated_naturally = true;
      break;
    }
    if (trace.tokens.size() >= max_length) break;
    if (auto fb = env.respond(inst, action)) trace.tokens.push_back(*fb);
  }
  return trace;
}

/// One summary draw shared across nested views of a trace: the inverse-CDF
/// uniform for a learned summary, or answer priorities for the oracle. Sharing
/// the draw across budgets (common random numbers) makes identical views score
/// identically and keeps oracle estimates monotone in the budget.
struct SummaryDraw {
  double u = 0.0;
  std::vector<double> priority;
};

inline std::vector<SummaryDraw> make_summary_draws(std::uint64_t trace_seed, std::size_t count,
                                                   std::size_t answers, bool oracle) {
  std::vector<SummaryDraw> draws(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(trace_seed, {seed_tag::kSummary, i}));
    draws[i].u = rng.uniform();
    if (oracle) {
      draws[i].priority.resize(answers);
      for (double& p : draws[i].priority) p = rng.uniform();
    }
  }
  return draws;
}

/// Mean reward of the shared draws on one view.
template <Environment Env>
double score_view(const Env& env, const typename Env::Instance& inst, const TruncatedView& view,
                  const Summarizer& summary, std::span<const SummaryDraw> draws) {
  double total = 0.0;
  if (summary.is_oracle()) {
    for (const auto& d : draws) total += env.reward(inst, view, env.oracle_answer(inst, view, d.priority));
  } else {
    const auto dist = action_distribution(summary.params(), env.summary_features(inst, view));
    for (const auto& d : draws) total += env.reward(inst, view, sample_from(dist, d.u));
  }
  return total / static_cast<double>(draws.size());
}

/// r_hat_j for every budget on the support, all from the one stored trace.
template <Environment Env>
BudgetRewards estimate_budget_rewards(const Env& env, const typename Env::Instance& inst, const ThinkingTrace& trace,
                                      const BudgetSpec& spec, const Summarizer& summary, std::size_t k,
                                      std::uint64_t trace_seed) {
  if (k < 1) throw ValidationError("summary sample count must be >= 1");
  const auto draws = make_summary_draws(trace_seed, k, env.spec().answer_count, summary.is_oracle());
  BudgetRewards out;
  out.samples_per_budget = k;
  out.estimates.resize(spec.m());
  for (std::size_t j = 1; j <= spec.m(); ++j)
    out.estimates[j - 1] = score_view(env, inst, truncate(trace, spec, j), summary, draws);
  return out;
}

/// Returns the probe that received HIT (needle search) or the table's best answer;
/// otherwise a uniform draw over the feasible answers.
template <Environment Env>
std::size_t oracle_summary(const Env& env, const typename Env::Instance& inst, const TruncatedView& view, Rng& rng) {
  std::vector<double> priority(env.spec().answer_count);
  for (double& p : priority) p = rng.uniform();
  return env.oracle_answer(inst, view, priority);
}

inline std::uint64_t trace_seed(std::uint64_t group_seed, std::size_t member) {
  return derive_seed(group_seed, {seed_tag::kTrace, member});
}

/// G independent traces for one question with their budget rewards. Member g is
/// driven only by trace_seed(group_seed, g), so members can run in any order.
template <Environment Env>
RolloutGroup collect_group(const Env& env, QuestionId question, const PolicyParams& thinking,
                           const Summarizer& summary, const BudgetSpec& spec, std::size_t group_size,
                           std::size_t k, std::uint64_t group_seed, std::size_t workers = 1) {
  const auto inst = env.instance(question);
  RolloutGroup group;
  group.question_id = question;
  group.seed = group_seed;
  group.traces.resize(group_size);
  group.rewards.resize(group_size);
  group.trace_seeds.resize(group_size);
  parallel_for(group_size, workers, [&](std::size_t g) {
    const std::uint64_t seed = trace_seed(group_seed, g);
    Rng rng(seed);
    group.trace_seeds[g] = seed;
    group.traces[g] = sample_trace(env, inst, question, thinking, spec.max_budget(), rng);
    group.rewards[g] = estimate_budget_rewards(env, inst, group.traces[g], spec, summary, k, seed);
  });
  return group;
}

}  // namespace anytime
