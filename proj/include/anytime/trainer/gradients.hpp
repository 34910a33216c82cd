#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anytime/advantage/brpo.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/core/parallel.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/core/types.hpp"
#include "anytime/envs/environment.hpp"
#include "anytime/policy/linear_softmax.hpp"
#include "anytime/rollout/rollout.hpp"
#include "anytime/trainer/length_penalty.hpp"

namespace anytime {

enum class Surrogate { PlainPG, ClippedRatio };

inline Surrogate parse_surrogate(std::string_view s) {
  if (s == "plain") return Surrogate::PlainPG;
  if (s == "clipped") return Surrogate::ClippedRatio;
  throw ValidationError("unknown surrogate '" + std::string(s) + "' (expected plain|clipped)");
}

inline std::string_view to_string(Surrogate s) { return s == Surrogate::PlainPG ? "plain" : "clipped"; }

struct SurrogateConfig {
  Surrogate kind = Surrogate::PlainPG;
  double clip_low = 0.2;
  double clip_high = 0.28;

  void validate() const {
    if (kind == Surrogate::ClippedRatio && !(clip_low > 0.0 && clip_high > 0.0))
      throw ValidationError("clip range must be positive for the clipped surrogate");
  }
};

struct GradientEstimate {
  std::vector<double> values;
  std::size_t samples = 0;  // traces averaged over
};

/// One score-function term: weight * grad log pi(action | features).
struct ScoreTerm {
  SparseFeatures features;
  std::uint32_t action = 0;
  double weight = 0.0;
  double old_log_prob = 0.0;
};

/// Terms grouped by trace; the estimate is the mean over traces of the per-trace
/// sum, so long traces are not down-weighted per token.
struct ScoreBatch {
  std::vector<std::vector<ScoreTerm>> traces;
};

/// Gradient of the (possibly clipped) surrogate at `params`. With PlainPG, or on
/// the first epoch where the ratio is 1, this is sum weight * grad log pi.
inline GradientEstimate surrogate_gradient(const ScoreBatch& batch, const PolicyParams& params,
                                           const SurrogateConfig& surrogate = {}) {
  GradientEstimate est;
  est.values.assign(params.size(), 0.0);
  est.samples = batch.traces.size();
  if (batch.traces.empty()) return est;
  const double norm = 1.0 / static_cast<double>(batch.traces.size());
  for (const auto& trace : batch.traces) {
    for (const auto& term : trace) {
      if (term.weight == 0.0) continue;
      const auto dist = action_distribution(params, term.features);
      double coef = term.weight;
      if (surrogate.kind == Surrogate::ClippedRatio) {
        const double ratio = std::exp(std::log(dist.probs[term.action]) - term.old_log_prob);
        const bool clipped = (term.weight > 0.0 && ratio > 1.0 + surrogate.clip_high) ||
                             (term.weight < 0.0 && ratio < 1.0 - surrogate.clip_low);
        coef = clipped ? 0.0 : ratio * term.weight;
      }
      if (coef != 0.0) add_log_prob_grad(dist, term.features, term.action, coef * norm, est.values);
    }
  }
  return est;
}

struct RewardShaping {
  LengthPenalty variant = LengthPenalty::None;
  double coef = 0.2;
};

/// Applies the length penalty to every budget estimate of every member. A
/// K-sample estimate r_hat of a trace with fixed length scales by the same factor
/// as each of its 0/1 rewards.
inline std::vector<BudgetRewards> shaped_rewards(const RolloutGroup& group, const RewardShaping& shaping,
                                                 std::size_t max_length) {
  std::vector<BudgetRewards> out = group.rewards;
  if (shaping.variant == LengthPenalty::None) return out;
  std::optional<LengthStats> stats;
  if (shaping.variant == LengthPenalty::V2) {
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (group.rewards[i].estimates.back() <= 0.0) continue;
      const double len = static_cast<double>(group.traces[i].size());
      sum += len;
      sum2 += len * len;
      ++n;
    }
    if (n > 0) {
      const double mean = sum / static_cast<double>(n);
      stats = LengthStats{mean, std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - mean * mean))};
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double factor =
        length_penalty_reward(1.0, group.traces[i].size(), max_length, shaping.variant, shaping.coef, stats);
    for (double& r : out[i].estimates) r *= factor;
  }
  return out;
}

/// Score terms for the thinking policy: one per policy-origin token, weighted by
/// its BRPO/GRPO advantage.
template <Environment Env>
ScoreBatch thinking_batch(const Env& env, std::span<const RolloutGroup> groups, const BudgetSpec& spec,
                          const BrpoConfig& brpo, const PolicyParams& thinking, const RewardShaping& shaping = {},
                          std::size_t workers = 1) {
  brpo.validate();
  std::vector<std::size_t> offsets(groups.size() + 1, 0);
  for (std::size_t g = 0; g < groups.size(); ++g) offsets[g + 1] = offsets[g] + groups[g].size();
  ScoreBatch batch;
  batch.traces.resize(offsets.back());
  parallel_for(groups.size(), workers, [&](std::size_t g) {
    const RolloutGroup& group = groups[g];
    const auto inst = env.instance(group.question_id);
    RolloutGroup scored = group;
    scored.rewards = shaped_rewards(group, shaping, spec.max_budget());
    for (std::size_t i = 0; i < group.size(); ++i) {
      const ThinkingTrace& trace = group.traces[i];
      const AdvantageProfile profile = advantage_profile(trace, scored, spec, brpo, i);
      auto& terms = batch.traces[offsets[g] + i];
      terms.reserve(profile.records.size());
      for (const auto& rec : profile.records) {
        const std::size_t pos = rec.position - 1;
        ScoreTerm term;
        term.features =
            to_sparse(env.thinking_features(inst, std::span<const Token>(trace.tokens.data(), pos)));
        term.action = trace.tokens[pos].id;
        term.weight = rec.advantage;
        term.old_log_prob = std::log(action_distribution(thinking, term.features).probs[term.action]);
        terms.push_back(std::move(term));
      }
    }
  });
  return batch;
}

/// Monte Carlo estimate of grad_theta J_anytime (per-trace mean of
/// sum_t grad log pi(z_t) * A_t).
template <Environment Env>
GradientEstimate thinking_gradient(const Env& env, std::span<const RolloutGroup> groups, const BudgetSpec& spec,
                                   const BrpoConfig& brpo, const PolicyParams& thinking,
                                   const RewardShaping& shaping = {}, std::size_t workers = 1) {
  return surrogate_gradient(thinking_batch(env, groups, spec, brpo, thinking, shaping, workers), thinking);
}

/// Score terms for the summary policy. For every trace and budget with P'_j > 0,
/// S answers are drawn from pi_phi(.|x, z_<=b_j) and centred on their group mean.
/// Terms carry P'_j (r_s - mean) / (S - 1): the (S - 1) normaliser equals the
/// leave-one-out baseline and keeps the estimator unbiased.
template <Environment Env>
ScoreBatch summary_batch(const Env& env, std::span<const RolloutGroup> groups, const BudgetSpec& summary_spec,
                         const PolicyParams& summary, std::size_t group_size, std::size_t workers = 1) {
  if (group_size < 2) throw ValidationError("summary group size S must be >= 2");
  std::vector<std::size_t> offsets(groups.size() + 1, 0);
  for (std::size_t g = 0; g < groups.size(); ++g) offsets[g + 1] = offsets[g] + groups[g].size();
  ScoreBatch batch;
  batch.traces.resize(offsets.back());
  const double inv = 1.0 / static_cast<double>(group_size - 1);
  parallel_for(groups.size(), workers, [&](std::size_t g) {
    const RolloutGroup& group = groups[g];
    const auto inst = env.instance(group.question_id);
    for (std::size_t i = 0; i < group.size(); ++i) {
      const ThinkingTrace& trace = group.traces[i];
      const std::uint64_t seed = group.trace_seeds.empty() ? trace_seed(group.seed, i) : group.trace_seeds[i];
      auto& terms = batch.traces[offsets[g] + i];
      std::vector<std::size_t> answers(group_size);
      std::vector<double> rewards(group_size);
      for (std::size_t j = 1; j <= summary_spec.m(); ++j) {
        const double pj = summary_spec.p(j);
        if (pj <= 0.0) continue;
        const TruncatedView view = truncate(trace, summary_spec, j);
        const SparseFeatures features = to_sparse(env.summary_features(inst, view));
        const auto dist = action_distribution(summary, features);
        Rng rng(derive_seed(seed, {seed_tag::kSummaryTrain, j}));
        double mean = 0.0;
        for (std::size_t s = 0; s < group_size; ++s) {
          answers[s] = sample_from(dist, rng.uniform());
          rewards[s] = env.reward(inst, view, answers[s]);
          mean += rewards[s];
        }
        mean /= static_cast<double>(group_size);
        for (std::size_t s = 0; s < group_size; ++s) {
          ScoreTerm term;
          term.features = features;
          term.action = static_cast<std::uint32_t>(answers[s]);
          term.weight = pj * (rewards[s] - mean) * inv;
          term.old_log_prob = std::log(dist.probs[answers[s]]);
          terms.push_back(std::move(term));
        }
      }
    }
  });
  return batch;
}

template <Environment Env>
GradientEstimate summary_gradient(const Env& env, std::span<const RolloutGroup> groups,
                                  const BudgetSpec& summary_spec, const PolicyParams& summary,
                                  std::size_t group_size, std::size_t workers = 1) {
  return surrogate_gradient(summary_batch(env, groups, summary_spec, summary, group_size, workers), summary);
}

}  // namespace anytime
