#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/core/parallel.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/envs/environment.hpp"
#include "anytime/policy/linear_softmax.hpp"
#include "anytime/rollout/rollout.hpp"

namespace anytime {

struct AccuracyCurve {
  std::vector<std::size_t> budgets;
  std::vector<double> accuracy;
  double final_accuracy = 0.0;       // at the largest evaluated budget
  double mean_thinking_length = 0.0;
  std::size_t traces = 0;
};

/// Fixed evaluation questions: the i-th comes from derive(seed, eval, i), so two
/// checkpoints evaluated with one seed see the same questions and random streams.
template <Environment Env>
std::vector<QuestionId> eval_questions(const Env& env, std::size_t count, std::uint64_t seed) {
  std::vector<QuestionId> qs(count);
  for (std::size_t i = 0; i < count; ++i) qs[i] = env.sample_question(derive_seed(seed, {seed_tag::kEval, i}));
  return qs;
}

/// Mean reward over questions and M summary draws for every evaluation budget.
/// Each question contributes one trace sampled under cap `max_length`; all budgets
/// score that trace with the same draws. `support` maps on-support budgets to their
/// index for environments that grade per budget index.
template <Environment Env>
AccuracyCurve accuracy_curve(const Env& env, std::span<const QuestionId> questions, const PolicyParams& thinking,
                             const Summarizer& summary, std::span<const std::size_t> eval_budgets,
                             std::size_t max_length, std::size_t samples, std::uint64_t seed,
                             const BudgetSpec* support = nullptr, std::size_t workers = 1) {
  if (samples < 1) throw ValidationError("evaluation needs at least one summary sample");
  for (std::size_t i = 1; i < eval_budgets.size(); ++i)
    if (eval_budgets[i] <= eval_budgets[i - 1]) throw ValidationError("evaluation budgets must be increasing");
  const std::size_t nb = eval_budgets.size();
  std::vector<std::size_t> index(nb, 0);
  if (support) {
    for (std::size_t k = 0; k < nb; ++k)
      for (std::size_t j = 1; j <= support->m(); ++j)
        if (support->b(j) == eval_budgets[k]) index[k] = j;
  }
  std::vector<std::vector<double>> per_question(questions.size(), std::vector<double>(nb, 0.0));
  std::vector<std::size_t> lengths(questions.size(), 0);
  parallel_for(questions.size(), workers, [&](std::size_t q) {
    const auto inst = env.instance(questions[q]);
    const std::uint64_t tseed = trace_seed(derive_seed(seed, {seed_tag::kEval, q}), 0);
    Rng rng(tseed);
    const ThinkingTrace trace = sample_trace(env, inst, questions[q], thinking, max_length, rng);
    lengths[q] = trace.size();
    const auto draws = make_summary_draws(tseed, samples, env.spec().answer_count, summary.is_oracle());
    for (std::size_t k = 0; k < nb; ++k)
      per_question[q][k] = score_view(env, inst, truncate_at(trace, eval_budgets[k], index[k]), summary, draws);
  });
  AccuracyCurve curve;
  curve.budgets.assign(eval_budgets.begin(), eval_budgets.end());
  curve.accuracy.assign(nb, 0.0);
  curve.traces = questions.size();
  if (questions.empty()) return curve;
  const double inv = 1.0 / static_cast<double>(questions.size());
  for (std::size_t q = 0; q < questions.size(); ++q) {
    for (std::size_t k = 0; k < nb; ++k) curve.accuracy[k] += per_question[q][k] * inv;
    curve.mean_thinking_length += static_cast<double>(lengths[q]) * inv;
  }
  if (nb > 0) curve.final_accuracy = curve.accuracy.back();
  return curve;
}

/// Area under the curve as the prior-weighted mean accuracy.
inline double curve_auc(const AccuracyCurve& curve, std::span<const double> weights) {
  if (weights.size() != curve.accuracy.size()) throw ValidationError("AUC weights do not match the curve");
  double auc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) auc += weights[k] * curve.accuracy[k];
  return auc;
}

inline double curve_auc_uniform(const AccuracyCurve& curve) {
  if (curve.accuracy.empty()) return 0.0;
  std::vector<double> w(curve.accuracy.size(), 1.0 / static_cast<double>(curve.accuracy.size()));
  return curve_auc(curve, w);
}

}  // namespace anytime
