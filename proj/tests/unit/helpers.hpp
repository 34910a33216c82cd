#pragma once

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "anytime/core/rng.hpp"
#include "anytime/core/types.hpp"
#include "anytime/envs/needle_search.hpp"
#include "anytime/envs/scripted.hpp"
#include "anytime/policy/linear_softmax.hpp"

namespace testutil {

using namespace anytime;

/// Needle prefix from (probe, feedback) pairs; feedback is answered by the env.
inline std::vector<Token> needle_prefix(const NeedleSearch& env, std::size_t target,
                                        std::initializer_list<std::size_t> probes) {
  const auto inst = env.instance(target);
  std::vector<Token> out;
  for (std::size_t p : probes) {
    out.push_back({static_cast<TokenId>(p), Origin::Policy});
    out.push_back(*env.respond(inst, static_cast<TokenId>(p)));
  }
  return out;
}

inline ThinkingTrace trace_from(std::vector<Token> tokens, QuestionId q = 0, bool natural = false) {
  ThinkingTrace z;
  z.question_id = q;
  z.tokens = std::move(tokens);
  z.terminated_naturally = natural;
  return z;
}

inline PolicyParams random_params(std::size_t features, std::size_t actions, Rng& rng, double scale = 1.0) {
  PolicyParams p(features, actions);
  for (double& v : p.values()) v = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

/// Every feature row strongly prefers `action`.
inline PolicyParams point_mass(std::size_t features, std::size_t actions, std::size_t action, double logit = 30.0) {
  PolicyParams p(features, actions);
  for (std::size_t f = 0; f < features; ++f) p(f, action) = logit;
  return p;
}

inline BudgetRewards rewards_of(std::vector<double> r, std::size_t k = 1) {
  BudgetRewards b;
  b.estimates = std::move(r);
  b.samples_per_budget = k;
  return b;
}

/// Small enumerable scripted env: 2 symbols, 3 answers, length 6, 3 budgets.
inline ScriptedEnv small_scripted(std::uint64_t seed, double p_one = 0.4) {
  return ScriptedEnv(random_scripted_table(2, 3, 6, 3, {0, 1}, seed, p_one));
}

}  // namespace testutil
