#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anytime/core/types.hpp"

namespace anytime {

/// Static shape of an environment.
struct EnvSpec {
  std::size_t vocab_size = 0;    // policy alphabet + env alphabet
  std::size_t action_count = 0;  // policy alphabet, stop token included
  TokenId stop_token = 0;        // always a policy-origin symbol
  std::size_t answer_count = 0;
  std::size_t max_length = 0;    // b_m the environment was built for
  std::size_t thinking_dim = 0;
  std::size_t summary_dim = 0;
};

/// What rollout, training and the exact oracles need from an environment.
///
/// `reward` receives the view because scripted tables may grade answers per
/// prefix; the needle search ignores it. `oracle_answer` is the optimal-summary
/// witness: `priority` holds one uniform key per answer and is the only source of
/// randomness, which lets callers reuse one draw across nested budgets.
template <typename E>
concept Environment = requires(const E& env, const typename E::Instance& inst, QuestionId q,
                               std::uint64_t seed, std::span<const Token> prefix,
                               const TruncatedView& view, TokenId token, std::size_t answer,
                               std::span<const double> priority) {
  { env.spec() } -> std::convertible_to<EnvSpec>;
  { env.name() } -> std::convertible_to<std::string>;
  { env.instance(q) } -> std::convertible_to<typename E::Instance>;
  { env.sample_question(seed) } -> std::convertible_to<QuestionId>;
  { env.questions() } -> std::convertible_to<std::vector<QuestionId>>;
  { env.respond(inst, token) } -> std::convertible_to<std::optional<Token>>;
  { env.reward(inst, view, answer) } -> std::convertible_to<double>;
  { env.thinking_features(inst, prefix) } -> std::convertible_to<std::vector<double>>;
  { env.summary_features(inst, view) } -> std::convertible_to<std::vector<double>>;
  { env.oracle_distribution(inst, view) } -> std::convertible_to<std::vector<double>>;
  { env.oracle_answer(inst, view, priority) } -> std::convertible_to<std::size_t>;
};

}  // namespace anytime
