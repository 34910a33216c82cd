#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace anytime {

using QuestionId = std::uint64_t;
using TokenId = std::uint32_t;

enum class Origin : std::uint8_t { Policy, Env };

/// One position of a thinking trace. Env tokens are feedback emitted by the
/// environment; they count toward the budget but never receive gradient.
struct Token {
  TokenId id = 0;
  Origin origin = Origin::Policy;

  friend bool operator==(const Token&, const Token&) = default;
};

struct ThinkingTrace {
  QuestionId question_id = 0;
  std::vector<Token> tokens;
  /// Stop token emitted before the length cap was hit.
  bool terminated_naturally = false;

  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const ThinkingTrace&, const ThinkingTrace&) = default;
};

/// A trace prefix as seen by the summary policy. `truncated` plays the role of the
/// "... </think>" marker inserted when thinking is cut by the budget; it is never
/// stored as a token.
struct TruncatedView {
  std::vector<Token> prefix;
  bool truncated = false;
  /// 1-based index into the budget support, or 0 for an off-support evaluation budget.
  std::size_t budget_index = 0;
  std::size_t budget = 0;

  friend bool operator==(const TruncatedView&, const TruncatedView&) = default;
};

/// Per-budget summary reward estimates r_hat_j, each the mean of K binary rewards.
struct BudgetRewards {
  std::vector<double> estimates;
  std::size_t samples_per_budget = 1;

  std::size_t size() const noexcept { return estimates.size(); }
  /// 1-based access to match budget indexing.
  double at(std::size_t j) const { return estimates.at(j - 1); }
};

struct RolloutGroup {
  QuestionId question_id = 0;
  /// Seed the group's traces were derived from (replay key).
  std::uint64_t seed = 0;
  std::vector<ThinkingTrace> traces;
  std::vector<BudgetRewards> rewards;
  /// Per-trace seeds, parallel to `traces`.
  std::vector<std::uint64_t> trace_seeds;

  std::size_t size() const noexcept { return traces.size(); }
};

struct AdvantageRecord {
  std::size_t position = 0;      // t, 1-based
  std::size_t budget_index = 0;  // j_t, 1-based
  double ret = 0.0;              // R(x, z, j_t)
  double v1 = 0.0;
  double v2 = 0.0;
  double baseline = 0.0;         // V(x, z_<t)
  double advantage = 0.0;        // ret - baseline
};

/// Advantage records for the policy-origin tokens of one trace, in position order.
struct AdvantageProfile {
  std::vector<AdvantageRecord> records;
};

}  // namespace anytime
