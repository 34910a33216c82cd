#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/core/types.hpp"

namespace anytime {

enum class AdvantageMode { BRPO, GRPO, V2Only };

inline std::string_view to_string(AdvantageMode m) {
  switch (m) {
    case AdvantageMode::BRPO: return "brpo";
    case AdvantageMode::GRPO: return "grpo";
    case AdvantageMode::V2Only: return "v2only";
  }
  return "?";
}

inline AdvantageMode parse_advantage_mode(std::string_view s) {
  if (s == "brpo") return AdvantageMode::BRPO;
  if (s == "grpo") return AdvantageMode::GRPO;
  if (s == "v2only") return AdvantageMode::V2Only;
  throw ValidationError("unknown advantage mode '" + std::string(s) + "' (expected brpo|grpo|v2only)");
}

/// Deliberate V1 corruptions for mutation testing of the verification suite.
enum class V1Mutation {
  None,
  /// Extends the history window to include the current budget j_t, which makes
  /// V1 depend on z_t and therefore biases the gradient.
  IncludeCurrentBudget,
};

struct BrpoConfig {
  double lambda = 0.5;
  /// Exclude the trace itself from V2 (and from the GRPO group mean).
  bool leave_one_out = false;
  AdvantageMode mode = AdvantageMode::BRPO;
  V1Mutation v1_mutation = V1Mutation::None;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  }
};

/// R(x, z, j) = sum_{j' >= j} P_j' r_hat_j'.
inline double compute_return(const BudgetRewards& rewards, const BudgetSpec& spec, std::size_t j) {
  if (j < 1 || j > spec.m()) throw std::out_of_range("budget index out of range");
  double r = 0.0;
  for (std::size_t k = j; k <= spec.m(); ++k) r += spec.p(k) * rewards.at(k);
  return r;
}

/// lambda-discounted mean of earlier budget rewards, scaled by the remaining prior
/// mass. Zero at j = 1, where the history is empty (its interpolation weight is 0).
inline double v1_baseline(const BudgetRewards& rewards, const BudgetSpec& spec, std::size_t j, double lambda,
                          V1Mutation mutation = V1Mutation::None) {
  if (j < 1 || j > spec.m()) throw std::out_of_range("budget index out of range");
  const std::size_t last = mutation == V1Mutation::IncludeCurrentBudget ? j : j - 1;
  if (last == 0) return 0.0;
  double num = 0.0;
  double den = 0.0;
  // Weights lambda^(j-k) rescaled by lambda^(last-j): same ratio for lambda > 0,
  // and the lambda -> 0 limit (only the latest reward) at lambda = 0.
  for (std::size_t k = 1; k <= last; ++k) {
    const double w = std::pow(lambda, static_cast<double>(last - k));
    num += w * rewards.at(k);
    den += w;
  }
  return num / den * spec.tail_mass(j);
}

/// Group mean of R(x, z^i, j), optionally leaving out `self_index`.
inline double v2_baseline(std::span<const BudgetRewards> group, const BudgetSpec& spec, std::size_t j,
                          bool leave_one_out, std::size_t self_index) {
  if (group.empty()) throw ValidationError("v2 baseline needs a non-empty group");
  if (leave_one_out && group.size() < 2)
    throw ValidationError("leave-one-out V2 needs a group of at least 2");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (leave_one_out && i == self_index) continue;
    total += compute_return(group[i], spec, j);
    ++count;
  }
  return total / static_cast<double>(count);
}

/// ((j-1)/m) V1 + ((m-j+1)/m) V2.
inline double combined_baseline(double v1, double v2, std::size_t j, std::size_t m) {
  if (j < 1 || j > m) throw std::out_of_range("budget index out of range");
  const double md = static_cast<double>(m);
  return (static_cast<double>(j - 1) / md) * v1 + (static_cast<double>(m - j + 1) / md) * v2;
}

/// Return and baseline for one budget segment of member `self_index`.
inline AdvantageRecord segment_advantage(std::span<const BudgetRewards> group, const BudgetSpec& spec,
                                         const BrpoConfig& cfg, std::size_t self_index, std::size_t j) {
  AdvantageRecord rec;
  rec.budget_index = j;
  const BudgetRewards& own = group[self_index];
  if (cfg.mode == AdvantageMode::GRPO) {
    // Outcome-only: R(x, z, 1) under the Base prior is the final-budget reward.
    const std::size_t m = spec.m();
    rec.ret = own.at(m);
    double total = 0.0;
    std::size_t count = 0;
    if (cfg.leave_one_out && group.size() < 2) throw ValidationError("leave-one-out GRPO needs a group of at least 2");
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (cfg.leave_one_out && i == self_index) continue;
      total += group[i].at(m);
      ++count;
    }
    rec.v2 = total / static_cast<double>(count);
    rec.baseline = rec.v2;
  } else {
    rec.ret = compute_return(own, spec, j);
    rec.v2 = v2_baseline(group, spec, j, cfg.leave_one_out, self_index);
    if (cfg.mode == AdvantageMode::BRPO) {
      rec.v1 = v1_baseline(own, spec, j, cfg.lambda, cfg.v1_mutation);
      rec.baseline = combined_baseline(rec.v1, rec.v2, j, spec.m());
    } else {
      rec.baseline = rec.v2;
    }
  }
  rec.advantage = rec.ret - rec.baseline;
  return rec;
}

/// Per policy-origin token advantages A_t = R(x, z, j_t) - V(x, z_<t) for the
/// trace at `self_index` of `group`. No std normalisation is applied in any mode.
inline AdvantageProfile advantage_profile(const ThinkingTrace& trace, const RolloutGroup& group,
                                          const BudgetSpec& spec, const BrpoConfig& cfg, std::size_t self_index) {
  if (self_index >= group.size()) throw ValidationError("self_index outside the group");
  if (group.rewards.size() != group.traces.size()) throw ValidationError("group rewards and traces differ in size");
  std::vector<AdvantageRecord> per_segment(spec.m() + 1);
  std::vector<bool> ready(spec.m() + 1, false);
  AdvantageProfile profile;
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    if (trace.tokens[i].origin != Origin::Policy) continue;
    const std::size_t t = i + 1;
    const std::size_t j = nearest_budget_index(t, spec);
    if (!ready[j]) {
      per_segment[j] = segment_advantage(group.rewards, spec, cfg, self_index, j);
      ready[j] = true;
    }
    AdvantageRecord rec = per_segment[j];
    rec.position = t;
    profile.records.push_back(rec);
  }
  return profile;
}

}  // namespace anytime
