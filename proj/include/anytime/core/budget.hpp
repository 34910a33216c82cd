#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "anytime/core/errors.hpp"
#include "anytime/core/types.hpp"

namespace anytime {

/// Budget support b_1 < ... < b_m with prior probabilities P_1..P_m.
/// Budget indices are 1-based throughout the library, with b_0 = 0.
class BudgetSpec {
 public:
  BudgetSpec(std::vector<std::size_t> budgets, std::vector<double> probabilities)
      : budgets_(std::move(budgets)), probs_(std::move(probabilities)) {
    if (budgets_.empty()) throw ValidationError("budget support is empty");
    if (budgets_.size() != probs_.size())
      throw ValidationError("budgets and probabilities differ in length");
    if (budgets_.front() == 0) throw ValidationError("budgets must be positive");
    for (std::size_t i = 1; i < budgets_.size(); ++i)
      if (budgets_[i] <= budgets_[i - 1])
        throw ValidationError("budgets must be strictly increasing");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ValidationError("probabilities sum to " + std::to_string(total) + ", expected 1");
  }

  std::size_t m() const noexcept { return budgets_.size(); }
  std::span<const std::size_t> budgets() const noexcept { return budgets_; }
  std::span<const double> probabilities() const noexcept { return probs_; }

  /// b_j; b(0) == 0.
  std::size_t b(std::size_t j) const {
    if (j == 0) return 0;
    return budgets_.at(j - 1);
  }
  double p(std::size_t j) const { return probs_.at(j - 1); }
  std::size_t max_budget() const noexcept { return budgets_.back(); }
  double final_probability() const noexcept { return probs_.back(); }

  /// Sum_{j' >= j} P_j'.
  double tail_mass(std::size_t j) const {
    double s = 0.0;
    for (std::size_t k = j; k <= m(); ++k) s += p(k);
    return s;
  }

  BudgetSpec with_probabilities(std::vector<double> probabilities) const {
    return BudgetSpec(budgets_, std::move(probabilities));
  }

 private:
  std::vector<std::size_t> budgets_;
  std::vector<double> probs_;
};

enum class PriorKind { Base, Uniform, Linear };

inline std::string_view to_string(PriorKind k) {
  switch (k) {
    case PriorKind::Base: return "base";
    case PriorKind::Uniform: return "uniform";
    case PriorKind::Linear: return "linear";
  }
  return "?";
}

inline PriorKind parse_prior_kind(std::string_view s) {
  if (s == "base") return PriorKind::Base;
  if (s == "uniform") return PriorKind::Uniform;
  if (s == "linear") return PriorKind::Linear;
  throw ValidationError("unknown prior kind '" + std::string(s) + "' (expected base|uniform|linear)");
}

inline BudgetSpec make_prior(PriorKind kind, std::vector<std::size_t> budgets) {
  if (budgets.empty()) throw ValidationError("budget support is empty");
  const std::size_t m = budgets.size();
  std::vector<double> probs(m, 0.0);
  switch (kind) {
    case PriorKind::Base:
      probs.back() = 1.0;
      break;
    case PriorKind::Uniform:
      std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(m));
      break;
    case PriorKind::Linear: {
      double total = 0.0;
      for (auto b : budgets) total += static_cast<double>(b);
      for (std::size_t j = 0; j < m; ++j) probs[j] = static_cast<double>(budgets[j]) / total;
      break;
    }
  }
  return BudgetSpec(std::move(budgets), std::move(probs));
}

/// j_t = argmin_j { b_j >= t }, 1-based.
inline std::size_t nearest_budget_index(std::size_t t, const BudgetSpec& spec) {
  if (t < 1 || t > spec.max_budget())
    throw std::out_of_range("position " + std::to_string(t) + " outside [1, " +
                            std::to_string(spec.max_budget()) + "]");
  const auto budgets = spec.budgets();
  const auto it = std::lower_bound(budgets.begin(), budgets.end(), t);
  return static_cast<std::size_t>(it - budgets.begin()) + 1;
}

/// z_{<=b}: the first min(b, |z|) tokens; the marker is set iff b < |z|.
inline TruncatedView truncate_at(const ThinkingTrace& trace, std::size_t budget, std::size_t budget_index = 0) {
  const std::size_t keep = std::min(budget, trace.tokens.size());
  TruncatedView view;
  view.prefix.assign(trace.tokens.begin(), trace.tokens.begin() + static_cast<std::ptrdiff_t>(keep));
  view.truncated = budget < trace.tokens.size();
  view.budget_index = budget_index;
  view.budget = budget;
  return view;
}

inline TruncatedView truncate(const ThinkingTrace& trace, const BudgetSpec& spec, std::size_t j) {
  if (j < 1 || j > spec.m())
    throw std::out_of_range("budget index " + std::to_string(j) + " outside [1, " + std::to_string(spec.m()) + "]");
  return truncate_at(trace, spec.b(j), j);
}

}  // namespace anytime
