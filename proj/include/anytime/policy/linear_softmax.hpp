#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "anytime/core/errors.hpp"
#include "anytime/core/rng.hpp"

namespace anytime {

/// Weights of a linear-softmax categorical policy, shape (features x actions),
/// stored row-major: weight(f, a) = values[f * actions + a].
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(std::size_t features, std::size_t actions)
      : features_(features), actions_(actions), values_(features * actions, 0.0) {
    if (actions == 0) throw ValidationError("policy needs at least one action");
  }
  PolicyParams(std::size_t features, std::size_t actions, std::vector<double> values)
      : features_(features), actions_(actions), values_(std::move(values)) {
    if (values_.size() != features_ * actions_) throw ValidationError("policy parameter size mismatch");
  }

  std::size_t features() const noexcept { return features_; }
  std::size_t actions() const noexcept { return actions_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double& operator()(std::size_t f, std::size_t a) { return values_[f * actions_ + a]; }
  double operator()(std::size_t f, std::size_t a) const { return values_[f * actions_ + a]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  std::size_t features_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> values_;
};

struct ActionDistribution {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t a) const { return probs[a]; }
};

namespace detail {
inline void check_dims(const PolicyParams& params, std::span<const double> features) {
  if (features.size() != params.features())
    throw ValidationError("feature dimension " + std::to_string(features.size()) + " does not match policy (" +
                          std::to_string(params.features()) + ")");
}
}  // namespace detail

/// logits[a] = <column a, features>. Zero features are skipped, so one-hot
/// encodings cost O(actions).
inline void compute_logits(const PolicyParams& params, std::span<const double> features, std::span<double> logits) {
  detail::check_dims(params, features);
  const std::size_t na = params.actions();
  std::fill(logits.begin(), logits.end(), 0.0);
  const auto w = params.values();
  for (std::size_t f = 0; f < features.size(); ++f) {
    const double x = features[f];
    if (x == 0.0) continue;
    const double* row = w.data() + f * na;
    for (std::size_t a = 0; a < na; ++a) logits[a] += x * row[a];
  }
}

/// Max-subtracted softmax in place.
inline void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : v) x /= total;
}

inline ActionDistribution action_distribution(const PolicyParams& params, std::span<const double> features) {
  ActionDistribution d;
  d.probs.resize(params.actions());
  compute_logits(params, features, d.probs);
  softmax_inplace(d.probs);
  return d;
}

inline double log_prob(const PolicyParams& params, std::span<const double> features, std::size_t action) {
  std::vector<double> logits(params.actions());
  compute_logits(params, features, logits);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - mx);
  return logits[action] - mx - std::log(total);
}

/// out += scale * d/dW log pi(action | features), given the distribution at W.
/// For linear softmax the gradient is features (outer) (onehot(action) - probs).
inline void add_log_prob_grad(const ActionDistribution& dist, std::span<const double> features, std::size_t action,
                              double scale, std::span<double> out) {
  const std::size_t na = dist.size();
  for (std::size_t f = 0; f < features.size(); ++f) {
    const double x = features[f] * scale;
    if (x == 0.0) continue;
    double* row = out.data() + f * na;
    for (std::size_t a = 0; a < na; ++a) row[a] -= x * dist.probs[a];
    row[action] += x;
  }
}

inline std::vector<double> log_prob_grad(const PolicyParams& params, std::span<const double> features,
                                         std::size_t action) {
  if (action >= params.actions()) throw ValidationError("action out of range");
  std::vector<double> g(params.size(), 0.0);
  add_log_prob_grad(action_distribution(params, features), features, action, 1.0, g);
  return g;
}

/// Nonzero entries of a feature vector. Trainers keep these per token so replayed
/// epochs do not re-encode prefixes.
struct SparseFeatures {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  std::size_t dim = 0;
};

inline SparseFeatures to_sparse(std::span<const double> dense) {
  SparseFeatures s;
  s.dim = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] == 0.0) continue;
    s.index.push_back(static_cast<std::uint32_t>(i));
    s.value.push_back(dense[i]);
  }
  return s;
}

inline ActionDistribution action_distribution(const PolicyParams& params, const SparseFeatures& features) {
  if (features.dim != params.features()) throw ValidationError("feature dimension does not match policy");
  const std::size_t na = params.actions();
  ActionDistribution d;
  d.probs.assign(na, 0.0);
  const auto w = params.values();
  for (std::size_t k = 0; k < features.index.size(); ++k) {
    const double* row = w.data() + static_cast<std::size_t>(features.index[k]) * na;
    for (std::size_t a = 0; a < na; ++a) d.probs[a] += features.value[k] * row[a];
  }
  softmax_inplace(d.probs);
  return d;
}

inline void add_log_prob_grad(const ActionDistribution& dist, const SparseFeatures& features, std::size_t action,
                              double scale, std::span<double> out) {
  const std::size_t na = dist.size();
  for (std::size_t k = 0; k < features.index.size(); ++k) {
    const double x = features.value[k] * scale;
    double* row = out.data() + static_cast<std::size_t>(features.index[k]) * na;
    for (std::size_t a = 0; a < na; ++a) row[a] -= x * dist.probs[a];
    row[action] += x;
  }
}

/// Inverse-CDF draw from `dist` with u in [0, 1).
inline std::size_t sample_from(const ActionDistribution& dist, double u) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    if (dist.probs[a] <= 0.0) continue;
    last_positive = a;
    cum += dist.probs[a];
    if (u < cum) return a;
  }
  // Rounding left u above the final cumulative sum.
  return last_positive;
}

inline std::size_t sample_action(const PolicyParams& params, std::span<const double> features, Rng& rng) {
  return sample_from(action_distribution(params, features), rng.uniform());
}

/// Deterministic evaluation mode: lowest-index argmax.
inline std::size_t greedy_action(const PolicyParams& params, std::span<const double> features) {
  const auto d = action_distribution(params, features);
  return static_cast<std::size_t>(std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin());
}

}  // namespace anytime
