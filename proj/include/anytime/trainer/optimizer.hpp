#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anytime/core/errors.hpp"
#include "anytime/policy/linear_softmax.hpp"

namespace anytime {

enum class OptimizerKind { SGD, AdaptiveMoment };

inline OptimizerKind parse_optimizer_kind(std::string_view s) {
  if (s == "sgd") return OptimizerKind::SGD;
  if (s == "adam") return OptimizerKind::AdaptiveMoment;
  throw ValidationError("unknown optimizer '" + std::string(s) + "' (expected sgd|adam)");
}

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::SGD ? "sgd" : "adam"; }

/// Both optimizers ascend: the gradients are of objectives to maximise.
///
/// AdaptiveMoment is Adam with bias correction:
///   m <- b1 m + (1 - b1) g,   v <- b2 v + (1 - b2) g^2
///   w <- w + step * (m / (1 - b1^k)) / (sqrt(v / (1 - b2^k)) + eps)
/// with b1 = 0.9, b2 = 0.999, eps = 1e-8 by default.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::SGD;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<double> first;
  std::vector<double> second;

  explicit OptimizerState(OptimizerKind k = OptimizerKind::SGD) : kind(k) {}
};

namespace detail {
inline std::string describe_non_finite(std::span<const double> g, const char* label = "g") {
  std::ostringstream os;
  std::size_t bad = 0;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      if (bad < 8) os << "  " << label << "[" << i << "] = " << g[i] << "\n";
      ++bad;
    } else {
      norm2 += g[i] * g[i];
    }
  }
  os << "  non-finite entries: " << bad << " of " << g.size() << "\n";
  os << "  L2 norm of finite entries: " << std::sqrt(norm2) << "\n";  // may itself overflow
  return os.str();
}
}  // namespace detail

inline void apply_update(PolicyParams& params, std::span<const double> gradient, OptimizerState& state,
                         double step_size) {
  if (gradient.size() != params.size()) throw ValidationError("gradient shape does not match parameters");
  for (double g : gradient)
    if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient", detail::describe_non_finite(gradient));
  auto w = params.values();
  if (state.kind == OptimizerKind::SGD) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += step_size * gradient[i];
  } else {
    if (state.first.size() != w.size()) {
      state.first.assign(w.size(), 0.0);
      state.second.assign(w.size(), 0.0);
      state.step = 0;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = gradient[i];
      state.first[i] = state.beta1 * state.first[i] + (1.0 - state.beta1) * g;
      state.second[i] = state.beta2 * state.second[i] + (1.0 - state.beta2) * g * g;
      w[i] += step_size * (state.first[i] / c1) / (std::sqrt(state.second[i] / c2) + state.eps);
    }
  }
  if (!params.all_finite()) throw NonFiniteError("parameters became non-finite", detail::describe_non_finite(w, "w"));
}

}  // namespace anytime
