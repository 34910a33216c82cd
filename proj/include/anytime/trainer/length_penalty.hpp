#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "anytime/core/errors.hpp"

namespace anytime {

enum class LengthPenalty { None, V1, V2 };

inline LengthPenalty parse_length_penalty(std::string_view s) {
  if (s == "none") return LengthPenalty::None;
  if (s == "v1") return LengthPenalty::V1;
  if (s == "v2") return LengthPenalty::V2;
  throw ValidationError("unknown length penalty '" + std::string(s) + "' (expected none|v1|v2)");
}

inline std::string_view to_string(LengthPenalty p) {
  switch (p) {
    case LengthPenalty::None: return "none";
    case LengthPenalty::V1: return "v1";
    case LengthPenalty::V2: return "v2";
  }
  return "?";
}

/// Mean/std of the lengths of correct traces in a group (V2 only).
struct LengthStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Reward shaping baselines for the length-penalty ablation.
///   V1: correct -> 1 - coef * |z| / b_m, wrong -> 0.
///   V2: correct -> 1 - coef * sigmoid((|z| - mean) / std) with group statistics of
///       correct traces (std = 0 maps to sigmoid(0)), wrong -> 0.
inline double length_penalty_reward(double reward, std::size_t length, std::size_t max_length, LengthPenalty variant,
                                    double coef, std::optional<LengthStats> stats = std::nullopt) {
  if (reward != 0.0 && reward != 1.0) throw ValidationError("length penalty expects a 0/1 reward");
  if (variant == LengthPenalty::None || reward == 0.0) return reward;
  if (variant == LengthPenalty::V1) {
    if (max_length == 0) throw ValidationError("max_length must be positive");
    return 1.0 - coef * static_cast<double>(length) / static_cast<double>(max_length);
  }
  const LengthStats s = stats.value_or(LengthStats{static_cast<double>(length), 0.0});
  const double z = s.stddev > 0.0 ? (static_cast<double>(length) - s.mean) / s.stddev : 0.0;
  return 1.0 - coef / (1.0 + std::exp(-z));
}

}  // namespace anytime
