#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace anytime {

/// splitmix64 finalizer. Used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for `tag` under `parent`. Order of derivation matters:
/// derive_seed(derive_seed(s, a), b) != derive_seed(derive_seed(s, b), a).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  return mix64(parent ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept {
  for (auto tag : path) parent = derive_seed(parent, tag);
  return parent;
}

// Stream tags for the seed tree. Kept as named constants so the layout is greppable.
namespace seed_tag {
inline constexpr std::uint64_t kQuestion = 0x51;
inline constexpr std::uint64_t kTrace = 0x7a;
inline constexpr std::uint64_t kSummary = 0x5e;
inline constexpr std::uint64_t kSummaryTrain = 0x57;
inline constexpr std::uint64_t kEval = 0xe7;
inline constexpr std::uint64_t kDiagnose = 0xd1;
}  // namespace seed_tag

/// Seeded generator. mt19937_64's output sequence is fixed by the standard, and the
/// conversions below avoid the implementation-defined std distributions so streams
/// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the result unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    // Box-Muller; one draw discarded for simplicity.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace anytime
