#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anytime/core/errors.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/core/types.hpp"
#include "anytime/envs/environment.hpp"

namespace anytime {

struct NeedleInstance {
  QuestionId question_id = 0;
  std::size_t target = 0;
};

/// Knowledge state recoverable from a prefix: the feasible interval implied by
/// LO/HI feedback and whether (and where) a HIT was observed.
struct NeedleState {
  std::size_t lo = 0;
  std::size_t hi = 0;
  bool hit = false;
  std::size_t hit_probe = 0;
  /// Last probe before the HIT (or last probe overall); nullopt if none.
  std::optional<std::size_t> anchor_probe;

  std::size_t width() const noexcept { return hi - lo + 1; }
};

/// Guess-the-number over [0, N). The policy emits probes (or stop); every probe is
/// answered by one env token: LO (probe below target), HI (above) or HIT.
///
/// Token ids: probes 0..N-1, stop N, LO N+1, HI N+2, HIT N+3.
class NeedleSearch {
 public:
  using Instance = NeedleInstance;

  NeedleSearch(std::size_t n, std::size_t max_length) : n_(n) {
    if (n == 0) throw ValidationError("needle search size must be positive");
    if (max_length == 0) throw ValidationError("max thinking length must be positive");
    spec_.vocab_size = n + 4;
    spec_.action_count = n + 1;
    spec_.stop_token = static_cast<TokenId>(n);
    spec_.answer_count = n;
    spec_.max_length = max_length;
    spec_.thinking_dim = n * n + n;
    spec_.summary_dim = 1 + 4 * (n + 1);
  }

  const EnvSpec& spec() const noexcept { return spec_; }
  std::string name() const { return "needle"; }
  std::size_t size() const noexcept { return n_; }

  TokenId stop_token() const noexcept { return static_cast<TokenId>(n_); }
  TokenId lo_token() const noexcept { return static_cast<TokenId>(n_ + 1); }
  TokenId hi_token() const noexcept { return static_cast<TokenId>(n_ + 2); }
  TokenId hit_token() const noexcept { return static_cast<TokenId>(n_ + 3); }

  Instance instance(QuestionId q) const { return {q, static_cast<std::size_t>(q % n_)}; }

  /// Question ids are hashed seeds; the target is id mod N.
  QuestionId sample_question(std::uint64_t seed) const { return mix64(derive_seed(seed, seed_tag::kQuestion)); }

  /// Support of the question distribution: one id per target, uniform.
  std::vector<QuestionId> questions() const {
    std::vector<QuestionId> qs(n_);
    for (std::size_t i = 0; i < n_; ++i) qs[i] = i;
    return qs;
  }

  std::optional<Token> respond(const Instance& inst, TokenId probe) const {
    if (probe >= n_)
      throw ContractViolation("env_response expects a probe symbol, got token " + std::to_string(probe));
    const TokenId id = probe < inst.target ? lo_token() : probe > inst.target ? hi_token() : hit_token();
    return Token{id, Origin::Env};
  }

  double verify(const Instance& inst, std::size_t answer) const { return answer == inst.target ? 1.0 : 0.0; }

  double reward(const Instance& inst, const TruncatedView&, std::size_t answer) const { return verify(inst, answer); }

  /// Reads the prefix only; the target is never consulted.
  NeedleState decode(std::span<const Token> prefix) const {
    NeedleState s;
    s.lo = 0;
    s.hi = n_ - 1;
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::size_t pending = kNone;  // probe still waiting for its feedback
    for (const Token& tok : prefix) {
      if (tok.origin == Origin::Policy) {
        pending = tok.id < n_ ? tok.id : kNone;
        if (tok.id < n_ && !s.hit) s.anchor_probe = tok.id;
        continue;
      }
      const std::size_t p = pending;
      pending = kNone;
      if (p == kNone || s.hit) continue;
      if (tok.id == lo_token()) {
        s.lo = std::max(s.lo, p + 1);
      } else if (tok.id == hi_token()) {
        if (p > 0) s.hi = std::min(s.hi, p - 1);
      } else if (tok.id == hit_token()) {
        s.hit = true;
        s.hit_probe = p;
        s.anchor_probe = p;
        s.lo = s.hi = p;
      }
    }
    // Inconsistent hand-built prefixes could cross the bounds; clamp to keep the index valid.
    if (s.lo > s.hi) s.lo = s.hi;
    return s;
  }

  /// One-hot over (lo, hi) when no HIT yet, else over the HIT probe.
  std::vector<double> thinking_features(const Instance&, std::span<const Token> prefix) const {
    std::vector<double> f(spec_.thinking_dim, 0.0);
    f[thinking_state_index(decode(prefix))] = 1.0;
    return f;
  }

  std::size_t thinking_state_index(const NeedleState& s) const {
    return s.hit ? n_ * n_ + s.hit_probe : s.lo * n_ + s.hi;
  }

  /// One-hot over (hit, anchor probe or none, truncation marker); index 0 is the
  /// null encoding shared by every empty view.
  std::vector<double> summary_features(const Instance&, const TruncatedView& view) const {
    std::vector<double> f(spec_.summary_dim, 0.0);
    f[summary_state_index(view)] = 1.0;
    return f;
  }

  std::size_t summary_state_index(const TruncatedView& view) const {
    if (view.prefix.empty()) return 0;
    const NeedleState s = decode(view.prefix);
    const std::size_t probe_slot = s.anchor_probe ? *s.anchor_probe + 1 : 0;
    const std::size_t hit = s.hit ? 1 : 0;
    return 1 + ((hit * (n_ + 1) + probe_slot) * 2 + (view.truncated ? 1 : 0));
  }

  /// HIT probe with certainty, otherwise uniform over the feasible interval.
  std::vector<double> oracle_distribution(const Instance&, const TruncatedView& view) const {
    std::vector<double> d(n_, 0.0);
    const NeedleState s = decode(view.prefix);
    if (s.hit) {
      d[s.hit_probe] = 1.0;
      return d;
    }
    const double w = 1.0 / static_cast<double>(s.width());
    for (std::size_t a = s.lo; a <= s.hi; ++a) d[a] = w;
    return d;
  }

  /// Feasible answer with the smallest priority key. Uniform over the feasible set
  /// when keys are i.i.d.; for fixed keys, correctness can only switch from 0 to 1
  /// as the interval shrinks, so nested views give nondecreasing rewards.
  std::size_t oracle_answer(const Instance&, const TruncatedView& view, std::span<const double> priority) const {
    const NeedleState s = decode(view.prefix);
    if (s.hit) return s.hit_probe;
    std::size_t best = s.lo;
    for (std::size_t a = s.lo + 1; a <= s.hi; ++a)
      if (priority[a] < priority[best]) best = a;
    return best;
  }

 private:
  std::size_t n_;
  EnvSpec spec_;
};

static_assert(Environment<NeedleSearch>);

}  // namespace anytime
