#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anytime/advantage/brpo.hpp"
#include "anytime/app/config.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/envs/needle_search.hpp"
#include "anytime/envs/scripted.hpp"
#include "anytime/oracle/enumeration.hpp"
#include "anytime/rollout/rollout.hpp"
#include "anytime/trainer/gradients.hpp"

namespace anytime::app {

enum class CheckStatus { Pass, Fail, NotApplicable };

inline std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::NotApplicable: return "n/a";
  }
  return "?";
}

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::Fail; });
  }
};

struct VerifyOptions {
  bool full = false;
  V1Mutation mutation = V1Mutation::None;
  std::size_t enum_cap = 1'000'000;
  std::uint64_t seed = 7;
  /// Optional user prior for the bound check, evaluated on a needle search of the
  /// config's size and budgets (must be enumerable).
  std::optional<RunConfig> config;
};

namespace verify_detail {

inline std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

inline PolicyParams random_params(std::size_t features, std::size_t actions, Rng& rng, double scale) {
  PolicyParams p(features, actions);
  for (double& v : p.values()) v = scale * rng.normal();
  return p;
}

inline double rel_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

/// Default enumerable scripted instance: symbols {0, 1} plus stop, 3 answers,
/// length 6, budgets {2, 4, 6}, two questions.
inline ScriptedEnv scripted_fixture(std::uint64_t seed) {
  return ScriptedEnv(random_scripted_table(2, 3, 6, 3, {0, 1}, seed, 0.4));
}

inline BudgetSpec scripted_spec() { return make_prior(PriorKind::Uniform, {2, 4, 6}); }

}  // namespace verify_detail

/// Central differences of exact_objectives against the enumerated gradients.
template <Environment Env>
double finite_difference_error(const Env& env, const PolicyParams& theta, const PolicyParams& phi,
                               const BudgetSpec& spec, const EnumerationOptions& opts, double step = 1e-4) {
  const ExactGradients exact = exact_gradients(env, theta, Summarizer::learned(phi), spec, opts);
  std::vector<double> fd_theta(theta.size()), fd_phi(phi.size());
  PolicyParams t = theta, f = phi;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double keep = t.values()[i];
    t.values()[i] = keep + step;
    const double up = exact_objectives(env, t, Summarizer::learned(phi), spec, opts).anytime;
    t.values()[i] = keep - step;
    const double down = exact_objectives(env, t, Summarizer::learned(phi), spec, opts).anytime;
    t.values()[i] = keep;
    fd_theta[i] = (up - down) / (2.0 * step);
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double keep = f.values()[i];
    f.values()[i] = keep + step;
    const double up = exact_objectives(env, theta, Summarizer::learned(f), spec, opts).anytime;
    f.values()[i] = keep - step;
    const double down = exact_objectives(env, theta, Summarizer::learned(f), spec, opts).anytime;
    f.values()[i] = keep;
    fd_phi[i] = (up - down) / (2.0 * step);
  }
  return std::max(verify_detail::rel_l2(exact.thinking, fd_theta), verify_detail::rel_l2(exact.summary, fd_phi));
}

/// Mean and standard error per coordinate of `samples` one-group thinking-gradient
/// estimates (oracle summary, questions drawn from the environment).
struct GradientMoments {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

template <Environment Env>
GradientMoments monte_carlo_thinking_gradient(const Env& env, const PolicyParams& theta, const BudgetSpec& spec,
                                              const BrpoConfig& brpo, std::size_t group_size, std::size_t samples,
                                              std::uint64_t seed) {
  const std::size_t d = theta.size();
  std::vector<double> sum(d, 0.0), sum2(d, 0.0);
  const Summarizer oracle = Summarizer::oracle();
  for (std::size_t s = 0; s < samples; ++s) {
    const std::uint64_t gseed = derive_seed(seed, {s});
    const QuestionId q = env.sample_question(gseed);
    const RolloutGroup g = collect_group(env, q, theta, oracle, spec, group_size, 1, gseed);
    const auto est = thinking_gradient(env, std::span<const RolloutGroup>(&g, 1), spec, brpo, theta);
    for (std::size_t i = 0; i < d; ++i) {
      sum[i] += est.values[i];
      sum2[i] += est.values[i] * est.values[i];
    }
  }
  GradientMoments m;
  m.mean.resize(d);
  m.stderr_.resize(d);
  const double n = static_cast<double>(samples);
  for (std::size_t i = 0; i < d; ++i) {
    m.mean[i] = sum[i] / n;
    const double var = std::max(0.0, sum2[i] / n - m.mean[i] * m.mean[i]) * n / std::max(1.0, n - 1.0);
    m.stderr_[i] = std::sqrt(var / n);
  }
  return m;
}

/// Worst |mean - exact| / SE over coordinates (coordinates with zero SE must match exactly).
inline double worst_z(const GradientMoments& m, std::span<const double> exact) {
  double worst = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double gap = std::abs(m.mean[i] - exact[i]);
    if (m.stderr_[i] > 0.0) worst = std::max(worst, gap / m.stderr_[i]);
    else if (gap > 1e-12) worst = std::numeric_limits<double>::infinity();
  }
  return worst;
}

/// Runs the oracle suite. EnumerationCapExceeded propagates to the caller.
inline VerifyReport run_verify(const VerifyOptions& opt) {
  using namespace verify_detail;
  VerifyReport rep;
  EnumerationOptions eo;
  eo.cap = opt.enum_cap;
  EnumerationOptions reversed = eo;
  reversed.reverse_order = true;
  Rng rng(opt.seed);

  const ScriptedEnv scripted = scripted_fixture(opt.seed);
  const BudgetSpec sspec = scripted_spec();
  const EnvSpec ss = scripted.spec();
  const NeedleSearch needle(4, 6);
  const std::vector<std::size_t> needle_budgets{2, 4, 6};
  const EnvSpec ns = needle.spec();

  auto add = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, std::move(detail)});
  };

  {  // path mass and order invariance
    const PolicyParams th = random_params(ss.thinking_dim, ss.action_count, rng, 1.0);
    const PolicyParams ph = random_params(ss.summary_dim, ss.answer_count, rng, 1.0);
    double worst = 0.0;
    for (double m : exact_path_mass(scripted, th, sspec.max_budget(), eo)) worst = std::max(worst, std::abs(m - 1.0));
    const PolicyParams nth = random_params(ns.thinking_dim, ns.action_count, rng, 1.0);
    for (double m : exact_path_mass(needle, nth, 6, eo)) worst = std::max(worst, std::abs(m - 1.0));
    add("path-mass", worst <= 1e-12, "max |sum p - 1| = " + sci(worst));

    const auto a = exact_objectives(scripted, th, Summarizer::learned(ph), sspec, eo);
    const auto b = exact_objectives(scripted, th, Summarizer::learned(ph), sspec, reversed);
    const double gap = std::max(std::abs(a.anytime - b.anytime), std::abs(a.standard - b.standard));
    add("enumeration-order", gap <= 1e-12, "objective gap = " + sci(gap));
  }

  {  // Base prior: anytime objective equals the standard one exactly
    const BudgetSpec base = make_prior(PriorKind::Base, {2, 4, 6});
    const PolicyParams th = random_params(ss.thinking_dim, ss.action_count, rng, 1.0);
    const PolicyParams ph = random_params(ss.summary_dim, ss.answer_count, rng, 1.0);
    const auto o = exact_objectives(scripted, th, Summarizer::learned(ph), base, eo);
    add("base-prior-equality", o.anytime == o.standard,
        "J_anytime - J = " + sci(o.anytime - o.standard));
  }

  {  // finite differences
    const std::size_t points = opt.full ? 20 : 5;
    double worst = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      const PolicyParams th = random_params(ss.thinking_dim, ss.action_count, rng, 1.0);
      const PolicyParams ph = random_params(ss.summary_dim, ss.answer_count, rng, 1.0);
      worst = std::max(worst, finite_difference_error(scripted, th, ph, sspec, eo));
    }
    add("finite-difference", worst <= 1e-4,
        std::to_string(points) + " points, max relative L2 error = " + sci(worst));
  }

  {  // baseline term has zero expectation
    const PolicyParams th = random_params(ss.thinking_dim, ss.action_count, rng, 1.0);
    const Summarizer oracle = Summarizer::oracle();
    for (AdvantageMode mode : {AdvantageMode::BRPO, AdvantageMode::V2Only, AdvantageMode::GRPO}) {
      BrpoConfig cfg;
      cfg.mode = mode;
      cfg.leave_one_out = true;
      cfg.v1_mutation = opt.mutation;
      double worst = 0.0;
      for (QuestionId q : scripted.questions()) {
        std::vector<BudgetRewards> others;
        for (std::size_t i = 0; i < 3; ++i) {
          BudgetRewards r;
          r.estimates = {rng.uniform(), rng.uniform(), rng.uniform()};
          others.push_back(r);
        }
        for (double v : exact_baseline_term(scripted, q, th, oracle, sspec, cfg, others, eo))
          worst = std::max(worst, std::abs(v));
      }
      add("baseline-zero/" + std::string(to_string(mode)), worst <= 1e-12, "max |E[term]| = " + sci(worst));
    }
  }

  {  // Monte Carlo thinking gradient is unbiased with leave-one-out V2
    const std::size_t samples = opt.full ? 100'000 : 20'000;
    const PolicyParams th = random_params(ss.thinking_dim, ss.action_count, rng, 0.5);
    const auto exact = exact_gradients(scripted, th, Summarizer::oracle(), sspec, eo);
    BrpoConfig cfg;
    cfg.leave_one_out = true;
    cfg.v1_mutation = opt.mutation;
    const auto m = monte_carlo_thinking_gradient(scripted, th, sspec, cfg, 4, samples, derive_seed(opt.seed, {1}));
    const double z = worst_z(m, exact.thinking);
    add("unbiased-gradient", z <= 4.0,
        std::to_string(samples) + " groups of 4, worst |mean - exact| = " + sci(z) + " standard errors");
  }

  {  // bounds between the objectives, oracle summary
    const std::size_t draws = opt.full ? 50 : 10;
    for (PriorKind kind : {PriorKind::Base, PriorKind::Uniform, PriorKind::Linear}) {
      const BudgetSpec spec = make_prior(kind, needle_budgets);
      bool ok = true;
      double worst_left = -std::numeric_limits<double>::infinity(), worst_right = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < draws; ++k) {
        const PolicyParams th = random_params(ns.thinking_dim, ns.action_count, rng, 1.0);
        const BoundReport b = bound_check(needle, th, spec, eo);
        ok = ok && b.holds;
        if (kind == PriorKind::Base) ok = ok && b.anytime == b.standard;
        worst_left = std::max(worst_left, b.anytime - b.standard);
        worst_right = std::max(worst_right, b.standard - b.anytime / b.final_probability);
      }
      add("bounds/" + std::string(to_string(kind)), ok,
          std::to_string(draws) + " draws, max(J_any - J) = " + sci(worst_left) +
              ", max(J - J_any/P_m) = " + sci(worst_right));
    }
    if (opt.config) {
      const RunConfig& c = *opt.config;
      const BudgetSpec spec = c.thinking_spec();
      const NeedleSearch env(c.needle_size, spec.max_budget());
      const PolicyParams th = random_params(env.spec().thinking_dim, env.spec().action_count, rng, 1.0);
      const BoundReport b = bound_check(env, th, spec, eo);
      add("bounds/config-left", b.left_holds, "J_any - J = " + sci(b.anytime - b.standard));
      if (b.right_applicable)
        add("bounds/config-right", b.right_holds, "J - J_any/P_m = " + sci(b.standard - b.anytime / b.final_probability));
      else
        rep.checks.push_back({"bounds/config-right", CheckStatus::NotApplicable, "P_m = 0"});
    }
  }

  {  // optimal-summary reward never decreases with the budget, in expectation
    const PolicyParams th = random_params(ns.thinking_dim, ns.action_count, rng, 1.0);
    const std::vector<std::size_t> grid{0, 1, 2, 3, 4, 5, 6};
    const auto curve = exact_budget_curve(needle, th, Summarizer::oracle(), grid, 6, eo);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < curve.questions.size(); ++q) {
      for (std::size_t k = 0; k < grid.size(); ++k) worst = std::max(worst, curve.at_budget[q][k] - curve.full[q]);
      for (std::size_t k = 1; k < grid.size(); ++k)
        worst = std::max(worst, curve.at_budget[q][k - 1] - curve.at_budget[q][k]);
    }
    add("optimal-summary-monotone", worst <= 1e-12, "max decrease = " + sci(worst));
  }

  {  // per-trace monotonicity of sampled oracle estimates
    const std::size_t traces = opt.full ? 10'000 : 1'000;
    const NeedleSearch big(16, 32);
    const BudgetSpec spec = make_prior(PriorKind::Uniform, {8, 16, 24, 32});
    const PolicyParams th(big.spec().thinking_dim, big.spec().action_count);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < traces; ++i) {
      const std::uint64_t s = derive_seed(opt.seed, {2, i});
      const QuestionId q = big.sample_question(s);
      const auto inst = big.instance(q);
      Rng r(s);
      const ThinkingTrace z = sample_trace(big, inst, q, th, 32, r);
      const BudgetRewards est = estimate_budget_rewards(big, inst, z, spec, Summarizer::oracle(), 4, s);
      for (std::size_t j = 2; j <= spec.m(); ++j)
        if (est.at(j) < est.at(j - 1)) ++violations;
    }
    add("trace-monotone", violations == 0,
        std::to_string(traces) + " traces, " + std::to_string(violations) + " violations");
  }
  return rep;
}

inline void print_report(std::ostream& os, const VerifyReport& rep) {
  std::size_t width = 5;
  for (const auto& c : rep.checks) width = std::max(width, c.name.size());
  os << std::left << std::setw(static_cast<int>(width + 2)) << "check" << "status  detail\n";
  for (const auto& c : rep.checks)
    os << std::left << std::setw(static_cast<int>(width + 2)) << c.name << std::setw(8) << to_string(c.status)
       << c.detail << '\n';
  os << (rep.passed() ? "verdict: pass\n" : "verdict: FAIL\n");
}

inline nlohmann::json report_json(const VerifyReport& rep) {
  nlohmann::json j;
  j["passed"] = rep.passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : rep.checks) {
    std::string status(to_string(c.status));
    std::transform(status.begin(), status.end(), status.begin(), [](unsigned char ch) { return std::tolower(ch); });
    j["checks"].push_back({{"name", c.name}, {"status", status}, {"detail", c.detail}});
  }
  return j;
}

}  // namespace anytime::app
