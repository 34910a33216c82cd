#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "anytime/advantage/brpo.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/core/types.hpp"
#include "anytime/envs/environment.hpp"
#include "anytime/policy/linear_softmax.hpp"
#include "anytime/rollout/rollout.hpp"

namespace anytime {

struct EnumerationOptions {
  std::size_t cap = 1'000'000;  // maximum number of complete traces over all questions
  bool reverse_order = false;   // visit actions high-to-low (order-invariance checks)
};

/// A policy decision on an enumerated path.
struct PolicyStep {
  std::size_t position = 0;  // 1-based
  SparseFeatures features;
  ActionDistribution dist;
  std::uint32_t action = 0;
};

/// Depth-first walk over every complete trace of one question under the thinking
/// policy. visit(trace, path_probability, steps) is called once per leaf; env tokens
/// contribute a factor of 1. `visited` counts leaves across calls for the cap.
template <Environment Env, typename Visit>
void enumerate_traces(const Env& env, const typename Env::Instance& inst, QuestionId question,
                      const PolicyParams& thinking, std::size_t max_length, const EnumerationOptions& opts,
                      std::size_t& visited, Visit&& visit) {
  ThinkingTrace trace;
  trace.question_id = question;
  std::vector<PolicyStep> steps;
  const TokenId stop = env.spec().stop_token;
  const std::size_t na = thinking.actions();

  auto leaf = [&](double prob) {
    if (++visited > opts.cap) throw EnumerationCapExceeded(visited, opts.cap);
    visit(static_cast<const ThinkingTrace&>(trace), prob, std::span<const PolicyStep>(steps));
  };

  auto recurse = [&](auto& self, double prob) -> void {
    if (trace.tokens.size() >= max_length) {
      trace.terminated_naturally = false;
      leaf(prob);
      return;
    }
    PolicyStep step;
    step.position = trace.tokens.size() + 1;
    step.features = to_sparse(env.thinking_features(inst, trace.tokens));
    step.dist = action_distribution(thinking, step.features);
    for (std::size_t k = 0; k < na; ++k) {
      const std::size_t a = opts.reverse_order ? na - 1 - k : k;
      const double p = prob * step.dist.probs[a];
      step.action = static_cast<std::uint32_t>(a);
      steps.push_back(step);
      trace.tokens.push_back({static_cast<TokenId>(a), Origin::Policy});
      if (a == stop) {
        trace.terminated_naturally = true;
        leaf(p);
      } else {
        bool fed_back = false;
        if (trace.tokens.size() < max_length) {
          if (auto fb = env.respond(inst, static_cast<TokenId>(a))) {
            trace.tokens.push_back(*fb);
            fed_back = true;
          }
        }
        self(self, p);
        if (fed_back) trace.tokens.pop_back();
      }
      trace.tokens.pop_back();
      steps.pop_back();
    }
  };
  recurse(recurse, 1.0);
}

/// E_{y ~ summary}[r(x, y)] on one view, exactly.
template <Environment Env>
double exact_view_reward(const Env& env, const typename Env::Instance& inst, const TruncatedView& view,
                         const Summarizer& summary) {
  const std::vector<double> dist = summary.is_oracle()
                                       ? env.oracle_distribution(inst, view)
                                       : action_distribution(summary.params(), env.summary_features(inst, view)).probs;
  double r = 0.0;
  for (std::size_t y = 0; y < dist.size(); ++y)
    if (dist[y] != 0.0) r += dist[y] * env.reward(inst, view, y);
  return r;
}

/// r_phi(x, z_<=b_j).
template <Environment Env>
double exact_budget_reward(const Env& env, const typename Env::Instance& inst, const ThinkingTrace& trace,
                           const BudgetSpec& spec, std::size_t j, const Summarizer& summary) {
  return exact_view_reward(env, inst, truncate(trace, spec, j), summary);
}

template <Environment Env>
BudgetRewards exact_rewards(const Env& env, const typename Env::Instance& inst, const ThinkingTrace& trace,
                            const BudgetSpec& spec, const Summarizer& summary) {
  BudgetRewards out;
  out.samples_per_budget = 0;  // exact
  out.estimates.resize(spec.m());
  for (std::size_t j = 1; j <= spec.m(); ++j) out.estimates[j - 1] = exact_budget_reward(env, inst, trace, spec, j, summary);
  return out;
}

struct ExactObjectives {
  double standard = 0.0;  // J = E[r(x, z)]
  double anytime = 0.0;   // J_anytime = E[sum_j P_j r(x, z_<=b_j)]
};

struct ExactGradients {
  ExactObjectives objectives;
  std::vector<double> thinking;  // grad_theta J_anytime
  std::vector<double> summary;   // grad_phi J_anytime; empty for the oracle summary
};

/// Exact objectives and gradients by enumeration, questions weighted uniformly.
/// The thinking gradient uses the reward-to-go form sum_t grad log pi(z_t) R(x, z, j_t),
/// which equals the full-return form in expectation term by term.
template <Environment Env>
ExactGradients exact_gradients(const Env& env, const PolicyParams& thinking, const Summarizer& summary,
                               const BudgetSpec& spec, const EnumerationOptions& opts = {},
                               bool with_gradients = true) {
  ExactGradients out;
  if (with_gradients) {
    out.thinking.assign(thinking.size(), 0.0);
    if (!summary.is_oracle()) out.summary.assign(summary.params().size(), 0.0);
  }
  const auto questions = env.questions();
  const double wq = 1.0 / static_cast<double>(questions.size());
  const std::size_t m = spec.m();
  std::size_t visited = 0;
  for (QuestionId q : questions) {
    const auto inst = env.instance(q);
    double standard = 0.0;
    double anytime = 0.0;
    enumerate_traces(env, inst, q, thinking, spec.max_budget(), opts, visited,
                     [&](const ThinkingTrace& z, double prob, std::span<const PolicyStep> steps) {
                       std::vector<double> r(m);
                       std::vector<TruncatedView> views;
                       views.reserve(m);
                       for (std::size_t j = 1; j <= m; ++j) {
                         views.push_back(truncate(z, spec, j));
                         r[j - 1] = exact_view_reward(env, inst, views.back(), summary);
                       }
                       double weighted = 0.0;
                       for (std::size_t j = 1; j <= m; ++j) weighted += spec.p(j) * r[j - 1];
                       standard += prob * r[m - 1];
                       anytime += prob * weighted;
                       if (!with_gradients) return;
                       // Tail sums R(j) = sum_{k >= j} P_k r_k.
                       std::vector<double> tail(m + 2, 0.0);
                       for (std::size_t j = m; j >= 1; --j) tail[j] = tail[j + 1] + spec.p(j) * r[j - 1];
                       for (const PolicyStep& s : steps) {
                         const std::size_t jt = nearest_budget_index(s.position, spec);
                         add_log_prob_grad(s.dist, s.features, s.action, wq * prob * tail[jt], out.thinking);
                       }
                       if (summary.is_oracle()) return;
                       for (std::size_t j = 1; j <= m; ++j) {
                         const double pj = spec.p(j);
                         if (pj == 0.0) continue;
                         const SparseFeatures f = to_sparse(env.summary_features(inst, views[j - 1]));
                         const auto dist = action_distribution(summary.params(), f);
                         for (std::size_t y = 0; y < dist.size(); ++y) {
                           const double ry = env.reward(inst, views[j - 1], y);
                           if (ry == 0.0) continue;
                           add_log_prob_grad(dist, f, y, wq * prob * pj * dist.probs[y] * ry, out.summary);
                         }
                       }
                     });
    out.objectives.standard += wq * standard;
    out.objectives.anytime += wq * anytime;
  }
  return out;
}

template <Environment Env>
ExactObjectives exact_objectives(const Env& env, const PolicyParams& thinking, const Summarizer& summary,
                                 const BudgetSpec& spec, const EnumerationOptions& opts = {}) {
  return exact_gradients(env, thinking, summary, spec, opts, false).objectives;
}

/// J_anytime <= J <= J_anytime / P_m under the optimal summary.
struct BoundReport {
  double anytime = 0.0;
  double standard = 0.0;
  double final_probability = 0.0;
  bool left_holds = false;       // J_anytime <= J
  bool right_applicable = false; // P_m > 0
  bool right_holds = false;      // J <= J_anytime / P_m
  bool holds = false;
};

template <Environment Env>
BoundReport bound_check(const Env& env, const PolicyParams& thinking, const BudgetSpec& spec,
                        const EnumerationOptions& opts = {}, double slack = 1e-12) {
  const ExactObjectives obj = exact_objectives(env, thinking, Summarizer::oracle(), spec, opts);
  BoundReport rep;
  rep.anytime = obj.anytime;
  rep.standard = obj.standard;
  rep.final_probability = spec.final_probability();
  rep.left_holds = obj.anytime <= obj.standard + slack;
  rep.right_applicable = rep.final_probability > 0.0;
  if (rep.right_applicable) rep.right_holds = obj.standard <= obj.anytime / rep.final_probability + slack;
  rep.holds = rep.left_holds && (!rep.right_applicable || rep.right_holds);
  return rep;
}

/// Per question: E_z[r(x, z_<=b)] for each raw budget b, and E_z[r(x, z)].
struct BudgetCurveByQuestion {
  std::vector<QuestionId> questions;
  std::vector<std::vector<double>> at_budget;
  std::vector<double> full;
};

template <Environment Env>
BudgetCurveByQuestion exact_budget_curve(const Env& env, const PolicyParams& thinking, const Summarizer& summary,
                                         std::span<const std::size_t> budgets, std::size_t max_length,
                                         const EnumerationOptions& opts = {}) {
  BudgetCurveByQuestion out;
  out.questions = env.questions();
  std::size_t visited = 0;
  for (QuestionId q : out.questions) {
    const auto inst = env.instance(q);
    std::vector<double> acc(budgets.size(), 0.0);
    double full = 0.0;
    enumerate_traces(env, inst, q, thinking, max_length, opts, visited,
                     [&](const ThinkingTrace& z, double prob, std::span<const PolicyStep>) {
                       for (std::size_t k = 0; k < budgets.size(); ++k)
                         acc[k] += prob * exact_view_reward(env, inst, truncate_at(z, budgets[k]), summary);
                       full += prob * exact_view_reward(env, inst, truncate_at(z, max_length), summary);
                     });
    out.at_budget.push_back(std::move(acc));
    out.full.push_back(full);
  }
  return out;
}

/// Total path probability per question (should be 1).
template <Environment Env>
std::vector<double> exact_path_mass(const Env& env, const PolicyParams& thinking, std::size_t max_length,
                                    const EnumerationOptions& opts = {}) {
  std::vector<double> mass;
  std::size_t visited = 0;
  for (QuestionId q : env.questions()) {
    double total = 0.0;
    enumerate_traces(env, env.instance(q), q, thinking, max_length, opts, visited,
                     [&](const ThinkingTrace&, double prob, std::span<const PolicyStep>) { total += prob; });
    mass.push_back(total);
  }
  return mass;
}

/// E_z[ sum_t grad log pi(z_t | z_<t) V(x, z_<t) ] for one question, with the
/// trace's own budget rewards computed exactly and the other group members fixed.
/// Zero for every baseline that only looks at z_<t and at other members.
template <Environment Env>
std::vector<double> exact_baseline_term(const Env& env, QuestionId question, const PolicyParams& thinking,
                                        const Summarizer& summary, const BudgetSpec& spec, const BrpoConfig& brpo,
                                        std::span<const BudgetRewards> others, const EnumerationOptions& opts = {}) {
  const auto inst = env.instance(question);
  std::vector<double> out(thinking.size(), 0.0);
  std::vector<BudgetRewards> group(others.size() + 1);
  std::copy(others.begin(), others.end(), group.begin() + 1);
  std::size_t visited = 0;
  enumerate_traces(env, inst, question, thinking, spec.max_budget(), opts, visited,
                   [&](const ThinkingTrace& z, double prob, std::span<const PolicyStep> steps) {
                     group[0] = exact_rewards(env, inst, z, spec, summary);
                     for (const PolicyStep& s : steps) {
                       const std::size_t jt = nearest_budget_index(s.position, spec);
                       const double v = segment_advantage(group, spec, brpo, 0, jt).baseline;
                       add_log_prob_grad(s.dist, s.features, s.action, prob * v, out);
                     }
                   });
  return out;
}

}  // namespace anytime
