#include <gtest/gtest.h>

#include <vector>

#include "anytime/advantage/brpo.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/envs/needle_search.hpp"
#include "anytime/rollout/rollout.hpp"
#include "helpers.hpp"

using namespace anytime;
using testutil::rewards_of;

namespace {

const BudgetSpec kUniform = make_prior(PriorKind::Uniform, {8, 16, 24, 32});

RolloutGroup group_of(std::vector<BudgetRewards> rewards, std::vector<ThinkingTrace> traces) {
  RolloutGroup g;
  g.rewards = std::move(rewards);
  g.traces = std::move(traces);
  return g;
}

/// Policy-only trace of length n (no feedback tokens).
ThinkingTrace policy_trace(std::size_t n) {
  ThinkingTrace z;
  for (std::size_t i = 0; i < n; ++i) z.tokens.push_back({static_cast<TokenId>(i % 3), Origin::Policy});
  return z;
}

}  // namespace

TEST(ComputeReturn, Examples) {
  const auto r = rewards_of({0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(compute_return(r, kUniform, 1), 0.5);
  EXPECT_DOUBLE_EQ(compute_return(r, kUniform, 4), 0.25);
  const auto linear = make_prior(PriorKind::Linear, {2000, 4000, 6000, 8000});
  EXPECT_NEAR(compute_return(rewards_of({0, 1, 1, 1}), linear, 2), 0.9, 1e-15);
  EXPECT_THROW(compute_return(r, kUniform, 0), std::out_of_range);
  EXPECT_THROW(compute_return(r, kUniform, 5), std::out_of_range);
}

TEST(ComputeReturn, TailIsNonincreasing) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto spec = make_prior(static_cast<PriorKind>(rng.below(3)), {3, 5, 9, 10, 20});
    std::vector<double> r(5);
    for (double& x : r) x = rng.uniform();
    for (std::size_t j = 2; j <= 5; ++j)
      ASSERT_LE(compute_return(rewards_of(r), spec, j), compute_return(rewards_of(r), spec, j - 1) + 1e-15);
  }
}

TEST(V1Baseline, Examples) {
  const auto r = rewards_of({0, 1, 1, 1});
  EXPECT_EQ(v1_baseline(r, kUniform, 1, 0.5), 0.0);
  EXPECT_NEAR(v1_baseline(r, kUniform, 3, 0.5), 1.0 / 3.0, 1e-15);
}

TEST(V1Baseline, ConstantHistoryGivesConstantTimesTail) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double c = rng.uniform();
    const double lambda = rng.uniform();
    const auto spec = make_prior(PriorKind::Linear, {1, 2, 4, 8, 16});
    const auto r = rewards_of({c, c, c, c, c});
    for (std::size_t j = 2; j <= 5; ++j)
      ASSERT_NEAR(v1_baseline(r, spec, j, lambda), c * spec.tail_mass(j), 1e-14);
  }
}

TEST(V1Baseline, LambdaZeroUsesOnlyThePreviousBudget) {
  const auto r = rewards_of({1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(v1_baseline(r, kUniform, 3, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(v1_baseline(r, kUniform, 4, 0.0), 0.25);
}

TEST(V2Baseline, Examples) {
  // Returns at j = 4 under the uniform prior are 0.25 * r_4.
  const std::vector<BudgetRewards> g{rewards_of({0, 0, 0, 0.8}), rewards_of({0, 0, 0, 2.4})};
  EXPECT_NEAR(v2_baseline(g, kUniform, 4, false, 0), 0.4, 1e-15);
  EXPECT_NEAR(v2_baseline(g, kUniform, 4, true, 0), 0.6, 1e-15);
  const std::vector<BudgetRewards> same(5, rewards_of({1, 0, 1, 1}));
  EXPECT_NEAR(v2_baseline(same, kUniform, 2, false, 3), compute_return(same[0], kUniform, 2), 1e-15);
  const std::vector<BudgetRewards> single{rewards_of({1, 1, 1, 1})};
  EXPECT_THROW(v2_baseline(single, kUniform, 1, true, 0), ValidationError);
  EXPECT_THROW(v2_baseline(std::vector<BudgetRewards>{}, kUniform, 1, false, 0), ValidationError);
}

TEST(CombinedBaseline, Examples) {
  EXPECT_DOUBLE_EQ(combined_baseline(7.0, 0.3, 1, 4), 0.3);
  EXPECT_DOUBLE_EQ(combined_baseline(0.2, 0.6, 4, 4), 0.75 * 0.2 + 0.25 * 0.6);
  for (std::size_t j = 1; j <= 7; ++j) EXPECT_NEAR(combined_baseline(0.37, 0.37, j, 7), 0.37, 1e-15);
  // Weights sum to one.
  for (std::size_t m = 1; m <= 9; ++m)
    for (std::size_t j = 1; j <= m; ++j) EXPECT_NEAR(combined_baseline(1.0, 1.0, j, m), 1.0, 1e-15);
}

TEST(AdvantageProfile, ConstantGroupGrpoIsZero) {
  const auto g = group_of(std::vector<BudgetRewards>(4, rewards_of({0, 1, 1, 1})),
                          std::vector<ThinkingTrace>(4, policy_trace(30)));
  BrpoConfig cfg;
  cfg.mode = AdvantageMode::GRPO;
  for (std::size_t i = 0; i < 4; ++i)
    for (const auto& rec : advantage_profile(g.traces[i], g, kUniform, cfg, i).records) EXPECT_EQ(rec.advantage, 0.0);
}

TEST(AdvantageProfile, BrpoFlatRewardsGiveZero) {
  const auto g = group_of(std::vector<BudgetRewards>(3, rewards_of({0.5, 0.5, 0.5, 0.5})),
                          std::vector<ThinkingTrace>(3, policy_trace(32)));
  for (std::size_t i = 0; i < 3; ++i)
    for (const auto& rec : advantage_profile(g.traces[i], g, kUniform, BrpoConfig{}, i).records)
      EXPECT_NEAR(rec.advantage, 0.0, 1e-15);
}

TEST(AdvantageProfile, RecordsCoverPolicyTokensWithCorrectSegments) {
  const NeedleSearch env(16, 32);
  Rng prng(3);
  const auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, prng);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto g = collect_group(env, env.sample_question(s), th, Summarizer::oracle(), kUniform, 4, 2, s);
    for (AdvantageMode mode : {AdvantageMode::BRPO, AdvantageMode::V2Only, AdvantageMode::GRPO}) {
      BrpoConfig cfg;
      cfg.mode = mode;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto prof = advantage_profile(g.traces[i], g, kUniform, cfg, i);
        std::size_t policy_tokens = 0;
        for (const auto& t : g.traces[i].tokens) policy_tokens += t.origin == Origin::Policy;
        ASSERT_EQ(prof.records.size(), policy_tokens);
        for (const auto& rec : prof.records) {
          ASSERT_EQ(g.traces[i].tokens[rec.position - 1].origin, Origin::Policy);
          const std::size_t prev = rec.budget_index == 1 ? 0 : kUniform.b(rec.budget_index - 1);
          ASSERT_LT(prev, rec.position);
          ASSERT_LE(rec.position, kUniform.b(rec.budget_index));
          ASSERT_EQ(rec.advantage, rec.ret - rec.baseline);
        }
      }
    }
  }
}

TEST(AdvantageProfile, GrpoUsesFinalRewardMinusGroupMean) {
  const auto g = group_of({rewards_of({0, 0, 0, 1}), rewards_of({1, 1, 1, 0}), rewards_of({0, 1, 1, 1})},
                          std::vector<ThinkingTrace>(3, policy_trace(5)));
  BrpoConfig cfg;
  cfg.mode = AdvantageMode::GRPO;
  const auto prof = advantage_profile(g.traces[0], g, kUniform, cfg, 0);
  for (const auto& rec : prof.records) EXPECT_NEAR(rec.advantage, 1.0 - 2.0 / 3.0, 1e-15);
  cfg.leave_one_out = true;
  for (const auto& rec : advantage_profile(g.traces[1], g, kUniform, cfg, 1).records)
    EXPECT_NEAR(rec.advantage, 0.0 - 1.0, 1e-15);
}

TEST(AdvantageProfile, V2OnlyIgnoresHistory) {
  const auto g = group_of({rewards_of({0, 1, 1, 1}), rewards_of({0, 0, 0, 0})},
                          std::vector<ThinkingTrace>(2, policy_trace(32)));
  BrpoConfig cfg;
  cfg.mode = AdvantageMode::V2Only;
  for (const auto& rec : advantage_profile(g.traces[0], g, kUniform, cfg, 0).records) {
    const double R = compute_return(g.rewards[0], kUniform, rec.budget_index);
    EXPECT_NEAR(rec.advantage, R - R / 2.0, 1e-15);
  }
}

// Changing anything at or after segment j_t (later rewards of the trace itself)
// must not move the baseline at t. The V1 mutation breaks exactly this.
TEST(AdvantageProfile, BaselineIsPrefixMeasurable) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<BudgetRewards> group;
    for (int i = 0; i < 4; ++i) group.push_back(rewards_of({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}));
    const std::size_t j = 1 + rng.below(4);
    auto changed = group;
    for (std::size_t k = j; k <= 4; ++k) changed[0].estimates[k - 1] = rng.uniform();
    BrpoConfig cfg;
    cfg.leave_one_out = true;
    const double before = segment_advantage(group, kUniform, cfg, 0, j).baseline;
    const double after = segment_advantage(changed, kUniform, cfg, 0, j).baseline;
    ASSERT_EQ(before, after);
    cfg.v1_mutation = V1Mutation::IncludeCurrentBudget;
    if (j > 1 && changed[0].at(j) != group[0].at(j))
      ASSERT_NE(segment_advantage(group, kUniform, cfg, 0, j).baseline,
                segment_advantage(changed, kUniform, cfg, 0, j).baseline);
  }
}

TEST(BrpoConfig, Validation) {
  BrpoConfig c;
  c.lambda = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c.lambda = -0.1;
  EXPECT_THROW(c.validate(), ValidationError);
  c.lambda = 1.0;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(parse_advantage_mode("v2only"), AdvantageMode::V2Only);
  EXPECT_THROW(parse_advantage_mode("ppo"), ValidationError);
}
