#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "anytime/envs/needle_search.hpp"
#include "anytime/envs/scripted_io.hpp"
#include "anytime/oracle/enumeration.hpp"
#include "helpers.hpp"

using namespace anytime;

namespace {

// One policy symbol (0) plus stop (1), length <= 2, two answers. Zero thinking
// params give the traces [s] (1/2), [0 s] (1/4), [0 0] (1/4).
ScriptedEnv hand_table() {
  std::istringstream in(
      "alphabet 1\nanswers 2\nmax_length 2\nquestions 0\ndefault 0\n"
      "reward 0 * 0 1 1\n"
      "reward 0 * 0,0 1 1\n");
  return ScriptedEnv(parse_scripted_table(in));
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST(Enumeration, PathMassSumsToOne) {
  Rng rng(1);
  const auto env = testutil::small_scripted(3);
  const NeedleSearch needle(4, 6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, rng, 2.0);
    for (double m : exact_path_mass(env, th, 6)) EXPECT_NEAR(m, 1.0, 1e-12);
    const auto nth = testutil::random_params(needle.spec().thinking_dim, needle.spec().action_count, rng, 2.0);
    for (double m : exact_path_mass(needle, nth, 6)) EXPECT_NEAR(m, 1.0, 1e-12);
  }
}

TEST(Enumeration, CapIsEnforced) {
  const auto env = testutil::small_scripted(3);
  const PolicyParams th(env.spec().thinking_dim, env.spec().action_count);
  EnumerationOptions o;
  o.cap = 50;
  EXPECT_THROW(exact_path_mass(env, th, 6, o), EnumerationCapExceeded);
}

TEST(ExactObjectives, HandComputedTable) {
  const auto env = hand_table();
  const PolicyParams th(env.spec().thinking_dim, env.spec().action_count);
  const PolicyParams ph(env.spec().summary_dim, 2);
  const auto spec = make_prior(PriorKind::Uniform, {1, 2});
  // Learned uniform summary: budget 1 pays 1/2 on [0 .. ], budget 2 pays 1/2 on [0 0].
  const auto learned = exact_objectives(env, th, Summarizer::learned(ph), spec);
  EXPECT_NEAR(learned.standard, 0.25 * 0.5, 1e-15);
  EXPECT_NEAR(learned.anytime, 0.5 * (0.5 * 0.5) + 0.5 * (0.25 * 0.5), 1e-15);
  // Optimal summary picks answer 1 wherever it pays.
  const auto oracle = exact_objectives(env, th, Summarizer::oracle(), spec);
  EXPECT_NEAR(oracle.standard, 0.25, 1e-15);
  EXPECT_NEAR(oracle.anytime, 0.5 * 0.5 + 0.5 * 0.25, 1e-15);
  // This table rewards [0] but not [0 s], so it is not monotone and the left
  // inequality fails; bound_check must say so.
  EXPECT_FALSE(bound_check(env, th, spec).left_holds);
}

TEST(ExactObjectives, BasePriorFallsBackToStandard) {
  Rng rng(2);
  const auto env = testutil::small_scripted(4);
  const auto spec = make_prior(PriorKind::Base, {2, 4, 6});
  for (int trial = 0; trial < 5; ++trial) {
    const auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, rng);
    const auto ph = testutil::random_params(env.spec().summary_dim, env.spec().answer_count, rng);
    const auto o = exact_objectives(env, th, Summarizer::learned(ph), spec);
    EXPECT_EQ(o.anytime, o.standard);
  }
}

TEST(ExactObjectives, ZeroRewardGivesZero) {
  const ScriptedEnv env(random_scripted_table(2, 2, 4, 2, {0}, 1, 0.0));
  const PolicyParams th(env.spec().thinking_dim, env.spec().action_count);
  const auto o = exact_objectives(env, th, Summarizer::oracle(), make_prior(PriorKind::Uniform, {2, 4}));
  EXPECT_EQ(o.standard, 0.0);
  EXPECT_EQ(o.anytime, 0.0);
}

TEST(ExactObjectives, InvariantToEnumerationOrder) {
  Rng rng(3);
  const auto env = testutil::small_scripted(5);
  const auto spec = make_prior(PriorKind::Linear, {2, 4, 6});
  EnumerationOptions rev;
  rev.reverse_order = true;
  for (int trial = 0; trial < 5; ++trial) {
    const auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, rng);
    const auto ph = testutil::random_params(env.spec().summary_dim, env.spec().answer_count, rng);
    const auto a = exact_gradients(env, th, Summarizer::learned(ph), spec);
    const auto b = exact_gradients(env, th, Summarizer::learned(ph), spec, rev);
    EXPECT_NEAR(a.objectives.anytime, b.objectives.anytime, 1e-14);
    EXPECT_NEAR(a.objectives.standard, b.objectives.standard, 1e-14);
    EXPECT_LT(rel_l2(a.thinking, b.thinking), 1e-12);
    EXPECT_LT(rel_l2(a.summary, b.summary), 1e-12);
  }
}

TEST(ExactGradients, MatchCentralFiniteDifferences) {
  Rng rng(4);
  const auto env = testutil::small_scripted(6);
  const auto spec = make_prior(PriorKind::Uniform, {2, 4, 6});
  const double h = 1e-5;
  for (int trial = 0; trial < 3; ++trial) {
    auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, rng);
    auto ph = testutil::random_params(env.spec().summary_dim, env.spec().answer_count, rng);
    const auto g = exact_gradients(env, th, Summarizer::learned(ph), spec);
    std::vector<double> fd_th(th.size()), fd_ph(ph.size());
    for (std::size_t i = 0; i < th.size(); ++i) {
      const double keep = th.values()[i];
      th.values()[i] = keep + h;
      const double up = exact_objectives(env, th, Summarizer::learned(ph), spec).anytime;
      th.values()[i] = keep - h;
      const double down = exact_objectives(env, th, Summarizer::learned(ph), spec).anytime;
      th.values()[i] = keep;
      fd_th[i] = (up - down) / (2 * h);
    }
    for (std::size_t i = 0; i < ph.size(); ++i) {
      const double keep = ph.values()[i];
      ph.values()[i] = keep + h;
      const double up = exact_objectives(env, th, Summarizer::learned(ph), spec).anytime;
      ph.values()[i] = keep - h;
      const double down = exact_objectives(env, th, Summarizer::learned(ph), spec).anytime;
      ph.values()[i] = keep;
      fd_ph[i] = (up - down) / (2 * h);
    }
    EXPECT_LT(rel_l2(g.thinking, fd_th), 1e-6);
    EXPECT_LT(rel_l2(g.summary, fd_ph), 1e-6);
  }
}

// Swapping symbols 0 and 1 maps the table to itself, so J is even along the
// direction that favours 0 over 1 at any position: zero derivative at theta = 0.
TEST(ExactGradients, StationaryAlongASymmetricDirection) {
  auto table = random_scripted_table(2, 2, 4, 2, {0}, 9);
  auto rows = table.rows;
  for (const auto& [key, r] : rows) {
    auto swapped = key;
    for (auto& s : swapped.prefix)
      if (s < 2) s = 1 - s;
    if (swapped.prefix < key.prefix) table.rows[swapped] = r;
  }
  for (const auto& [key, r] : table.rows) {
    auto swapped = key;
    for (auto& s : swapped.prefix)
      if (s < 2) s = 1 - s;
    ASSERT_EQ(table.rows.at(swapped), r);
  }
  const ScriptedEnv env(table);
  const PolicyParams th(env.spec().thinking_dim, env.spec().action_count);
  const PolicyParams ph(env.spec().summary_dim, 2);
  const auto g = exact_gradients(env, th, Summarizer::learned(ph), make_prior(PriorKind::Uniform, {2, 4}));
  const std::size_t na = env.spec().action_count;
  bool nontrivial = false;
  for (std::size_t pos = 0; pos < 4; ++pos) {
    const std::size_t f = 3 + pos;  // position features follow the 3 last-symbol slots
    EXPECT_NEAR(g.thinking[f * na + 0] - g.thinking[f * na + 1], 0.0, 1e-14);
    nontrivial = nontrivial || std::abs(g.thinking[f * na + 0]) > 1e-6;
  }
  EXPECT_TRUE(nontrivial);
}

TEST(BoundCheck, HoldsOnNeedleSearchForAllPriors) {
  Rng rng(5);
  const NeedleSearch env(4, 6);
  for (PriorKind k : {PriorKind::Base, PriorKind::Uniform, PriorKind::Linear}) {
    const auto spec = make_prior(k, {2, 4, 6});
    for (int trial = 0; trial < 10; ++trial) {
      const auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, rng, 1.5);
      const auto b = bound_check(env, th, spec);
      EXPECT_TRUE(b.holds);
      EXPECT_TRUE(b.right_applicable);
      if (k == PriorKind::Base) EXPECT_EQ(b.anytime, b.standard);
    }
  }
}

TEST(BoundCheck, RightSideNotApplicableWhenFinalMassIsZero) {
  const NeedleSearch env(4, 6);
  const PolicyParams th(env.spec().thinking_dim, env.spec().action_count);
  const auto b = bound_check(env, th, BudgetSpec({2, 4, 6}, {0.5, 0.5, 0.0}));
  EXPECT_FALSE(b.right_applicable);
  EXPECT_TRUE(b.left_holds);
  EXPECT_TRUE(b.holds);
}

TEST(BoundCheck, RewardAlwaysOne) {
  const ScriptedEnv env(random_scripted_table(2, 2, 4, 2, {0}, 1, 1.0));
  const PolicyParams th(env.spec().thinking_dim, env.spec().action_count);
  const auto b = bound_check(env, th, make_prior(PriorKind::Uniform, {2, 4}));
  EXPECT_DOUBLE_EQ(b.anytime, 1.0);
  EXPECT_DOUBLE_EQ(b.standard, 1.0);
  EXPECT_TRUE(b.holds);
  EXPECT_GE(b.anytime / b.final_probability, 1.0);
}

TEST(ExactBudgetCurve, OptimalSummaryIsMonotoneAndBelowFull) {
  Rng rng(6);
  const NeedleSearch env(4, 8);
  const std::vector<std::size_t> grid{0, 1, 2, 3, 4, 5, 6, 7, 8};
  for (int trial = 0; trial < 5; ++trial) {
    const auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, rng, 1.5);
    const auto c = exact_budget_curve(env, th, Summarizer::oracle(), grid, 8);
    for (std::size_t q = 0; q < c.questions.size(); ++q) {
      EXPECT_NEAR(c.at_budget[q][0], 0.25, 1e-15);  // empty view: uniform guess over 4
      for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_LE(c.at_budget[q][k - 1], c.at_budget[q][k] + 1e-15);
      for (double v : c.at_budget[q]) EXPECT_LE(v, c.full[q] + 1e-15);
    }
  }
}

TEST(BaselineTerm, VanishesForPrefixMeasurableBaselines) {
  Rng rng(7);
  const auto env = testutil::small_scripted(8);
  const auto spec = make_prior(PriorKind::Uniform, {2, 4, 6});
  const auto th = testutil::random_params(env.spec().thinking_dim, env.spec().action_count, rng);
  const std::vector<BudgetRewards> others{testutil::rewards_of({0.2, 0.7, 1.0}), testutil::rewards_of({0, 0, 1})};
  for (AdvantageMode mode : {AdvantageMode::BRPO, AdvantageMode::V2Only, AdvantageMode::GRPO}) {
    BrpoConfig cfg;
    cfg.mode = mode;
    cfg.leave_one_out = true;
    for (double x : exact_baseline_term(env, 0, th, Summarizer::oracle(), spec, cfg, others)) EXPECT_NEAR(x, 0.0, 1e-12);
  }
  BrpoConfig bad;
  bad.leave_one_out = true;
  bad.v1_mutation = V1Mutation::IncludeCurrentBudget;
  double worst = 0.0;
  for (double x : exact_baseline_term(env, 0, th, Summarizer::oracle(), spec, bad, others))
    worst = std::max(worst, std::abs(x));
  EXPECT_GT(worst, 1e-4);
}
