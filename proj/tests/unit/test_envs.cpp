#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "anytime/core/budget.hpp"
#include "anytime/envs/needle_search.hpp"
#include "anytime/envs/scripted.hpp"
#include "anytime/envs/scripted_io.hpp"
#include "helpers.hpp"

using namespace anytime;
using testutil::needle_prefix;

TEST(NeedleSearch, InstanceIsDeterministicAndInRange) {
  const NeedleSearch env(8, 32);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const QuestionId q = env.sample_question(s);
    EXPECT_EQ(q, env.sample_question(s));
    EXPECT_LT(env.instance(q).target, 8u);
  }
}

TEST(NeedleSearch, SizeOneAlwaysTargetsZero) {
  const NeedleSearch env(1, 4);
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(env.instance(env.sample_question(s)).target, 0u);
}

TEST(NeedleSearch, TargetsAreRoughlyUniform) {
  const NeedleSearch env(8, 32);
  std::vector<int> counts(8, 0);
  const int n = 16000;
  for (int s = 0; s < n; ++s) ++counts[env.instance(env.sample_question(s)).target];
  // 5 standard deviations of a binomial(n, 1/8) count.
  for (int c : counts) EXPECT_NEAR(c, n / 8.0, 5.0 * std::sqrt(n * 0.125 * 0.875));
}

TEST(NeedleSearch, RespondExamples) {
  const NeedleSearch env(8, 32);
  const auto inst = env.instance(5);
  EXPECT_EQ(env.respond(inst, 2)->id, env.lo_token());
  EXPECT_EQ(env.respond(inst, 5)->id, env.hit_token());
  EXPECT_EQ(env.respond(inst, 7)->id, env.hi_token());
  EXPECT_EQ(env.respond(inst, 7)->origin, Origin::Env);
}

TEST(NeedleSearch, StopTokenIsAContractViolation) {
  const NeedleSearch env(8, 32);
  EXPECT_THROW(env.respond(env.instance(5), env.stop_token()), ContractViolation);
}

TEST(NeedleSearch, VerifyExamples) {
  const NeedleSearch env(8, 32);
  EXPECT_EQ(env.verify(env.instance(5), 5), 1.0);
  EXPECT_EQ(env.verify(env.instance(5), 4), 0.0);
}

TEST(NeedleSearch, ThinkingFeatureExamples) {
  const NeedleSearch env(8, 32);
  const auto inst = env.instance(5);
  const auto empty = env.thinking_features(inst, {});
  EXPECT_EQ(empty[0 * 8 + 7], 1.0);
  EXPECT_EQ(std::accumulate(empty.begin(), empty.end(), 0.0), 1.0);

  const auto after_lo = env.decode(needle_prefix(env, 5, {3}));
  EXPECT_EQ(after_lo.lo, 4u);
  EXPECT_EQ(after_lo.hi, 7u);
  EXPECT_FALSE(after_lo.hit);

  auto with_hit = needle_prefix(env, 5, {5, 1, 7});
  const auto s = env.decode(with_hit);
  EXPECT_TRUE(s.hit);
  EXPECT_EQ(s.hit_probe, 5u);
  EXPECT_EQ(env.thinking_features(inst, with_hit)[8 * 8 + 5], 1.0);
}

TEST(NeedleSearch, SummaryFeatureExamples) {
  const NeedleSearch env(8, 32);
  const auto inst = env.instance(5);
  TruncatedView hit{needle_prefix(env, 5, {5}), false, 1, 8};
  TruncatedView hit_marked = hit;
  hit_marked.truncated = true;
  const std::size_t a = env.summary_state_index(hit);
  const std::size_t b = env.summary_state_index(hit_marked);
  EXPECT_EQ(b, a + 1);
  EXPECT_EQ(env.summary_state_index(TruncatedView{}), 0u);
  EXPECT_EQ(env.summary_state_index(TruncatedView{{}, true, 1, 0}), 0u);
  EXPECT_EQ(env.summary_features(inst, hit)[a], 1.0);
  // A HIT view and a miss view at the same probe differ.
  TruncatedView miss{needle_prefix(env, 4, {5}), false, 1, 8};
  EXPECT_NE(env.summary_state_index(miss), a);
}

TEST(NeedleSearch, FeasibleIntervalNeverExcludesTarget) {
  const NeedleSearch env(16, 64);
  Rng rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t target = rng.below(16);
    const auto inst = env.instance(target);
    std::vector<Token> prefix;
    bool seen_hit = false;
    for (int k = 0; k < 12; ++k) {
      const auto p = static_cast<TokenId>(rng.below(16));
      prefix.push_back({p, Origin::Policy});
      prefix.push_back(*env.respond(inst, p));
      const auto s = env.decode(prefix);
      ASSERT_LE(s.lo, target);
      ASSERT_GE(s.hi, target);
      // HIT is absorbing; certainty needs a HIT or an interval of width one.
      seen_hit = seen_hit || p == target;
      ASSERT_EQ(s.hit, seen_hit);
      const auto d = env.oracle_distribution(inst, TruncatedView{prefix, false, 0, prefix.size()});
      ASSERT_EQ(d[target] == 1.0, seen_hit || s.lo == s.hi);
    }
  }
}

TEST(NeedleSearch, RespondIsPure) {
  const NeedleSearch env(16, 64);
  for (std::size_t t = 0; t < 16; ++t)
    for (TokenId p = 0; p < 16; ++p) EXPECT_EQ(env.respond(env.instance(t), p), env.respond(env.instance(t), p));
}

TEST(NeedleSearch, OracleAnswerExamples) {
  const NeedleSearch env(8, 32);
  const std::vector<double> prio(8, 0.5);
  EXPECT_EQ(env.oracle_answer(env.instance(5), TruncatedView{needle_prefix(env, 5, {5}), false, 1, 2}, prio), 5u);
  const NeedleSearch one(1, 4);
  EXPECT_EQ(one.oracle_answer(one.instance(0), TruncatedView{}, std::vector<double>{0.3}), 0u);
}

TEST(NeedleSearch, OracleExpectedRewardIsOneOverWidth) {
  const NeedleSearch env(16, 64);
  const auto prefix = needle_prefix(env, 11, {3, 13});  // feasible [4, 12]
  const auto d = env.oracle_distribution(env.instance(11), TruncatedView{prefix, false, 0, 4});
  double r = 0.0;
  for (std::size_t y = 0; y < 16; ++y) r += d[y] * env.verify(env.instance(11), y);
  EXPECT_DOUBLE_EQ(r, 1.0 / 9.0);
}

TEST(ScriptedEnv, InstanceIsTheConfiguredTable) {
  const auto env = testutil::small_scripted(3);
  const auto inst = env.instance(1);
  EXPECT_EQ(inst.table.get(), &env.table());
  EXPECT_EQ(inst.question_id, 1u);
  EXPECT_THROW(env.instance(9), ValidationError);
}

TEST(ScriptedEnv, RewardIsTheTableValue) {
  const auto env = testutil::small_scripted(3);
  const auto& t = env.table();
  for (const auto& [key, r] : t.rows) {
    if (key.budget_index == 0) continue;
    TruncatedView v;
    for (TokenId s : key.prefix) v.prefix.push_back({s, Origin::Policy});
    v.budget_index = key.budget_index;
    ASSERT_EQ(env.reward(env.instance(key.question), v, key.answer), r);
  }
}

TEST(ScriptedEnv, StopTokenIsAContractViolation) {
  const auto env = testutil::small_scripted(3);
  EXPECT_FALSE(env.respond(env.instance(0), 0).has_value());
  EXPECT_THROW(env.respond(env.instance(0), env.spec().stop_token), ContractViolation);
}

TEST(ScriptedEnv, RandomTableCoversEveryReachablePair) {
  const auto t = random_scripted_table(2, 2, 3, 2, {0}, 1);
  // Reachable prefixes: sequences over {0,1} up to length 3, plus each one
  // (shorter than 3) followed by stop: 1+2+4+8 + (1+2+4) = 22.
  std::set<std::vector<TokenId>> prefixes;
  for (const auto& [key, r] : t.rows) prefixes.insert(key.prefix);
  EXPECT_EQ(prefixes.size(), 22u);
  EXPECT_EQ(t.rows.size(), 22u * 2 * 2);
}

TEST(ScriptedIo, ParsesDirectivesAndRows) {
  std::istringstream in(
      "# tiny\n"
      "alphabet 2\nanswers 2\nmax_length 3\nquestions 0 4\ndefault 0\n"
      "reward 4 * 0,1 1 1\n"
      "reward 4 2 0,s 0 1\n"
      "reward 0 * - 1 1\n");
  const ScriptedTable t = parse_scripted_table(in);
  EXPECT_EQ(t.alphabet, 2u);
  EXPECT_EQ(t.questions, (std::vector<QuestionId>{0, 4}));
  EXPECT_EQ(t.lookup(4, 3, {0, 1}, 1), 1.0);
  EXPECT_EQ(t.lookup(4, 2, {0, 2}, 0), 1.0);
  EXPECT_EQ(t.lookup(4, 1, {0, 2}, 0), 0.0);
  EXPECT_EQ(t.lookup(0, 1, {}, 1), 1.0);
}

TEST(ScriptedIo, RejectsMalformedTables) {
  const char* bad[] = {
      "alphabet 2\nanswers 2\nmax_length 3\nquestions 0\nreward 0 * 0 5 1\n",    // answer out of range
      "alphabet 2\nanswers 2\nmax_length 3\nquestions 0\nreward 0 * 0 1 0.5\n",  // non-binary reward
      "alphabet 2\nanswers 2\nmax_length 3\nquestions 0\nreward 1 * 0 1 1\n",    // unknown question
      "alphabet 2\nanswers 2\nmax_length 1\nquestions 0\nreward 0 * 0,1 1 1\n",  // too long
      "alphabet 2\nanswers 2\nmax_length 3\nquestions 0\nreward 0 * s,0 1 1\n",  // stop not last
      "alphabet 2\nanswers 2\nfrobnicate 3\n",
  };
  for (const char* text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(parse_scripted_table(in), ValidationError) << text;
  }
}
