#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "anytime/app/commands.hpp"
#include "anytime/app/config.hpp"
#include "anytime/app/rollout_log.hpp"
#include "anytime/app/verify.hpp"

using namespace anytime;
using namespace anytime::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anytime_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse(const std::string& text, const KeyValues& overrides = {}) {
  std::istringstream in(text);
  return resolve_config(parse_key_values(in), overrides);
}

const char* kTiny =
    "needle_size = 4\n"
    "budgets = 2,4,6\n"
    "iterations = 2\n"
    "batch_questions = 2\n"
    "group_size = 2\n"
    "summary_samples = 2\n"
    "summary_group = 2\n"
    "eval_samples = 2\n"
    "eval_questions = 8\n"
    "eval_every = 1\n"
    "wall_clock = false\n";

}  // namespace

TEST(Config, DefaultsAndComments) {
  const RunConfig c = parse("# nothing but a comment\n\nseed = 9  # trailing\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.env, "needle");
  EXPECT_EQ(c.budgets, (std::vector<std::size_t>{8, 16, 24, 32}));
  EXPECT_EQ(c.advantage_mode, AdvantageMode::BRPO);
  EXPECT_EQ(c.lambda, 0.5);
}

TEST(Config, PresetsSetTheirKeys) {
  const RunConfig a = parse("preset = anytime-uniform\n");
  EXPECT_EQ(a.thinking_prior, "uniform");
  EXPECT_EQ(a.advantage_mode, AdvantageMode::BRPO);
  const RunConfig g = parse("preset = grpo-baseline\n");
  EXPECT_EQ(g.thinking_prior, "base");
  EXPECT_EQ(g.advantage_mode, AdvantageMode::GRPO);
  EXPECT_EQ(g.summary_prior, "coupled");
  const RunConfig d = parse("preset = ablation-dense-rewards\n");
  EXPECT_EQ(d.thinking_prior, "linear");
  EXPECT_EQ(d.advantage_mode, AdvantageMode::V2Only);
  EXPECT_EQ(presets().size(), 9u);
  for (const auto& [name, kv] : presets()) EXPECT_NO_THROW(parse("preset = " + name + "\n")) << name;
}

TEST(Config, FileKeysAndOverridesWinOverPreset) {
  const RunConfig c = parse("preset = grpo-baseline\nadvantage_mode = brpo\n", {{"seed", "5"}});
  EXPECT_EQ(c.advantage_mode, AdvantageMode::BRPO);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.preset, "grpo-baseline");
}

TEST(Config, ErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("lambda = 2\n").find("lambda"), std::string::npos);
  EXPECT_NE(message("group_size = -1\n").find("group_size"), std::string::npos);
  EXPECT_NE(message("advantage_mode = ppo\n").find("advantage_mode"), std::string::npos);
  EXPECT_NE(message("budgets = 8,4\n").find("budget"), std::string::npos);
  EXPECT_NE(message("colour = red\n").find("colour"), std::string::npos);
  EXPECT_NE(message("preset = nope\n").find("preset"), std::string::npos);
  EXPECT_NE(message("just words\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("env = scripted\n").find("scripted_table"), std::string::npos);
  EXPECT_THROW(parse_override("novalue"), ValidationError);
}

TEST(Config, RenderRoundTrips) {
  const RunConfig c = parse("preset = ablation-length-penalty-v2\nthinking_lr = 0.0123456789\nbudgets = 3,7\n"
                            "thinking_prior = custom\nprior_probs = 0.25,0.75\nleave_one_out = true\n");
  const std::string text = render_config(c);
  const RunConfig back = parse(text);
  EXPECT_EQ(render_config(back), text);
  EXPECT_EQ(back.thinking_lr, c.thinking_lr);
  EXPECT_EQ(back.prior_probs, c.prior_probs);
}

TEST(RunDir, NeverReusesADirectory) {
  const fs::path root = scratch("rundir");
  const fs::path a = create_run_dir(root, "x");
  const fs::path b = create_run_dir(root, "x");
  const fs::path c = create_run_dir(root, "x");
  EXPECT_NE(a, b);
  EXPECT_NE(b, c);
  EXPECT_EQ(b.filename(), "x-1");
  EXPECT_EQ(checkpoint_name(42), "iter_000042.bin");
}

TEST(TrainRun, WritesArtifactsAndIsDeterministic) {
  const fs::path root = scratch("train");
  const RunConfig c = parse(kTiny, {{"log_rollouts", "true"}});
  std::ostringstream log;
  const fs::path a = train_run(c, kTiny, root, "run", log);
  const fs::path b = train_run(c, kTiny, root, "run", log);
  for (const char* f : {"metrics.csv", "rollouts.jsonl", "resolved_config.txt", "checkpoints/iter_000002.bin"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(slurp(a / "config.txt"), kTiny);
  const std::string metrics = slurp(a / "metrics.csv");
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')),
            "iteration,anytime_accuracy,final_accuracy,mean_thinking_length,wall_time_s");
  // wall_clock = false leaves the last column empty.
  EXPECT_NE(metrics.find(",\n"), std::string::npos);
  for (int it = 0; it <= 2; ++it) EXPECT_TRUE(fs::exists(a / "checkpoints" / checkpoint_name(it)));
}

TEST(RolloutLog, RoundTripAndReplay) {
  const fs::path root = scratch("rollouts");
  const RunConfig c = parse(kTiny, {{"log_rollouts", "true"}});
  std::ostringstream log;
  const fs::path dir = train_run(c, kTiny, root, "run", log);
  std::ifstream in(dir / "rollouts.jsonl");
  const auto records = read_rollouts(in);
  // 2 iterations x 2 questions x 2 members.
  ASSERT_EQ(records.size(), 8u);
  for (const auto& r : records) {
    EXPECT_EQ(r.rewards.size(), 3u);
    EXPECT_EQ(r.run_seed, c.seed);
    EXPECT_EQ(from_json(to_json(r)).tokens, r.tokens);
  }
  replay_rollouts(dir / "rollouts.jsonl", root / "replay.csv");
  const std::string replay = slurp(root / "replay.csv");
  EXPECT_EQ(std::count(replay.begin(), replay.end(), '\n'), 3);  // header + one row per iteration
  std::istringstream bad("{\"iteration\": 1}\n");
  EXPECT_THROW(read_rollouts(bad), ValidationError);
}

TEST(EvalAndDiagnose, ByteDeterministicOutputs) {
  const fs::path root = scratch("eval");
  const RunConfig c = parse(kTiny);
  std::ostringstream log;
  const fs::path dir = train_run(c, kTiny, root, "run", log);
  const std::string ck = (dir / "checkpoints" / checkpoint_name(2)).string();
  for (const char* sub : {"e1", "e2"}) {
    EvalOptions e;
    e.checkpoint = ck;
    e.out_dir = root / sub;
    eval_checkpoint(c, e);
    DiagnoseOptions d;
    d.checkpoint = ck;
    d.groups = 16;
    d.out_dir = root / sub;
    diagnose_checkpoint(c, d);
  }
  for (const char* f : {"curves.csv", "curve_summary.csv", "correlation.csv", "variance.csv", "credit.csv"})
    EXPECT_EQ(slurp(root / "e1" / f), slurp(root / "e2" / f)) << f;
  const std::string summary = slurp(root / "e1" / "curve_summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "config,prior,auc,final_accuracy");
  for (const char* prior : {",base,", ",uniform,", ",linear,"}) EXPECT_NE(summary.find(prior), std::string::npos);
}

TEST(EvalAndDiagnose, ZeroGroupsGivesHeadersOnly) {
  const fs::path root = scratch("diag0");
  const RunConfig c = parse(kTiny);
  std::ostringstream log;
  const fs::path dir = train_run(c, kTiny, root, "run", log);
  DiagnoseOptions d;
  d.checkpoint = (dir / "checkpoints" / checkpoint_name(0)).string();
  d.groups = 0;
  d.out_dir = root / "out";
  diagnose_checkpoint(c, d);
  EXPECT_EQ(slurp(root / "out" / "correlation.csv"), "segment,corr_v1,corr_v2\n");
  EXPECT_EQ(slurp(root / "out" / "variance.csv"), "segment,mode,ratio\n");
  EXPECT_EQ(slurp(root / "out" / "credit.csv"), "group,member,segment,return,v1,v2,baseline,advantage\n");
}

TEST(EvalAndDiagnose, MissingOrMismatchedCheckpoint) {
  const RunConfig c = parse(kTiny);
  EvalOptions e;
  e.checkpoint = "/nonexistent/iter_000000.bin";
  EXPECT_THROW(eval_checkpoint(c, e), ValidationError);
  const fs::path root = scratch("mismatch");
  std::ostringstream log;
  const fs::path dir = train_run(c, kTiny, root, "run", log);
  e.checkpoint = (dir / "checkpoints" / checkpoint_name(0)).string();
  e.out_dir = root / "out";
  EXPECT_THROW(eval_checkpoint(parse(kTiny, {{"needle_size", "5"}}), e), ValidationError);
}

TEST(Verify, QuickModePassesAndMarksRightBoundNotApplicable) {
  VerifyOptions o;
  o.config = parse("needle_size = 4\nbudgets = 2,4,6\nthinking_prior = custom\nprior_probs = 0.5,0.5,0\n");
  const VerifyReport rep = run_verify(o);
  EXPECT_TRUE(rep.passed());
  bool found = false;
  for (const auto& c : rep.checks) {
    if (c.name == "bounds/config-right") {
      found = true;
      EXPECT_EQ(c.status, CheckStatus::NotApplicable);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Verify, MutationIsDetected) {
  VerifyOptions o;
  o.mutation = V1Mutation::IncludeCurrentBudget;
  const VerifyReport rep = run_verify(o);
  EXPECT_FALSE(rep.passed());
  for (const auto& c : rep.checks)
    if (c.name == "baseline-zero/brpo") EXPECT_EQ(c.status, CheckStatus::Fail);
}
