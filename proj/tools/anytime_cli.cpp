// Command-line front end: train, eval, diagnose, verify, replay.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anytime/app/commands.hpp"
#include "anytime/app/config.hpp"
#include "anytime/app/verify.hpp"

namespace fs = std::filesystem;
using namespace anytime;
using namespace anytime::app;

namespace {

struct ConfigArgs {
  std::string config;
  std::string run;
  std::string preset;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "key = value config file");
    cmd->add_option("--run", run, "run directory; reads its resolved_config.txt");
    cmd->add_option("-p,--preset", preset, "named preset applied before the file's keys");
    cmd->add_option("-s,--set", sets, "override, key=value (repeatable)");
  }

  /// Returns the resolved config and the verbatim source text.
  std::pair<RunConfig, std::string> load() const {
    KeyValues overrides;
    for (const auto& s : sets) overrides.push_back(parse_override(s));
    std::string path = config;
    if (!run.empty()) path = (fs::path(run) / "resolved_config.txt").string();
    std::string text;
    if (!path.empty()) text = read_text_file(path);
    std::istringstream in(text);
    RunConfig cfg = resolve_config(parse_key_values(in), overrides, preset);
    if (text.empty()) text = render_config(cfg);
    return {cfg, text};
  }
};

std::vector<std::size_t> parse_budget_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoul(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError("--budgets: expected comma-separated integers, got '" + s + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anytime reasoning laboratory: budget-sampled objectives, BRPO and exact oracles"};
  app.require_subcommand(1);

  ConfigArgs train_cfg, eval_cfg, diag_cfg;

  auto* train = app.add_subcommand("train", "train thinking and summary policies into a new run directory");
  train_cfg.attach(train);
  std::string run_name;
  train->add_option("--name", run_name, "run directory name (default: preset or 'run', plus seed)");

  auto* eval = app.add_subcommand("eval", "accuracy-vs-budget curve of a checkpoint");
  eval_cfg.attach(eval);
  EvalOptions eo;
  std::string eval_budgets, eval_out = ".";
  std::size_t eval_samples = 0;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", eo.checkpoint, "checkpoint file")->required();
  eval->add_option("--budgets", eval_budgets, "comma-separated evaluation budgets (default: 17-point grid)");
  auto* eval_m = eval->add_option("-M,--samples", eval_samples, "summary samples per budget");
  auto* eval_s = eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_flag("--oracle-summary", eo.oracle_summary, "score views with the optimal summary");
  eval->add_option("--label", eo.label, "config label written to the CSV");
  eval->add_option("-o,--out", eval_out, "output directory");

  auto* diag = app.add_subcommand("diagnose", "baseline correlation, variance and credit tables");
  diag_cfg.attach(diag);
  DiagnoseOptions dopt;
  std::string diag_out = ".";
  std::uint64_t diag_seed = 0;
  diag->add_option("--checkpoint", dopt.checkpoint, "checkpoint file")->required();
  diag->add_option("-g,--groups", dopt.groups, "rollout groups");
  auto* diag_s = diag->add_option("--seed", diag_seed, "diagnostic seed");
  diag->add_option("--credit-groups", dopt.credit_groups, "groups written to credit.csv");
  diag->add_option("--bin-width", dopt.bin_width, "position bin width (0 = budget segments)");
  diag->add_option("-o,--out", diag_out, "output directory");

  auto* verify = app.add_subcommand("verify", "exact-oracle verification suite");
  std::string scope = "quick", mutate = "none", verify_json = "verify.json", verify_config;
  VerifyOptions vopt;
  verify->add_option("--scope", scope, "quick|full")->check(CLI::IsMember({"quick", "full"}));
  verify->add_option("--mutate", mutate, "none|v1-include-current")
      ->check(CLI::IsMember({"none", "v1-include-current"}));
  verify->add_option("--json", verify_json, "machine-readable verdict file");
  verify->add_option("-c,--config", verify_config, "config whose prior is also bound-checked");
  auto* verify_cap = verify->add_option("--enum-cap", vopt.enum_cap, "enumeration path cap");
  verify->add_option("--seed", vopt.seed, "verification seed");

  auto* replay = app.add_subcommand("replay", "re-render batch metrics from rollouts.jsonl");
  std::string replay_in, replay_run, replay_out;
  replay->add_option("--rollouts", replay_in, "rollouts.jsonl path");
  replay->add_option("--run", replay_run, "run directory containing rollouts.jsonl");
  replay->add_option("-o,--out", replay_out, "output CSV (default: replay_metrics.csv next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*train) {
      auto [cfg, text] = train_cfg.load();
      const std::string name =
          !run_name.empty() ? run_name : (cfg.preset.empty() ? "run" : cfg.preset) + "-seed" + std::to_string(cfg.seed);
      const fs::path dir = train_run(cfg, text, run_root(), name, std::cerr);
      std::cout << dir.string() << '\n';
    } else if (*eval) {
      auto [cfg, text] = eval_cfg.load();
      if (!eval_budgets.empty()) eo.budgets = parse_budget_list(eval_budgets);
      if (eval_m->count()) eo.samples = eval_samples;
      if (eval_s->count()) eo.seed = eval_seed;
      eo.out_dir = eval_out;
      eval_checkpoint(cfg, eo);
      std::cout << (fs::path(eval_out) / "curves.csv").string() << '\n';
    } else if (*diag) {
      auto [cfg, text] = diag_cfg.load();
      if (diag_s->count()) dopt.seed = diag_seed;
      dopt.out_dir = diag_out;
      diagnose_checkpoint(cfg, dopt);
      std::cout << diag_out << '\n';
    } else if (*verify) {
      vopt.full = scope == "full";
      vopt.mutation = mutate == "none" ? V1Mutation::None : V1Mutation::IncludeCurrentBudget;
      if (!verify_config.empty()) {
        vopt.config = load_config(verify_config);
        if (!verify_cap->count()) vopt.enum_cap = vopt.config->enum_cap;
      }
      const VerifyReport rep = run_verify(vopt);
      print_report(std::cout, rep);
      std::ofstream(verify_json) << report_json(rep).dump(2) << '\n';
      return rep.passed() ? kExitOk : kExitFailure;
    } else if (*replay) {
      fs::path in = replay_in;
      if (in.empty()) {
        if (replay_run.empty()) throw ValidationError("replay needs --rollouts or --run");
        in = fs::path(replay_run) / "rollouts.jsonl";
      }
      const fs::path out = replay_out.empty() ? in.parent_path() / "replay_metrics.csv" : fs::path(replay_out);
      replay_rollouts(in, out);
      std::cout << out.string() << '\n';
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const NonFiniteError& e) {
    std::cerr << "error: " << e.what() << '\n' << e.dump() << '\n';
    return kExitNonFinite;
  } catch (const EnumerationCapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEnumerationCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
