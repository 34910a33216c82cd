// Enumerates every trace of a small scripted environment and prints the standard
// and anytime objectives under each budget prior, then takes a few exact
// gradient-ascent steps on the anytime objective.
//
//   build/demo/exact_objectives demo/tables/two_symbols.table

#include <cstdio>
#include <string>

#include "anytime/anytime.hpp"

using namespace anytime;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "demo/tables/two_symbols.table";
  const ScriptedEnv env(load_scripted_table(path));
  const EnvSpec es = env.spec();
  PolicyParams theta(es.thinking_dim, es.action_count);
  PolicyParams phi(es.summary_dim, es.answer_count);

  std::printf("%-8s %10s %10s\n", "prior", "J", "J_anytime");
  for (PriorKind k : {PriorKind::Base, PriorKind::Uniform, PriorKind::Linear}) {
    const BudgetSpec spec = make_prior(k, {2, 4, 6});
    const auto o = exact_objectives(env, theta, Summarizer::learned(phi), spec);
    std::printf("%-8s %10.6f %10.6f\n", std::string(to_string(k)).c_str(), o.standard, o.anytime);
  }

  const BudgetSpec uniform = make_prior(PriorKind::Uniform, {2, 4, 6});
  for (int step = 0; step <= 50; ++step) {
    const auto g = exact_gradients(env, theta, Summarizer::learned(phi), uniform);
    if (step % 10 == 0)
      std::printf("step %2d  J_anytime %.6f  J %.6f\n", step, g.objectives.anytime, g.objectives.standard);
    for (std::size_t i = 0; i < theta.size(); ++i) theta.values()[i] += 2.0 * g.thinking[i];
    for (std::size_t i = 0; i < phi.size(); ++i) phi.values()[i] += 2.0 * g.summary[i];
  }
  return 0;
}
