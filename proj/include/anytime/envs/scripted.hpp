#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "anytime/core/errors.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/core/types.hpp"
#include "anytime/envs/environment.hpp"

namespace anytime {

/// Explicit reward table for a small, fully enumerable environment.
///
/// Policy symbols are 0..alphabet-1 and the stop token is `alphabet`. There is no
/// environment feedback. A row grades an (answer, prefix) pair for one question,
/// either at one budget index or at every budget (index 0). Pairs without a row
/// receive `default_reward`, which is how a table "covers" every reachable prefix.
struct ScriptedTable {
  std::size_t alphabet = 2;
  std::size_t answers = 2;
  std::size_t max_length = 4;
  std::vector<QuestionId> questions{0};
  double default_reward = 0.0;

  struct Key {
    QuestionId question;
    std::size_t budget_index;  // 0 = any budget
    std::vector<TokenId> prefix;
    std::size_t answer;
    friend auto operator<=>(const Key&, const Key&) = default;
  };
  std::map<Key, double> rows;

  void set(QuestionId q, std::size_t budget_index, std::vector<TokenId> prefix, std::size_t answer, double r) {
    rows[Key{q, budget_index, std::move(prefix), answer}] = r;
  }

  double lookup(QuestionId q, std::size_t budget_index, const std::vector<TokenId>& prefix, std::size_t answer) const {
    if (budget_index != 0) {
      auto it = rows.find(Key{q, budget_index, prefix, answer});
      if (it != rows.end()) return it->second;
    }
    auto it = rows.find(Key{q, 0, prefix, answer});
    return it != rows.end() ? it->second : default_reward;
  }

  void validate() const {
    if (alphabet == 0) throw ValidationError("scripted table: alphabet must be positive");
    if (answers == 0) throw ValidationError("scripted table: answers must be positive");
    if (max_length == 0) throw ValidationError("scripted table: max_length must be positive");
    if (questions.empty()) throw ValidationError("scripted table: question list is empty");
    if (default_reward != 0.0 && default_reward != 1.0)
      throw ValidationError("scripted table: default reward must be 0 or 1");
    for (const auto& [key, r] : rows) {
      if (r != 0.0 && r != 1.0) throw ValidationError("scripted table: rewards must be 0 or 1");
      if (key.answer >= answers) throw ValidationError("scripted table: answer out of range");
      if (std::find(questions.begin(), questions.end(), key.question) == questions.end())
        throw ValidationError("scripted table: row references unknown question " + std::to_string(key.question));
      if (key.prefix.size() > max_length) throw ValidationError("scripted table: prefix longer than max_length");
      for (std::size_t i = 0; i < key.prefix.size(); ++i) {
        const bool stop = key.prefix[i] == alphabet;
        if (key.prefix[i] > alphabet || (stop && i + 1 != key.prefix.size()))
          throw ValidationError("scripted table: bad symbol in prefix");
      }
    }
  }
};

/// Fills a table with independent Bernoulli(p_one) rewards for every (question,
/// budget index, prefix, answer) a trace of length <= max_length can produce.
inline ScriptedTable random_scripted_table(std::size_t alphabet, std::size_t answers, std::size_t max_length,
                                           std::size_t budget_count, std::vector<QuestionId> questions,
                                           std::uint64_t seed, double p_one = 0.5) {
  ScriptedTable t;
  t.alphabet = alphabet;
  t.answers = answers;
  t.max_length = max_length;
  t.questions = std::move(questions);
  Rng rng(seed);
  std::vector<std::vector<TokenId>> prefixes{{}};
  for (std::size_t k = 0; k < prefixes.size(); ++k) {
    const auto p = prefixes[k];
    if (p.size() == max_length || (!p.empty() && p.back() == alphabet)) continue;
    for (TokenId a = 0; a <= alphabet; ++a) {
      auto next = p;
      next.push_back(a);
      prefixes.push_back(std::move(next));
    }
  }
  for (QuestionId q : t.questions)
    for (std::size_t j = 1; j <= budget_count; ++j)
      for (const auto& p : prefixes)
        for (std::size_t y = 0; y < answers; ++y) t.set(q, j, p, y, rng.uniform() < p_one ? 1.0 : 0.0);
  t.validate();
  return t;
}

struct ScriptedInstance {
  QuestionId question_id = 0;
  std::shared_ptr<const ScriptedTable> table;

  friend bool operator==(const ScriptedInstance& a, const ScriptedInstance& b) {
    return a.question_id == b.question_id && a.table == b.table;
  }
};

class ScriptedEnv {
 public:
  using Instance = ScriptedInstance;

  explicit ScriptedEnv(ScriptedTable table) : table_(std::make_shared<const ScriptedTable>(std::move(table))) {
    table_->validate();
    const std::size_t a = table_->alphabet;
    spec_.vocab_size = a + 1;
    spec_.action_count = a + 1;
    spec_.stop_token = static_cast<TokenId>(a);
    spec_.answer_count = table_->answers;
    spec_.max_length = table_->max_length;
    spec_.thinking_dim = (a + 1) + table_->max_length;
    spec_.summary_dim = 1 + 2 * (a + 1);
  }

  const EnvSpec& spec() const noexcept { return spec_; }
  std::string name() const { return "scripted"; }
  const ScriptedTable& table() const noexcept { return *table_; }

  Instance instance(QuestionId q) const {
    if (std::find(table_->questions.begin(), table_->questions.end(), q) == table_->questions.end())
      throw ValidationError("unknown scripted question " + std::to_string(q));
    return {q, table_};
  }

  QuestionId sample_question(std::uint64_t seed) const {
    const auto& qs = table_->questions;
    return qs[mix64(derive_seed(seed, seed_tag::kQuestion)) % qs.size()];
  }

  std::vector<QuestionId> questions() const { return table_->questions; }

  std::optional<Token> respond(const Instance&, TokenId token) const {
    if (token >= table_->alphabet) throw ContractViolation("env_response called with the stop token");
    return std::nullopt;
  }

  double reward(const Instance& inst, const TruncatedView& view, std::size_t answer) const {
    return table_->lookup(inst.question_id, view.budget_index, symbols(view.prefix), answer);
  }

  /// Last-symbol one-hot (slot 0 = none) plus position one-hot.
  std::vector<double> thinking_features(const Instance&, std::span<const Token> prefix) const {
    std::vector<double> f(spec_.thinking_dim, 0.0);
    const std::size_t slot = prefix.empty() ? 0 : prefix.back().id + 1;
    f[slot] = 1.0;
    const std::size_t pos = std::min(prefix.size(), table_->max_length - 1);
    f[table_->alphabet + 1 + pos] = 1.0;
    return f;
  }

  /// One-hot over (last non-stop symbol or none, marker); index 0 for empty views.
  std::vector<double> summary_features(const Instance&, const TruncatedView& view) const {
    std::vector<double> f(spec_.summary_dim, 0.0);
    f[summary_state_index(view)] = 1.0;
    return f;
  }

  std::size_t summary_state_index(const TruncatedView& view) const {
    if (view.prefix.empty()) return 0;
    std::size_t slot = 0;
    for (auto it = view.prefix.rbegin(); it != view.prefix.rend(); ++it) {
      if (it->id < table_->alphabet) {
        slot = it->id + 1;
        break;
      }
    }
    return 1 + slot * 2 + (view.truncated ? 1 : 0);
  }

  /// Point mass on the best answer for this view (lowest index among ties).
  std::vector<double> oracle_distribution(const Instance& inst, const TruncatedView& view) const {
    std::vector<double> d(table_->answers, 0.0);
    d[best_answer(inst, view)] = 1.0;
    return d;
  }

  std::size_t oracle_answer(const Instance& inst, const TruncatedView& view, std::span<const double>) const {
    return best_answer(inst, view);
  }

 private:
  std::size_t best_answer(const Instance& inst, const TruncatedView& view) const {
    const auto syms = symbols(view.prefix);
    std::size_t best = 0;
    double best_r = -1.0;
    for (std::size_t a = 0; a < table_->answers; ++a) {
      const double r = table_->lookup(inst.question_id, view.budget_index, syms, a);
      if (r > best_r) {
        best_r = r;
        best = a;
      }
    }
    return best;
  }

  static std::vector<TokenId> symbols(std::span<const Token> prefix) {
    std::vector<TokenId> s;
    s.reserve(prefix.size());
    for (const auto& t : prefix) s.push_back(t.id);
    return s;
  }

  std::shared_ptr<const ScriptedTable> table_;
  EnvSpec spec_;
};

static_assert(Environment<ScriptedEnv>);

}  // namespace anytime
