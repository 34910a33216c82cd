#pragma once

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "anytime/core/errors.hpp"
#include "anytime/envs/scripted.hpp"

namespace anytime {

/// Text format for scripted tables, one directive per line, '#' starts a comment:
///
///   alphabet 3              policy symbols 0..2, stop token is 3
///   answers 3
///   max_length 6
///   questions 0 1           question ids (uniform question distribution)
///   default 0               reward for pairs without a row
///   reward <q> <j|*> <prefix> <answer> <0|1>
///
/// <prefix> is a comma-separated list of symbol ids, 's' for the stop token, or
/// '-' for the empty prefix. <j> is a 1-based budget index or '*' for all budgets.
inline ScriptedTable parse_scripted_table(std::istream& in) {
  ScriptedTable table;
  table.rows.clear();
  struct PendingRow {
    QuestionId q;
    std::size_t j;
    std::string prefix;
    std::size_t answer;
    double value;
    int line;
  };
  std::vector<PendingRow> pending;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ValidationError("scripted table line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string directive;
    if (!(ls >> directive)) continue;
    if (directive == "alphabet") {
      if (!(ls >> table.alphabet)) fail("alphabet expects an integer");
    } else if (directive == "answers") {
      if (!(ls >> table.answers)) fail("answers expects an integer");
    } else if (directive == "max_length") {
      if (!(ls >> table.max_length)) fail("max_length expects an integer");
    } else if (directive == "default") {
      if (!(ls >> table.default_reward)) fail("default expects 0 or 1");
    } else if (directive == "questions") {
      table.questions.clear();
      QuestionId q;
      while (ls >> q) table.questions.push_back(q);
      if (table.questions.empty()) fail("questions expects at least one id");
    } else if (directive == "reward") {
      PendingRow row{};
      std::string j;
      if (!(ls >> row.q >> j >> row.prefix >> row.answer >> row.value)) fail("reward expects <q> <j|*> <prefix> <answer> <value>");
      if (j == "*") {
        row.j = 0;
      } else {
        try {
          row.j = std::stoul(j);
        } catch (const std::exception&) {
          fail("bad budget index '" + j + "'");
        }
        if (row.j == 0) fail("budget index is 1-based");
      }
      row.line = line_no;
      pending.push_back(std::move(row));
    } else {
      fail("unknown directive '" + directive + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing token '" + extra + "'");
  }
  // Rows are resolved after the header so 's' maps to the final alphabet size.
  for (const auto& row : pending) {
    line_no = row.line;
    std::vector<TokenId> prefix;
    if (row.prefix != "-") {
      std::istringstream ps(row.prefix);
      std::string sym;
      while (std::getline(ps, sym, ',')) {
        if (sym == "s") {
          prefix.push_back(static_cast<TokenId>(table.alphabet));
        } else {
          try {
            prefix.push_back(static_cast<TokenId>(std::stoul(sym)));
          } catch (const std::exception&) {
            fail("bad prefix symbol '" + sym + "'");
          }
        }
      }
    }
    table.set(row.q, row.j, std::move(prefix), row.answer, row.value);
  }
  table.validate();
  return table;
}

inline ScriptedTable load_scripted_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scripted table '" + path + "'");
  return parse_scripted_table(in);
}

}  // namespace anytime
