#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "anytime/advantage/brpo.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/core/types.hpp"
#include "anytime/diagnostics/accuracy.hpp"

namespace anytime {

/// Running sums for a pooled Pearson correlation / variance.
struct PairStats {
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;

  void add(double x, double y) {
    n += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  double var_x() const { return n > 0.0 ? std::max(0.0, sxx / n - (sx / n) * (sx / n)) : 0.0; }
  double var_y() const { return n > 0.0 ? std::max(0.0, syy / n - (sy / n) * (sy / n)) : 0.0; }

  /// Undefined when either side has no spread.
  std::optional<double> pearson() const {
    if (n < 2.0) return std::nullopt;
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = var_x(), vy = var_y();
    const double tol = 1e-14 * (1.0 + std::abs(sxx / n) + std::abs(syy / n));
    if (vx <= tol || vy <= tol) return std::nullopt;
    return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
  }
};

/// Token binning for the diagnostics: budget segments (j_t) by default, or fixed
/// position bins of `bin_width` tokens.
struct Binning {
  std::size_t bin_width = 0;

  std::size_t bins(const BudgetSpec& spec) const {
    return bin_width == 0 ? spec.m() : (spec.max_budget() + bin_width - 1) / bin_width;
  }
  std::size_t bin(std::size_t position, const BudgetSpec& spec) const {
    return bin_width == 0 ? nearest_budget_index(position, spec) : (position - 1) / bin_width + 1;
  }
};

/// `count` groups for analysis; group i uses question and traces derived from
/// derive(seed, diagnose, i), independent of how many groups are requested.
template <Environment Env>
std::vector<RolloutGroup> collect_groups(const Env& env, const PolicyParams& thinking, const Summarizer& summary,
                                         const BudgetSpec& spec, std::size_t group_size, std::size_t k,
                                         std::size_t count, std::uint64_t seed, std::size_t workers = 1) {
  std::vector<RolloutGroup> groups(count);
  parallel_for(count, workers, [&](std::size_t i) {
    const std::uint64_t gseed = derive_seed(seed, {seed_tag::kDiagnose, i});
    groups[i] = collect_group(env, env.sample_question(gseed), thinking, summary, spec, group_size, k, gseed);
  });
  return groups;
}

struct CorrelationRow {
  std::size_t segment = 0;
  std::optional<double> corr_v1;
  std::optional<double> corr_v2;
};

/// Pearson correlation of V1 and V2 with R(x, z, j_t), pooled over the policy
/// tokens of every trace in every group, per segment.
inline std::vector<CorrelationRow> baseline_correlations(std::span<const RolloutGroup> groups, const BudgetSpec& spec,
                                                         double lambda, bool leave_one_out = false,
                                                         Binning binning = {}) {
  const std::size_t nb = binning.bins(spec);
  std::vector<PairStats> s1(nb + 1), s2(nb + 1);
  BrpoConfig cfg;
  cfg.lambda = lambda;
  cfg.leave_one_out = leave_one_out;
  cfg.mode = AdvantageMode::BRPO;
  for (const RolloutGroup& g : groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (const AdvantageRecord& rec : advantage_profile(g.traces[i], g, spec, cfg, i).records) {
        const std::size_t b = binning.bin(rec.position, spec);
        s1[b].add(rec.v1, rec.ret);
        s2[b].add(rec.v2, rec.ret);
      }
    }
  }
  std::vector<CorrelationRow> rows;
  for (std::size_t b = 1; b <= nb; ++b) {
    if (s1[b].n == 0.0) continue;
    rows.push_back({b, s1[b].pearson(), s2[b].pearson()});
  }
  return rows;
}

struct VarianceRow {
  std::size_t segment = 0;
  AdvantageMode mode = AdvantageMode::BRPO;
  std::optional<double> ratio;  // Var(R - V) / Var(R)
};

/// Var(A) / Var(R) per segment for each advantage mode, where R and V are the
/// mode's own return and baseline (GRPO: final reward and its group mean).
inline std::vector<VarianceRow> normalized_variance(std::span<const RolloutGroup> groups, const BudgetSpec& spec,
                                                    const BrpoConfig& base, std::span<const AdvantageMode> modes,
                                                    Binning binning = {}) {
  const std::size_t nb = binning.bins(spec);
  std::vector<VarianceRow> rows;
  std::vector<std::vector<PairStats>> stats(modes.size(), std::vector<PairStats>(nb + 1));
  for (std::size_t k = 0; k < modes.size(); ++k) {
    BrpoConfig cfg = base;
    cfg.mode = modes[k];
    for (const RolloutGroup& g : groups)
      for (std::size_t i = 0; i < g.size(); ++i)
        for (const AdvantageRecord& rec : advantage_profile(g.traces[i], g, spec, cfg, i).records)
          stats[k][binning.bin(rec.position, spec)].add(rec.advantage, rec.ret);
  }
  for (std::size_t b = 1; b <= nb; ++b) {
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const PairStats& s = stats[k][b];
      if (s.n == 0.0) continue;
      std::optional<double> ratio;
      const double vr = s.var_y();
      if (vr > 1e-14 * (1.0 + std::abs(s.syy / s.n))) ratio = s.var_x() / vr;
      rows.push_back({b, modes[k], ratio});
    }
  }
  return rows;
}

struct CreditRow {
  std::size_t segment = 0;
  double ret = 0.0, v1 = 0.0, v2 = 0.0, baseline = 0.0, advantage = 0.0;
};

/// Per-segment R, V1, V2, V and A for member `self` of a group.
inline std::vector<CreditRow> credit_profile(std::span<const BudgetRewards> group, std::size_t self,
                                             const BudgetSpec& spec, const BrpoConfig& cfg) {
  std::vector<CreditRow> rows;
  for (std::size_t j = 1; j <= spec.m(); ++j) {
    const AdvantageRecord r = segment_advantage(group, spec, cfg, self, j);
    rows.push_back({j, r.ret, r.v1, r.v2, r.baseline, r.advantage});
  }
  return rows;
}

/// Single-trace profile; V2 degenerates to the trace's own return.
inline std::vector<CreditRow> credit_profile(const BudgetRewards& rewards, const BudgetSpec& spec,
                                             const BrpoConfig& cfg = {}) {
  BrpoConfig c = cfg;
  c.leave_one_out = false;
  return credit_profile(std::span<const BudgetRewards>(&rewards, 1), 0, spec, c);
}

// ---- CSV output -----------------------------------------------------------

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

inline void write_correlation_csv(std::ostream& os, std::span<const CorrelationRow> rows) {
  os << "segment,corr_v1,corr_v2\n";
  for (const auto& r : rows) os << r.segment << ',' << format_optional(r.corr_v1) << ',' << format_optional(r.corr_v2) << '\n';
}

inline void write_variance_csv(std::ostream& os, std::span<const VarianceRow> rows) {
  os << "segment,mode,ratio\n";
  for (const auto& r : rows) os << r.segment << ',' << to_string(r.mode) << ',' << format_optional(r.ratio) << '\n';
}

struct LabelledCredit {
  std::size_t group = 0;
  std::size_t member = 0;
  std::vector<CreditRow> rows;
};

inline void write_credit_csv(std::ostream& os, std::span<const LabelledCredit> profiles) {
  os << "group,member,segment,return,v1,v2,baseline,advantage\n";
  for (const auto& p : profiles)
    for (const auto& r : p.rows)
      os << p.group << ',' << p.member << ',' << r.segment << ',' << format_real(r.ret) << ',' << format_real(r.v1)
         << ',' << format_real(r.v2) << ',' << format_real(r.baseline) << ',' << format_real(r.advantage) << '\n';
}

inline void write_curves_header(std::ostream& os) { os << "config,budget,accuracy\n"; }

inline void write_curve_rows(std::ostream& os, const std::string& config, const AccuracyCurve& curve) {
  for (std::size_t k = 0; k < curve.budgets.size(); ++k)
    os << config << ',' << curve.budgets[k] << ',' << format_real(curve.accuracy[k]) << '\n';
}

inline void write_curve_summary_header(std::ostream& os) { os << "config,prior,auc,final_accuracy\n"; }

inline void write_curve_summary_row(std::ostream& os, const std::string& config, const std::string& prior, double auc,
                                    double final_accuracy) {
  os << config << ',' << prior << ',' << format_real(auc) << ',' << format_real(final_accuracy) << '\n';
}

}  // namespace anytime
