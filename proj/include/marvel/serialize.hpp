#pragma once

// JSON/CSV text forms of configuration and reports.

#include <string>
#include <string_view>

#include "marvel/profiler.hpp"
#include "marvel/rewriter.hpp"
#include "marvel/simulator.hpp"

namespace marvel {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// {"default_cost": 1, "taken_branch_extra": 1, "overrides": {"mul": 2}}
std::string cycle_model_to_json(const CycleModel& model);
/// Missing keys keep their defaults. Throws ConfigError.
CycleModel cycle_model_from_json(std::string_view text);

std::string pattern_report_json(const PatternReport& report);
/// Two rows (raw, weighted) under a header naming the pattern columns.
std::string pattern_report_csv(const PatternReport& report);
/// i1,i2,signed,weight rows sorted by (signed, i1, i2).
std::string histogram_csv(const ImmediateHistogram& hist);

std::string rewrite_stats_json(const RewriteStats& stats);

/// cycles, retired, per-mnemonic retired counts, loop unit activity.
std::string run_summary_json(const RunResult& result, Variant variant, const CycleModel& model);

}  // namespace marvel
