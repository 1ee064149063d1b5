#pragma once

// Profitability-gated rewrites that retarget a baseline program onto the
// custom extensions: mac, add2i and fusedmac peepholes, plus conversion of
// counted innermost loops to zero-overhead hardware loops.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "marvel/isa.hpp"
#include "marvel/program.hpp"
#include "marvel/simulator.hpp"

namespace marvel {

enum class Rule : std::uint8_t { Mac, Add2i, Fusedmac, Zol };

inline constexpr std::array<Rule, 4> kAllRules{Rule::Mac, Rule::Add2i, Rule::Fusedmac, Rule::Zol};

std::string_view rule_name(Rule rule);  // "mac_rule", ...
Variant rule_min_variant(Rule rule);

struct RuleStats {
  std::uint64_t matched = 0;  // structural matches seen
  std::uint64_t applied = 0;  // matches that passed legality and profitability
  /// Sum of per-application estimates: cycles saved per execution of the
  /// rewritten region (one loop entry for loop rewrites).
  std::int64_t estimated_cycles_saved = 0;
};

struct RewriteStats {
  std::array<RuleStats, 4> rules{};

  RuleStats& operator[](Rule r) { return rules[static_cast<std::size_t>(r)]; }
  const RuleStats& operator[](Rule r) const { return rules[static_cast<std::size_t>(r)]; }
};

/// A counted innermost loop: a single-block body closed by
/// `blt induction, bound, start`, with the induction register updated by
/// exactly one `addi induction, induction, step` (step > 0).
struct LoopShape {
  std::size_t start = 0;
  std::size_t backedge = 0;
  std::size_t induction_update = 0;
  unsigned induction = 0;
  unsigned bound_reg = 0;
  std::int32_t step = 0;
  std::optional<std::int32_t> init;
  std::optional<std::int32_t> bound;
  /// Iterations per entry when init and bound are compile-time constants.
  std::optional<std::int64_t> trip_count;
};

std::vector<LoopShape> find_loops(const Program& program);

/// Trip count assumed by the profitability gate when it is not a constant.
inline constexpr std::int64_t kUnknownTripEstimate = 8;

RegMask uses_of(const Instruction& inst);
RegMask defs_of(const Instruction& inst);

/// Per-instruction liveness (live-in and live-out masks) over the whole
/// control-flow graph, including hardware-loop back edges.
struct Liveness {
  std::vector<RegMask> live_in;
  std::vector<RegMask> live_out;
};
Liveness compute_liveness(const Program& program);

Program apply_mac(const Program& program, const CycleModel& model = {}, RuleStats* stats = nullptr);
Program apply_add2i(const Program& program, const CycleModel& model = {}, RuleStats* stats = nullptr);
Program apply_fusedmac(const Program& program, const CycleModel& model = {}, RuleStats* stats = nullptr);
Program apply_zol(const Program& program, const CycleModel& model = {}, RuleStats* stats = nullptr);

struct RetargetResult {
  Program program;
  RewriteStats stats;
};

/// Applies the rules enabled on `variant` in the order mac, add2i, fusedmac,
/// zol, repeating the sequence until nothing changes. The input is expected
/// to be baseline code; retarget(p, V0) returns p unchanged.
RetargetResult retarget(const Program& program, Variant variant, const CycleModel& model = {});

}  // namespace marvel
