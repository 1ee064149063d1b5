#pragma once

// Fusible-pattern mining over retired-instruction streams.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "marvel/isa.hpp"
#include "marvel/program.hpp"
#include "marvel/simulator.hpp"

namespace marvel {

struct PatternCounts {
  std::uint64_t add = 0;
  std::uint64_t mul = 0;
  std::uint64_t mul_add = 0;
  std::uint64_t addi = 0;
  std::uint64_t addi_addi = 0;
  std::uint64_t fusedmac = 0;
  std::uint64_t blt = 0;
  std::uint64_t total_retired = 0;

  friend bool operator==(const PatternCounts&, const PatternCounts&) = default;
};

/// `raw` counts occurrences; `weighted` sums the cycles charged to the
/// matched instructions.
struct PatternReport {
  PatternCounts raw;
  PatternCounts weighted;

  friend bool operator==(const PatternReport&, const PatternReport&) = default;
};

/// (i1, i2) = immediates of the first and second addi of a matched pair.
/// Pairs with a negative immediate go to `signed_pairs`.
struct ImmediateHistogram {
  std::map<std::pair<std::int32_t, std::int32_t>, std::uint64_t> unsigned_pairs;
  std::map<std::pair<std::int32_t, std::int32_t>, std::uint64_t> signed_pairs;

  std::uint64_t total_weight() const;
  bool empty() const { return unsigned_pairs.empty() && signed_pairs.empty(); }
  void add(std::int32_t i1, std::int32_t i2, std::uint64_t weight);

  friend bool operator==(const ImmediateHistogram&, const ImmediateHistogram&) = default;
};

struct SplitChoice {
  int b1 = 0;
  int b2 = 0;
  double coverage = 0.0;
};

inline constexpr int kSplitBits = 15;

// Pattern predicates shared with the rewriter.
bool is_addi_increment(const Instruction& in);
bool is_addi_pair(const Instruction& first, const Instruction& second);
/// mul t,a,b followed by add c,c,t (or add c,t,c) with c != t.
bool is_mul_add_pair(const Instruction& mul, const Instruction& add);
/// addi, addi, mul, add where the increments touch none of the multiply's registers.
bool is_fusedmac_window(const Instruction& i0, const Instruction& i1, const Instruction& i2, const Instruction& i3);

/// Streaming greedy matcher: each pattern is matched left to right without
/// overlap, independently of the others.
class PatternCounter final : public TraceSink {
 public:
  void add(const Instruction& inst, std::uint64_t cost);
  void on_retire(const TraceEvent& e) override { add(e.inst, e.cost); }

  const PatternReport& report() const { return report_; }
  const ImmediateHistogram& histogram() const { return histogram_; }

 private:
  struct Item {
    Instruction inst;
    std::uint64_t cost;
  };
  PatternReport report_;
  ImmediateHistogram histogram_;
  std::optional<Item> mul_pending_;
  std::optional<Item> addi_pending_;
  std::deque<Item> window_;
};

PatternReport count_patterns(std::span<const TraceEvent> events);

/// Static profiling: patterns are matched inside each basic block and scaled
/// by the block's execution count from a prior run (`pc_hist`/`taken_hist`
/// as produced by the simulator).
PatternReport count_patterns_static(const Program& program, std::span<const std::uint64_t> pc_hist,
                                    std::span<const std::uint64_t> taken_hist, const CycleModel& model,
                                    ImmediateHistogram* histogram = nullptr);

ImmediateHistogram immediate_histogram(std::span<const TraceEvent> events);

/// Fraction of histogram weight with i1 < 2^b1 and i2 < 2^b2; signed pairs
/// count as uncovered. Returns 0 for an empty histogram.
double coverage(const ImmediateHistogram& hist, int b1, int b2);

/// Best of the 14 splits b1 + b2 = 15; ties go to the smallest b1.
/// Throws std::invalid_argument on an empty histogram.
SplitChoice select_split(const ImmediateHistogram& hist);

}  // namespace marvel
