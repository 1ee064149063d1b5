#pragma once

// Instruction-accurate simulator with a per-kind cycle model and the
// zero-overhead loop unit (ZC/ZS/ZE).

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "marvel/isa.hpp"
#include "marvel/program.hpp"

namespace marvel {

struct CycleModel {
  std::uint32_t default_cost = 1;
  /// Added when a branch or jump redirects the pc (one bubble in a 3-stage pipe).
  std::uint32_t taken_branch_extra = 1;
  std::map<Op, std::uint32_t> overrides;

  std::uint32_t cost(Op op) const {
    auto it = overrides.find(op);
    return it == overrides.end() ? default_cost : it->second;
  }

  /// Throws std::invalid_argument if any cost is zero.
  void validate() const;

  std::string describe() const;
};

inline constexpr std::size_t kDefaultMemoryBytes = 1u << 20;

struct MachineState {
  std::array<std::uint32_t, 32> x{};
  std::uint32_t pc = 0;
  std::int32_t zc = 0;
  std::uint32_t zs = 0;
  std::uint32_t ze = 0;
  std::vector<std::uint8_t> mem;
  std::uint64_t cycles = 0;
  std::array<std::uint64_t, kOpCount> retired{};
  /// Executions per instruction index; empty when not collected.
  std::vector<std::uint64_t> pc_hist;
  /// Taken redirects per instruction index; sized with pc_hist.
  std::vector<std::uint64_t> taken_hist;
  std::uint64_t taken_branches = 0;
  std::uint64_t loop_backjumps = 0;
  bool halted = false;

  /// Loads the data image into a zeroed memory of `memory_bytes` and sets the
  /// pc to the entry point.
  static MachineState boot(const Program& program, std::size_t memory_bytes = kDefaultMemoryBytes,
                           bool histogram = true);

  std::uint64_t retired_total() const;
  std::uint64_t retired_of(Op op) const { return retired[index_of(op)]; }
};

/// One retired instruction.
struct TraceEvent {
  std::uint32_t pc = 0;
  Instruction inst;
  std::uint32_t cost = 0;     // cycles charged, including any taken-branch extra
  std::uint64_t cycle = 0;    // cycle counter after retirement
  bool taken = false;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_retire(const TraceEvent& event) = 0;
};

enum class TrapKind { IllegalInstruction, FetchFault, MisalignedAccess, AccessFault, Environment };

std::string_view trap_kind_name(TrapKind kind);

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Trap : public SimError {
 public:
  Trap(TrapKind kind, std::uint32_t pc, Instruction inst, const std::string& detail);
  TrapKind kind() const { return kind_; }
  std::uint32_t pc() const { return pc_; }
  const Instruction& instruction() const { return inst_; }

 private:
  TrapKind kind_;
  std::uint32_t pc_;
  Instruction inst_;
};

class BudgetExceeded : public SimError {
 public:
  explicit BudgetExceeded(std::uint64_t steps)
      : SimError("step budget of " + std::to_string(steps) + " instructions exhausted") {}
};

enum class StepResult { Continue, Halted };

/// Executes one instruction. Reaching the end of the text halts without
/// retiring anything; a jump to itself retires and halts.
StepResult step(MachineState& state, const Program& program, const CycleModel& model, TraceSink* sink = nullptr);

struct RunLimits {
  std::uint64_t max_steps = 2'000'000'000ull;
  std::size_t memory_bytes = kDefaultMemoryBytes;
  bool histogram = true;
};

struct RunResult {
  MachineState state;
  std::uint64_t cycles = 0;
  std::uint64_t retired = 0;
};

/// Throws SimError when the program uses instructions outside `variant`,
/// Trap on a fault, BudgetExceeded when max_steps is reached.
RunResult run(const Program& program, Variant variant, const CycleModel& model, const RunLimits& limits = {},
              TraceSink* sink = nullptr);

/// Full event capture of a run.
std::vector<TraceEvent> trace(const Program& program, Variant variant, const CycleModel& model,
                              const RunLimits& limits = {});

/// Checks every instruction of `program` against `variant`; throws SimError.
void check_variant(const Program& program, Variant variant);

}  // namespace marvel
