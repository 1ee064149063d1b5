#include "marvel/simulator.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <sstream>

#include "marvel/assembler.hpp"

namespace marvel {

void CycleModel::validate() const {
  if (default_cost == 0) throw std::invalid_argument("cycle model: default_cost must be >= 1");
  for (const auto& [op, c] : overrides)
    if (c == 0) throw std::invalid_argument("cycle model: cost of '" + std::string(mnemonic(op)) + "' must be >= 1");
}

std::string CycleModel::describe() const {
  std::ostringstream os;
  os << "default_cost=" << default_cost << " taken_branch_extra=" << taken_branch_extra;
  for (const auto& [op, c] : overrides) os << ' ' << mnemonic(op) << '=' << c;
  return os.str();
}

MachineState MachineState::boot(const Program& program, std::size_t memory_bytes, bool histogram) {
  if (program.data.size() > memory_bytes) throw SimError("data image larger than data memory");
  MachineState s;
  s.mem.assign(memory_bytes, 0);
  std::copy(program.data.begin(), program.data.end(), s.mem.begin());
  s.pc = static_cast<std::uint32_t>(4 * program.entry);
  if (histogram) {
    s.pc_hist.assign(program.text.size(), 0);
    s.taken_hist.assign(program.text.size(), 0);
  }
  return s;
}

std::uint64_t MachineState::retired_total() const {
  return std::accumulate(retired.begin(), retired.end(), std::uint64_t{0});
}

std::string_view trap_kind_name(TrapKind kind) {
  switch (kind) {
    case TrapKind::IllegalInstruction: return "illegal instruction";
    case TrapKind::FetchFault: return "instruction fetch fault";
    case TrapKind::MisalignedAccess: return "misaligned access";
    case TrapKind::AccessFault: return "access fault";
    case TrapKind::Environment: return "environment call";
  }
  return "trap";
}

namespace {
std::string trap_message(TrapKind kind, std::uint32_t pc, const Instruction& inst, const std::string& detail) {
  std::ostringstream os;
  os << trap_kind_name(kind) << " at pc 0x" << std::hex << pc << std::dec << " (" << format_instruction(inst) << ")";
  if (!detail.empty()) os << ": " << detail;
  return os.str();
}
}  // namespace

Trap::Trap(TrapKind kind, std::uint32_t pc, Instruction inst, const std::string& detail)
    : SimError(trap_message(kind, pc, inst, detail)), kind_(kind), pc_(pc), inst_(inst) {}

namespace {

std::uint32_t load(MachineState& s, const Instruction& in, std::uint32_t addr, unsigned width) {
  if (addr % width != 0) throw Trap(TrapKind::MisalignedAccess, s.pc, in, "address " + std::to_string(addr));
  if (std::size_t{addr} + width > s.mem.size())
    throw Trap(TrapKind::AccessFault, s.pc, in, "address " + std::to_string(addr));
  std::uint32_t v = 0;
  for (unsigned i = 0; i < width; ++i) v |= static_cast<std::uint32_t>(s.mem[addr + i]) << (8 * i);
  return v;
}

void store(MachineState& s, const Instruction& in, std::uint32_t addr, unsigned width, std::uint32_t v) {
  if (addr % width != 0) throw Trap(TrapKind::MisalignedAccess, s.pc, in, "address " + std::to_string(addr));
  if (std::size_t{addr} + width > s.mem.size())
    throw Trap(TrapKind::AccessFault, s.pc, in, "address " + std::to_string(addr));
  for (unsigned i = 0; i < width; ++i) s.mem[addr + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::int32_t as_signed(std::uint32_t v) { return static_cast<std::int32_t>(v); }

void do_mac(MachineState& s) { s.x[kMacAcc] += s.x[kMacLhs] * s.x[kMacRhs]; }

}  // namespace

StepResult step(MachineState& s, const Program& prog, const CycleModel& model, TraceSink* sink) {
  if (s.halted) return StepResult::Halted;
  const std::uint32_t pc = s.pc;
  const std::size_t index = pc / 4;
  if (index == prog.text.size() && pc % 4 == 0) {
    s.halted = true;
    return StepResult::Halted;
  }
  if (pc % 4 != 0 || index > prog.text.size())
    throw Trap(TrapKind::FetchFault, pc, make_illegal(0), "pc outside program memory");

  const Instruction& in = prog.text[index];
  auto& x = s.x;
  const std::uint32_t a = x[in.rs1];
  const std::uint32_t b = x[in.rs2];
  const auto imm = static_cast<std::uint32_t>(in.imm);
  std::uint32_t next = pc + 4;
  bool taken = false;
  std::uint32_t result = 0;
  bool write_rd = false;

  switch (in.op) {
    case Op::Lui: result = imm << 12; write_rd = true; break;
    case Op::Auipc: result = pc + (imm << 12); write_rd = true; break;
    case Op::Jal:
      if (in.imm == 0 && in.rd == 0) {
        s.halted = true;
        break;
      }
      result = pc + 4;
      write_rd = true;
      next = pc + imm;
      taken = true;
      break;
    case Op::Jalr:
      result = pc + 4;
      write_rd = true;
      next = (a + imm) & ~1u;
      taken = true;
      break;
    case Op::Beq: taken = a == b; break;
    case Op::Bne: taken = a != b; break;
    case Op::Blt: taken = as_signed(a) < as_signed(b); break;
    case Op::Bge: taken = as_signed(a) >= as_signed(b); break;
    case Op::Bltu: taken = a < b; break;
    case Op::Bgeu: taken = a >= b; break;
    case Op::Lb: result = static_cast<std::uint32_t>(static_cast<std::int8_t>(load(s, in, a + imm, 1))); write_rd = true; break;
    case Op::Lh: result = static_cast<std::uint32_t>(static_cast<std::int16_t>(load(s, in, a + imm, 2))); write_rd = true; break;
    case Op::Lw: result = load(s, in, a + imm, 4); write_rd = true; break;
    case Op::Lbu: result = load(s, in, a + imm, 1); write_rd = true; break;
    case Op::Lhu: result = load(s, in, a + imm, 2); write_rd = true; break;
    case Op::Sb: store(s, in, a + imm, 1, b); break;
    case Op::Sh: store(s, in, a + imm, 2, b); break;
    case Op::Sw: store(s, in, a + imm, 4, b); break;
    case Op::Addi: result = a + imm; write_rd = true; break;
    case Op::Slti: result = as_signed(a) < in.imm; write_rd = true; break;
    case Op::Sltiu: result = a < imm; write_rd = true; break;
    case Op::Xori: result = a ^ imm; write_rd = true; break;
    case Op::Ori: result = a | imm; write_rd = true; break;
    case Op::Andi: result = a & imm; write_rd = true; break;
    case Op::Slli: result = a << (imm & 31); write_rd = true; break;
    case Op::Srli: result = a >> (imm & 31); write_rd = true; break;
    case Op::Srai: result = static_cast<std::uint32_t>(as_signed(a) >> (imm & 31)); write_rd = true; break;
    case Op::Add: result = a + b; write_rd = true; break;
    case Op::Sub: result = a - b; write_rd = true; break;
    case Op::Sll: result = a << (b & 31); write_rd = true; break;
    case Op::Slt: result = as_signed(a) < as_signed(b); write_rd = true; break;
    case Op::Sltu: result = a < b; write_rd = true; break;
    case Op::Xor: result = a ^ b; write_rd = true; break;
    case Op::Srl: result = a >> (b & 31); write_rd = true; break;
    case Op::Sra: result = static_cast<std::uint32_t>(as_signed(a) >> (b & 31)); write_rd = true; break;
    case Op::Or: result = a | b; write_rd = true; break;
    case Op::And: result = a & b; write_rd = true; break;
    case Op::Fence: break;
    case Op::Ecall:
    case Op::Ebreak:
      throw Trap(TrapKind::Environment, pc, in, "no execution environment");
    case Op::Mul: result = a * b; write_rd = true; break;
    case Op::Mulh:
      result = static_cast<std::uint32_t>((std::int64_t{as_signed(a)} * std::int64_t{as_signed(b)}) >> 32);
      write_rd = true;
      break;
    case Op::Mulhsu:
      result = static_cast<std::uint32_t>((std::int64_t{as_signed(a)} * static_cast<std::int64_t>(b)) >> 32);
      write_rd = true;
      break;
    case Op::Mulhu:
      result = static_cast<std::uint32_t>((std::uint64_t{a} * std::uint64_t{b}) >> 32);
      write_rd = true;
      break;
    case Op::Div:
      if (b == 0) result = ~0u;
      else if (a == 0x80000000u && b == ~0u) result = a;
      else result = static_cast<std::uint32_t>(as_signed(a) / as_signed(b));
      write_rd = true;
      break;
    case Op::Divu: result = b == 0 ? ~0u : a / b; write_rd = true; break;
    case Op::Rem:
      if (b == 0) result = a;
      else if (a == 0x80000000u && b == ~0u) result = 0;
      else result = static_cast<std::uint32_t>(as_signed(a) % as_signed(b));
      write_rd = true;
      break;
    case Op::Remu: result = b == 0 ? a : a % b; write_rd = true; break;
    case Op::Mac:
      do_mac(s);
      break;
    case Op::Add2i:
      x[in.rs1] += imm;
      x[in.rs2] += static_cast<std::uint32_t>(in.imm2);
      break;
    case Op::Fusedmac:
      do_mac(s);
      x[in.rs1] += imm;
      x[in.rs2] += static_cast<std::uint32_t>(in.imm2);
      break;
    case Op::Dlp:
    case Op::Dlpi:
      s.zc = in.op == Op::Dlp ? as_signed(a) : in.imm2;
      [[fallthrough]];
    case Op::Zlp:
      s.zs = pc + 4;
      s.ze = pc + 4 * imm;
      break;
    case Op::SetZc: s.zc = as_signed(a); break;
    case Op::SetZs: s.zs = a; break;
    case Op::SetZe: s.ze = a; break;
    case Op::Illegal:
      throw Trap(TrapKind::IllegalInstruction, pc, in, "");
  }

  if (write_rd) x[in.rd] = result;
  x[0] = 0;
  if (is_branch(in.op) && taken) next = pc + imm;

  std::uint32_t cost = model.cost(in.op);
  if (taken) {
    cost += model.taken_branch_extra;
    ++s.taken_branches;
    if (!s.taken_hist.empty()) ++s.taken_hist[index];
  } else if (!s.halted && s.zc != 0 && pc == s.ze) {
    // loop unit: redirect after the last body instruction, no extra cycles
    if (s.zc > 1) {
      --s.zc;
      next = s.zs;
      ++s.loop_backjumps;
    } else {
      s.zc = 0;
    }
  }

  s.cycles += cost;
  ++s.retired[index_of(in.op)];
  if (!s.pc_hist.empty()) ++s.pc_hist[index];
  if (sink) sink->on_retire(TraceEvent{pc, in, cost, s.cycles, taken});
  if (s.halted) return StepResult::Halted;
  s.pc = next;
  return StepResult::Continue;
}

void check_variant(const Program& program, Variant variant) {
  for (std::size_t i = 0; i < program.text.size(); ++i) {
    const Op op = program.text[i].op;
    if (!supports(variant, op))
      throw SimError("instruction " + std::to_string(i) + " ('" + std::string(mnemonic(op)) + "') requires " +
                     std::string(variant_name(required_variant(op))) + ", running on " +
                     std::string(variant_name(variant)));
  }
}

RunResult run(const Program& program, Variant variant, const CycleModel& model, const RunLimits& limits,
              TraceSink* sink) {
  model.validate();
  check_variant(program, variant);
  RunResult r{MachineState::boot(program, limits.memory_bytes, limits.histogram)};
  std::uint64_t steps = 0;
  while (step(r.state, program, model, sink) == StepResult::Continue) {
    if (++steps >= limits.max_steps) throw BudgetExceeded(limits.max_steps);
  }
  r.cycles = r.state.cycles;
  r.retired = r.state.retired_total();
  return r;
}

namespace {
class Collector final : public TraceSink {
 public:
  void on_retire(const TraceEvent& e) override { events.push_back(e); }
  std::vector<TraceEvent> events;
};
}  // namespace

std::vector<TraceEvent> trace(const Program& program, Variant variant, const CycleModel& model,
                              const RunLimits& limits) {
  Collector c;
  run(program, variant, model, limits, &c);
  return std::move(c.events);
}

}  // namespace marvel
