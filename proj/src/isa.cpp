#include "marvel/isa.hpp"

#include <algorithm>
#include <charconv>

namespace marvel {
namespace {

struct OpInfo {
  Op op;
  std::string_view name;
  Format format;
  std::uint32_t opcode;
  std::uint32_t funct3;
  std::uint32_t funct7;
};

constexpr std::uint32_t kNone = 0;

// clang-format off
constexpr std::array<OpInfo, kOpCount> kOps{{
    {Op::Lui,      "lui",      Format::U,      opcode::kLui,     kNone, kNone},
    {Op::Auipc,    "auipc",    Format::U,      opcode::kAuipc,   kNone, kNone},
    {Op::Jal,      "jal",      Format::J,      opcode::kJal,     kNone, kNone},
    {Op::Jalr,     "jalr",     Format::I,      opcode::kJalr,    0, kNone},
    {Op::Beq,      "beq",      Format::B,      opcode::kBranch,  0, kNone},
    {Op::Bne,      "bne",      Format::B,      opcode::kBranch,  1, kNone},
    {Op::Blt,      "blt",      Format::B,      opcode::kBranch,  4, kNone},
    {Op::Bge,      "bge",      Format::B,      opcode::kBranch,  5, kNone},
    {Op::Bltu,     "bltu",     Format::B,      opcode::kBranch,  6, kNone},
    {Op::Bgeu,     "bgeu",     Format::B,      opcode::kBranch,  7, kNone},
    {Op::Lb,       "lb",       Format::I,      opcode::kLoad,    0, kNone},
    {Op::Lh,       "lh",       Format::I,      opcode::kLoad,    1, kNone},
    {Op::Lw,       "lw",       Format::I,      opcode::kLoad,    2, kNone},
    {Op::Lbu,      "lbu",      Format::I,      opcode::kLoad,    4, kNone},
    {Op::Lhu,      "lhu",      Format::I,      opcode::kLoad,    5, kNone},
    {Op::Sb,       "sb",       Format::S,      opcode::kStore,   0, kNone},
    {Op::Sh,       "sh",       Format::S,      opcode::kStore,   1, kNone},
    {Op::Sw,       "sw",       Format::S,      opcode::kStore,   2, kNone},
    {Op::Addi,     "addi",     Format::I,      opcode::kOpImm,   0, kNone},
    {Op::Slti,     "slti",     Format::I,      opcode::kOpImm,   2, kNone},
    {Op::Sltiu,    "sltiu",    Format::I,      opcode::kOpImm,   3, kNone},
    {Op::Xori,     "xori",     Format::I,      opcode::kOpImm,   4, kNone},
    {Op::Ori,      "ori",      Format::I,      opcode::kOpImm,   6, kNone},
    {Op::Andi,     "andi",     Format::I,      opcode::kOpImm,   7, kNone},
    {Op::Slli,     "slli",     Format::Shift,  opcode::kOpImm,   1, 0x00},
    {Op::Srli,     "srli",     Format::Shift,  opcode::kOpImm,   5, 0x00},
    {Op::Srai,     "srai",     Format::Shift,  opcode::kOpImm,   5, 0x20},
    {Op::Add,      "add",      Format::R,      opcode::kOp,      0, 0x00},
    {Op::Sub,      "sub",      Format::R,      opcode::kOp,      0, 0x20},
    {Op::Sll,      "sll",      Format::R,      opcode::kOp,      1, 0x00},
    {Op::Slt,      "slt",      Format::R,      opcode::kOp,      2, 0x00},
    {Op::Sltu,     "sltu",     Format::R,      opcode::kOp,      3, 0x00},
    {Op::Xor,      "xor",      Format::R,      opcode::kOp,      4, 0x00},
    {Op::Srl,      "srl",      Format::R,      opcode::kOp,      5, 0x00},
    {Op::Sra,      "sra",      Format::R,      opcode::kOp,      5, 0x20},
    {Op::Or,       "or",       Format::R,      opcode::kOp,      6, 0x00},
    {Op::And,      "and",      Format::R,      opcode::kOp,      7, 0x00},
    {Op::Fence,    "fence",    Format::Fence,  opcode::kMiscMem, 0, kNone},
    {Op::Ecall,    "ecall",    Format::System, opcode::kSystem,  0, kNone},
    {Op::Ebreak,   "ebreak",   Format::System, opcode::kSystem,  0, kNone},
    {Op::Mul,      "mul",      Format::R,      opcode::kOp,      0, 0x01},
    {Op::Mulh,     "mulh",     Format::R,      opcode::kOp,      1, 0x01},
    {Op::Mulhsu,   "mulhsu",   Format::R,      opcode::kOp,      2, 0x01},
    {Op::Mulhu,    "mulhu",    Format::R,      opcode::kOp,      3, 0x01},
    {Op::Div,      "div",      Format::R,      opcode::kOp,      4, 0x01},
    {Op::Divu,     "divu",     Format::R,      opcode::kOp,      5, 0x01},
    {Op::Rem,      "rem",      Format::R,      opcode::kOp,      6, 0x01},
    {Op::Remu,     "remu",     Format::R,      opcode::kOp,      7, 0x01},
    {Op::Mac,      "mac",      Format::Mac,    opcode::kCustom2, kNone, kNone},
    {Op::Add2i,    "add2i",    Format::Dual,   opcode::kCustom1, kNone, kNone},
    {Op::Fusedmac, "fusedmac", Format::Dual,   opcode::kCustom0, kNone, kNone},
    {Op::Dlp,      "dlp",      Format::ZolReg, opcode::kZol,     0, kNone},
    {Op::Dlpi,     "dlpi",     Format::ZolImm, opcode::kZol,     1, kNone},
    {Op::Zlp,      "zlp",      Format::ZolOff, opcode::kZol,     2, kNone},
    {Op::SetZc,    "set.zc",   Format::ZolSet, opcode::kZol,     4, kNone},
    {Op::SetZs,    "set.zs",   Format::ZolSet, opcode::kZol,     5, kNone},
    {Op::SetZe,    "set.ze",   Format::ZolSet, opcode::kZol,     6, kNone},
    {Op::Illegal,  "illegal",  Format::Illegal, 0, kNone, kNone},
}};
// clang-format on

constexpr bool table_is_ordered() {
  for (std::size_t i = 0; i < kOps.size(); ++i)
    if (index_of(kOps[i].op) != i) return false;
  return true;
}
static_assert(table_is_ordered());

const OpInfo& info(Op op) { return kOps[index_of(op)]; }

constexpr std::uint32_t bits(std::uint32_t word, unsigned hi, unsigned lo) {
  return (word >> lo) & ((1u << (hi - lo + 1)) - 1u);
}

constexpr std::int32_t sign_extend(std::uint32_t value, unsigned width) {
  const std::uint32_t m = 1u << (width - 1);
  return static_cast<std::int32_t>((value ^ m) - m);
}

void check_reg(unsigned reg, const char* field) {
  if (reg > 31) throw RangeError(field, std::string(field) + " register index out of range: " + std::to_string(reg));
}

void check_range(std::int64_t value, std::int64_t lo, std::int64_t hi, const char* field) {
  if (value < lo || value > hi)
    throw RangeError(field, std::string(field) + " out of range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]: " + std::to_string(value));
}

void check_zero(std::int64_t value, const char* field) {
  if (value != 0) throw RangeError(field, std::string(field) + " must be zero for this instruction");
}

std::uint32_t r_word(const OpInfo& oi, std::uint32_t rd, std::uint32_t rs1, std::uint32_t rs2) {
  return (oi.funct7 << 25) | (rs2 << 20) | (rs1 << 15) | (oi.funct3 << 12) | (rd << 7) | oi.opcode;
}

std::uint32_t i_word(const OpInfo& oi, std::uint32_t rd, std::uint32_t rs1, std::int32_t imm) {
  return (static_cast<std::uint32_t>(imm & 0xFFF) << 20) | (rs1 << 15) | (oi.funct3 << 12) | (rd << 7) |
         oi.opcode;
}

// The zol group uses funct3 at [14:12]; the 12-bit offset lives at [31:20].
std::uint32_t zol_word(const OpInfo& oi, std::uint32_t low5, std::uint32_t mid5, std::int32_t offset) {
  return (static_cast<std::uint32_t>(offset & 0xFFF) << 20) | (mid5 << 15) | (oi.funct3 << 12) |
         (low5 << 7) | oi.opcode;
}

std::optional<Op> find_op(std::uint32_t opc, std::uint32_t funct3, std::uint32_t funct7, Format fmt) {
  for (const auto& oi : kOps) {
    if (oi.opcode != opc || oi.format != fmt) continue;
    if (oi.funct3 != funct3) continue;
    if ((fmt == Format::R || fmt == Format::Shift) && oi.funct7 != funct7) continue;
    return oi.op;
  }
  return std::nullopt;
}

}  // namespace

Format format_of(Op op) { return info(op).format; }
std::string_view mnemonic(Op op) { return info(op).name; }
std::uint32_t major_opcode(Op op) { return info(op).opcode; }

std::optional<Op> op_from_mnemonic(std::string_view text) {
  for (const auto& oi : kOps)
    if (oi.op != Op::Illegal && oi.name == text) return oi.op;
  // underscore spellings of the loop-register setters
  if (text == "set_zc") return Op::SetZc;
  if (text == "set_zs") return Op::SetZs;
  if (text == "set_ze") return Op::SetZe;
  return std::nullopt;
}

bool is_custom(Op op) { return op >= Op::Mac && op <= Op::SetZe; }
bool is_branch(Op op) { return op >= Op::Beq && op <= Op::Bgeu; }
bool is_load(Op op) { return op >= Op::Lb && op <= Op::Lhu; }
bool is_store(Op op) { return op >= Op::Sb && op <= Op::Sw; }
bool is_zol(Op op) { return op >= Op::Dlp && op <= Op::SetZe; }
bool is_control(Op op) {
  return is_branch(op) || op == Op::Jal || op == Op::Jalr || is_zol(op) || op == Op::Ecall ||
         op == Op::Ebreak || op == Op::Illegal;
}

Instruction make_r(Op op, unsigned rd, unsigned rs1, unsigned rs2) {
  return {op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(rs1), static_cast<std::uint8_t>(rs2), 0, 0};
}
Instruction make_i(Op op, unsigned rd, unsigned rs1, std::int32_t imm) {
  return {op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(rs1), 0, imm, 0};
}
Instruction make_s(Op op, unsigned rs1, unsigned rs2, std::int32_t imm) {
  return {op, 0, static_cast<std::uint8_t>(rs1), static_cast<std::uint8_t>(rs2), imm, 0};
}
Instruction make_b(Op op, unsigned rs1, unsigned rs2, std::int32_t offset) {
  return {op, 0, static_cast<std::uint8_t>(rs1), static_cast<std::uint8_t>(rs2), offset, 0};
}
Instruction make_u(Op op, unsigned rd, std::int32_t imm20) {
  return {op, static_cast<std::uint8_t>(rd), 0, 0, imm20, 0};
}
Instruction make_j(unsigned rd, std::int32_t offset) {
  return {Op::Jal, static_cast<std::uint8_t>(rd), 0, 0, offset, 0};
}
Instruction make_mac() { return {Op::Mac, 0, 0, 0, 0, 0}; }
Instruction make_dual(Op op, unsigned rs1, unsigned rs2, std::int32_t i1, std::int32_t i2) {
  return {op, 0, static_cast<std::uint8_t>(rs1), static_cast<std::uint8_t>(rs2), i1, i2};
}
Instruction make_dlp(unsigned rs1, std::int32_t word_offset) {
  return {Op::Dlp, 0, static_cast<std::uint8_t>(rs1), 0, word_offset, 0};
}
Instruction make_dlpi(std::int32_t count, std::int32_t word_offset) {
  return {Op::Dlpi, 0, 0, 0, word_offset, count};
}
Instruction make_zlp(std::int32_t word_offset) { return {Op::Zlp, 0, 0, 0, word_offset, 0}; }
Instruction make_zol_set(Op op, unsigned rs1) { return {op, 0, static_cast<std::uint8_t>(rs1), 0, 0, 0}; }
Instruction make_illegal(std::uint32_t word) {
  return {Op::Illegal, 0, 0, 0, static_cast<std::int32_t>(word), 0};
}

void validate(const Instruction& in) {
  check_reg(in.rd, "rd");
  check_reg(in.rs1, "rs1");
  check_reg(in.rs2, "rs2");
  switch (format_of(in.op)) {
    case Format::R:
      check_zero(in.imm, "imm");
      break;
    case Format::I:
      check_zero(in.rs2, "rs2");
      check_range(in.imm, -2048, 2047, "imm");
      break;
    case Format::Shift:
      check_zero(in.rs2, "rs2");
      check_range(in.imm, 0, 31, "shamt");
      break;
    case Format::S:
      check_zero(in.rd, "rd");
      check_range(in.imm, -2048, 2047, "imm");
      break;
    case Format::B:
      check_zero(in.rd, "rd");
      check_range(in.imm, -4096, 4094, "offset");
      if (in.imm % 2 != 0) throw RangeError("offset", "branch offset must be even");
      break;
    case Format::U:
      check_zero(in.rs1, "rs1");
      check_zero(in.rs2, "rs2");
      check_range(in.imm, 0, 0xFFFFF, "imm");
      break;
    case Format::J:
      check_zero(in.rs1, "rs1");
      check_zero(in.rs2, "rs2");
      check_range(in.imm, -(1 << 20), (1 << 20) - 2, "offset");
      if (in.imm % 2 != 0) throw RangeError("offset", "jump offset must be even");
      break;
    case Format::Fence:
      check_zero(in.rd, "rd");
      check_zero(in.rs1, "rs1");
      check_zero(in.rs2, "rs2");
      check_range(in.imm, 0, 0xFFF, "imm");
      break;
    case Format::System:
    case Format::Mac:
      check_zero(in.rd, "rd");
      check_zero(in.rs1, "rs1");
      check_zero(in.rs2, "rs2");
      check_zero(in.imm, "imm");
      break;
    case Format::Dual:
      check_zero(in.rd, "rd");
      check_range(in.imm, 0, kI1Max, "i1");
      check_range(in.imm2, 0, kI2Max, "i2");
      return;
    case Format::ZolReg:
      check_zero(in.rd, "rd");
      check_zero(in.rs2, "rs2");
      check_range(in.imm, kZolOffsetMin, kZolOffsetMax, "offset");
      break;
    case Format::ZolImm:
      check_zero(in.rd, "rd");
      check_zero(in.rs1, "rs1");
      check_zero(in.rs2, "rs2");
      check_range(in.imm, kZolOffsetMin, kZolOffsetMax, "offset");
      check_range(in.imm2, 0, kZolCountMax, "count");
      return;
    case Format::ZolOff:
      check_zero(in.rd, "rd");
      check_zero(in.rs1, "rs1");
      check_zero(in.rs2, "rs2");
      check_range(in.imm, kZolOffsetMin, kZolOffsetMax, "offset");
      break;
    case Format::ZolSet:
      check_zero(in.rd, "rd");
      check_zero(in.rs2, "rs2");
      check_zero(in.imm, "imm");
      break;
    case Format::Illegal:
      return;
  }
  check_zero(in.imm2, "imm2");
}

std::uint32_t encode(const Instruction& in) {
  validate(in);
  const OpInfo& oi = info(in.op);
  const std::uint32_t rd = in.rd, rs1 = in.rs1, rs2 = in.rs2;
  const auto imm = static_cast<std::uint32_t>(in.imm);
  switch (oi.format) {
    case Format::R:
      return r_word(oi, rd, rs1, rs2);
    case Format::I:
      return i_word(oi, rd, rs1, in.imm);
    case Format::Shift:
      return (oi.funct7 << 25) | (imm << 20) | (rs1 << 15) | (oi.funct3 << 12) | (rd << 7) | oi.opcode;
    case Format::S:
      return (bits(imm, 11, 5) << 25) | (rs2 << 20) | (rs1 << 15) | (oi.funct3 << 12) | (bits(imm, 4, 0) << 7) |
             oi.opcode;
    case Format::B:
      return (bits(imm, 12, 12) << 31) | (bits(imm, 10, 5) << 25) | (rs2 << 20) | (rs1 << 15) |
             (oi.funct3 << 12) | (bits(imm, 4, 1) << 8) | (bits(imm, 11, 11) << 7) | oi.opcode;
    case Format::U:
      return (imm << 12) | (rd << 7) | oi.opcode;
    case Format::J:
      return (bits(imm, 20, 20) << 31) | (bits(imm, 10, 1) << 21) | (bits(imm, 11, 11) << 20) |
             (bits(imm, 19, 12) << 12) | (rd << 7) | oi.opcode;
    case Format::Fence:
      return (imm << 20) | oi.opcode;
    case Format::System:
      return (in.op == Op::Ebreak ? (1u << 20) : 0u) | oi.opcode;
    case Format::Mac:
      return oi.opcode;
    case Format::Dual: {
      // rs1 [19:15], rs2 [24:20], i1 [11:7], i2 high 3 bits [14:12], i2 low 7 bits [31:25]
      const auto i2 = static_cast<std::uint32_t>(in.imm2);
      return (bits(i2, 6, 0) << 25) | (rs2 << 20) | (rs1 << 15) | (bits(i2, 9, 7) << 12) | (imm << 7) | oi.opcode;
    }
    case Format::ZolReg:
      return zol_word(oi, 0, rs1, in.imm);
    case Format::ZolImm: {
      // trip count: low 5 bits [11:7], high 5 bits [19:15]
      const auto count = static_cast<std::uint32_t>(in.imm2);
      return zol_word(oi, bits(count, 4, 0), bits(count, 9, 5), in.imm);
    }
    case Format::ZolOff:
      return zol_word(oi, 0, 0, in.imm);
    case Format::ZolSet:
      return zol_word(oi, 0, rs1, 0);
    case Format::Illegal:
      return imm;
  }
  return imm;
}

Instruction decode(std::uint32_t w) {
  const std::uint32_t opc = bits(w, 6, 0);
  const auto rd = static_cast<std::uint8_t>(bits(w, 11, 7));
  const std::uint32_t funct3 = bits(w, 14, 12);
  const auto rs1 = static_cast<std::uint8_t>(bits(w, 19, 15));
  const auto rs2 = static_cast<std::uint8_t>(bits(w, 24, 20));
  const std::uint32_t funct7 = bits(w, 31, 25);
  const Instruction bad = make_illegal(w);

  switch (opc) {
    case opcode::kLui:
    case opcode::kAuipc:
      return make_u(opc == opcode::kLui ? Op::Lui : Op::Auipc, rd, static_cast<std::int32_t>(bits(w, 31, 12)));
    case opcode::kJal: {
      const std::uint32_t off = (bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) | (bits(w, 20, 20) << 11) |
                                (bits(w, 30, 21) << 1);
      return make_j(rd, sign_extend(off, 21));
    }
    case opcode::kJalr:
      if (funct3 != 0) return bad;
      return make_i(Op::Jalr, rd, rs1, sign_extend(bits(w, 31, 20), 12));
    case opcode::kBranch: {
      auto op = find_op(opc, funct3, 0, Format::B);
      if (!op) return bad;
      const std::uint32_t off = (bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) | (bits(w, 30, 25) << 5) |
                                (bits(w, 11, 8) << 1);
      return make_b(*op, rs1, rs2, sign_extend(off, 13));
    }
    case opcode::kLoad: {
      auto op = find_op(opc, funct3, 0, Format::I);
      if (!op) return bad;
      return make_i(*op, rd, rs1, sign_extend(bits(w, 31, 20), 12));
    }
    case opcode::kStore: {
      auto op = find_op(opc, funct3, 0, Format::S);
      if (!op) return bad;
      const std::uint32_t imm = (bits(w, 31, 25) << 5) | bits(w, 11, 7);
      return make_s(*op, rs1, rs2, sign_extend(imm, 12));
    }
    case opcode::kOpImm: {
      if (funct3 == 1 || funct3 == 5) {
        auto op = find_op(opc, funct3, funct7, Format::Shift);
        if (!op) return bad;
        return make_i(*op, rd, rs1, static_cast<std::int32_t>(rs2));
      }
      auto op = find_op(opc, funct3, 0, Format::I);
      if (!op) return bad;
      return make_i(*op, rd, rs1, sign_extend(bits(w, 31, 20), 12));
    }
    case opcode::kOp: {
      auto op = find_op(opc, funct3, funct7, Format::R);
      if (!op) return bad;
      return make_r(*op, rd, rs1, rs2);
    }
    case opcode::kMiscMem:
      if (funct3 != 0 || rd != 0 || rs1 != 0) return bad;
      return {Op::Fence, 0, 0, 0, static_cast<std::int32_t>(bits(w, 31, 20)), 0};
    case opcode::kSystem:
      if (w == 0x00000073u) return {Op::Ecall, 0, 0, 0, 0, 0};
      if (w == 0x00100073u) return {Op::Ebreak, 0, 0, 0, 0, 0};
      return bad;
    case opcode::kCustom2:
      return w == opcode::kCustom2 ? make_mac() : bad;
    case opcode::kCustom1:
    case opcode::kCustom0: {
      const auto i2 = static_cast<std::int32_t>((funct3 << 7) | funct7);
      return make_dual(opc == opcode::kCustom1 ? Op::Add2i : Op::Fusedmac, rs1, rs2, rd, i2);
    }
    case opcode::kZol: {
      const std::int32_t offset = sign_extend(bits(w, 31, 20), 12);
      switch (funct3) {
        case 0:
          return rd == 0 ? make_dlp(rs1, offset) : bad;
        case 1:
          return make_dlpi(static_cast<std::int32_t>((static_cast<std::uint32_t>(rs1) << 5) | rd), offset);
        case 2:
          return (rd == 0 && rs1 == 0) ? make_zlp(offset) : bad;
        case 4:
        case 5:
        case 6:
          if (rd != 0 || bits(w, 31, 20) != 0) return bad;
          return make_zol_set(funct3 == 4 ? Op::SetZc : funct3 == 5 ? Op::SetZs : Op::SetZe, rs1);
        default:
          return bad;
      }
    }
    default:
      return bad;
  }
}

// Registers

namespace {
constexpr std::array<std::string_view, 32> kAbiNames{
    "zero", "ra", "sp", "gp", "tp",  "t0",  "t1", "t2", "s0", "s1", "a0",
    "a1",   "a2", "a3", "a4", "a5",  "a6",  "a7", "s2", "s3", "s4", "s5",
    "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};
}

std::string register_name(unsigned reg) { return "x" + std::to_string(reg); }

std::string_view abi_name(unsigned reg) { return kAbiNames.at(reg); }

std::optional<unsigned> parse_register(std::string_view text) {
  if (text.size() >= 2 && text[0] == 'x') {
    unsigned n = 0;
    auto [p, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), n);
    if (ec == std::errc{} && p == text.data() + text.size() && n < 32) return n;
    return std::nullopt;
  }
  if (text == "fp") return 8u;
  for (unsigned i = 0; i < kAbiNames.size(); ++i)
    if (kAbiNames[i] == text) return i;
  return std::nullopt;
}

// Variants

std::string_view variant_name(Variant v) {
  constexpr std::array<std::string_view, 5> names{"v0", "v1", "v2", "v3", "v4"};
  return names[static_cast<std::size_t>(v)];
}

std::string_view variant_description(Variant v) {
  constexpr std::array<std::string_view, 5> text{
      "Baseline RISC-V processor (RV32IM)",
      "mac extension enabled on v0",
      "add2i extension enabled on v1",
      "fusedmac extension enabled on v2",
      "Zero-overhead hardware loops (zol) extension enabled on v3",
  };
  return text[static_cast<std::size_t>(v)];
}

std::optional<Variant> parse_variant(std::string_view text) {
  for (Variant v : kAllVariants)
    if (variant_name(v) == text) return v;
  return std::nullopt;
}

Variant required_variant(Op op) {
  switch (op) {
    case Op::Mac:
      return Variant::V1;
    case Op::Add2i:
      return Variant::V2;
    case Op::Fusedmac:
      return Variant::V3;
    case Op::Dlp:
    case Op::Dlpi:
    case Op::Zlp:
    case Op::SetZc:
    case Op::SetZs:
    case Op::SetZe:
      return Variant::V4;
    default:
      return Variant::V0;
  }
}

std::set<Op> extensions_of(Variant v) {
  std::set<Op> out;
  for (const auto& oi : kOps)
    if (is_custom(oi.op) && required_variant(oi.op) <= v) out.insert(oi.op);
  return out;
}

}  // namespace marvel
