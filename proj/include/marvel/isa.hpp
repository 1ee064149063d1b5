#pragma once

// RV32IM instruction set plus the custom fused-arithmetic and hardware-loop
// extensions: instruction model, 32-bit encode/decode, and the variant ladder.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace marvel {

enum class Op : std::uint8_t {
  // RV32I
  Lui, Auipc, Jal, Jalr,
  Beq, Bne, Blt, Bge, Bltu, Bgeu,
  Lb, Lh, Lw, Lbu, Lhu,
  Sb, Sh, Sw,
  Addi, Slti, Sltiu, Xori, Ori, Andi, Slli, Srli, Srai,
  Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And,
  Fence, Ecall, Ebreak,
  // M extension
  Mul, Mulh, Mulhsu, Mulhu, Div, Divu, Rem, Remu,
  // custom extensions
  Mac, Add2i, Fusedmac,
  Dlp, Dlpi, Zlp, SetZc, SetZs, SetZe,
  Illegal,
};

inline constexpr std::size_t kOpCount = static_cast<std::size_t>(Op::Illegal) + 1;

constexpr std::size_t index_of(Op op) { return static_cast<std::size_t>(op); }

enum class Format : std::uint8_t {
  R, I, Shift, S, B, U, J, Fence, System,
  Mac,       // no operand fields
  Dual,      // add2i / fusedmac: rs1, rs2, i1, i2
  ZolReg,    // dlp rs1, end
  ZolImm,    // dlpi count, end
  ZolOff,    // zlp end
  ZolSet,    // set.zc / set.zs / set.ze rs1
  Illegal,
};

Format format_of(Op op);
std::string_view mnemonic(Op op);
std::optional<Op> op_from_mnemonic(std::string_view text);

bool is_custom(Op op);
bool is_branch(Op op);   // conditional branches only
bool is_load(Op op);
bool is_store(Op op);
bool is_zol(Op op);
bool is_control(Op op);  // anything that can redirect the pc or arm the loop unit

// Hardwired mac operands.
inline constexpr unsigned kMacAcc = 20;
inline constexpr unsigned kMacLhs = 21;
inline constexpr unsigned kMacRhs = 22;

// Immediate ranges of the dual-increment formats.
inline constexpr std::int32_t kI1Max = 31;
inline constexpr std::int32_t kI2Max = 1023;
// dlpi trip count and the signed word offset carried by zol setups.
inline constexpr std::int32_t kZolCountMax = 1023;
inline constexpr std::int32_t kZolOffsetMin = -2048;
inline constexpr std::int32_t kZolOffsetMax = 2047;

namespace opcode {
inline constexpr std::uint32_t kLui = 0x37;
inline constexpr std::uint32_t kAuipc = 0x17;
inline constexpr std::uint32_t kJal = 0x6F;
inline constexpr std::uint32_t kJalr = 0x67;
inline constexpr std::uint32_t kBranch = 0x63;
inline constexpr std::uint32_t kLoad = 0x03;
inline constexpr std::uint32_t kStore = 0x23;
inline constexpr std::uint32_t kOpImm = 0x13;
inline constexpr std::uint32_t kOp = 0x33;
inline constexpr std::uint32_t kMiscMem = 0x0F;
inline constexpr std::uint32_t kSystem = 0x73;
inline constexpr std::uint32_t kCustom0 = 0b0001011;  // fusedmac
inline constexpr std::uint32_t kCustom1 = 0b0101011;  // add2i
inline constexpr std::uint32_t kCustom2 = 0b1011011;  // mac
inline constexpr std::uint32_t kZol = 0b1110111;      // hardware loops, major bits 11101
}  // namespace opcode

std::uint32_t major_opcode(Op op);

/// One decoded instruction. Unused fields are zero, so equality is exact.
///
/// `imm` holds the I/S/B/J immediate (B and J as byte offsets), the 20-bit
/// U field, the shift amount, the fence bits [31:20], `i1` for add2i and
/// fusedmac, the signed word offset of a zol setup, or the raw word of an
/// illegal instruction. `imm2` holds `i2` and the dlpi trip count.
struct Instruction {
  Op op = Op::Illegal;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  std::int32_t imm = 0;
  std::int32_t imm2 = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

Instruction make_r(Op op, unsigned rd, unsigned rs1, unsigned rs2);
Instruction make_i(Op op, unsigned rd, unsigned rs1, std::int32_t imm);
Instruction make_s(Op op, unsigned rs1, unsigned rs2, std::int32_t imm);
Instruction make_b(Op op, unsigned rs1, unsigned rs2, std::int32_t offset);
Instruction make_u(Op op, unsigned rd, std::int32_t imm20);
Instruction make_j(unsigned rd, std::int32_t offset);
Instruction make_mac();
Instruction make_dual(Op op, unsigned rs1, unsigned rs2, std::int32_t i1, std::int32_t i2);
Instruction make_dlp(unsigned rs1, std::int32_t word_offset);
Instruction make_dlpi(std::int32_t count, std::int32_t word_offset);
Instruction make_zlp(std::int32_t word_offset);
Instruction make_zol_set(Op op, unsigned rs1);
Instruction make_illegal(std::uint32_t word);

/// The halt marker: an unconditional jump to itself.
inline bool is_halt(const Instruction& inst) {
  return inst.op == Op::Jal && inst.rd == 0 && inst.imm == 0;
}

/// Raised when an instruction field does not fit its encoding.
class RangeError : public std::out_of_range {
 public:
  RangeError(std::string field, const std::string& message)
      : std::out_of_range(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Throws RangeError naming the offending field.
void validate(const Instruction& inst);

std::uint32_t encode(const Instruction& inst);

/// Never fails; unknown or non-canonical words decode to Op::Illegal.
Instruction decode(std::uint32_t word);

// Registers

std::string register_name(unsigned reg);  // "x5"
std::string_view abi_name(unsigned reg);  // "t0"
std::optional<unsigned> parse_register(std::string_view text);

// Variant ladder

enum class Variant : std::uint8_t { V0, V1, V2, V3, V4 };

inline constexpr std::array<Variant, 5> kAllVariants{Variant::V0, Variant::V1, Variant::V2,
                                                     Variant::V3, Variant::V4};

std::string_view variant_name(Variant v);
std::string_view variant_description(Variant v);
std::optional<Variant> parse_variant(std::string_view text);

/// Lowest variant on which `op` exists; V0 for the RV32IM base.
Variant required_variant(Op op);

/// Custom instructions enabled on `v` (cumulative up the ladder).
std::set<Op> extensions_of(Variant v);

inline bool supports(Variant v, Op op) { return required_variant(op) <= v; }

}  // namespace marvel
