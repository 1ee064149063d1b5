#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "marvel/isa.hpp"
#include "marvel/program.hpp"

namespace marvel {

/// Assembly diagnostic; `line()` is the 1-based source line.
class AsmError : public std::runtime_error {
 public:
  AsmError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Two-pass assembler for RV32IM plus the custom mnemonics. Custom
/// instructions are rejected unless `variant` enables them.
///
/// Directives: .text .data .byte .half .word .zero/.space .align .entry
/// .liveout .globl. Pseudo-instructions: li la mv nop not neg j jr ret halt
/// beqz bnez bltz bgez blez bgtz bgt ble bgtu bleu.
Program assemble(std::string_view source, Variant variant);

/// Canonical listing (no pseudo-instructions) that reassembles to the same
/// text and data image.
std::string disassemble(const Program& program);

/// One instruction without label resolution; branch targets print as offsets.
std::string format_instruction(const Instruction& inst);

// Flat binary image: 16-byte header then text words then data bytes, all
// little-endian. Header: "MRVL", u16 version, u16 entry index, u32 text
// bytes, u32 data bytes.

inline constexpr std::uint16_t kImageVersion = 1;
inline constexpr std::size_t kImageHeaderBytes = 16;

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> write_image(const Program& program);
Program read_image(std::span<const std::uint8_t> bytes);

}  // namespace marvel
