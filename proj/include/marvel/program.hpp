#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "marvel/isa.hpp"

namespace marvel {

/// Bit i set means register xi.
using RegMask = std::uint32_t;

inline constexpr RegMask reg_bit(unsigned reg) { return reg == 0 ? 0u : (1u << reg); }

/// An assembled program: text in program memory starting at address 0 and
/// an initial data-memory image, also based at address 0.
struct Program {
  std::vector<Instruction> text;
  /// Text labels to instruction index; index == text.size() names the end of text.
  std::map<std::string, std::size_t> labels;
  /// Data labels to byte address in data memory.
  std::map<std::string, std::uint32_t> data_symbols;
  std::vector<std::uint8_t> data;
  std::size_t entry = 0;
  /// Source line of each instruction (0 when unknown).
  std::vector<int> lines;
  /// Registers whose values are observable when the program halts.
  RegMask live_out = 0;

  std::size_t pm_bytes() const { return 4 * text.size(); }
  std::size_t dm_bytes() const { return data.size(); }

  friend bool operator==(const Program&, const Program&) = default;
};

/// Text and data equality, ignoring labels and source lines.
inline bool same_image(const Program& a, const Program& b) {
  return a.text == b.text && a.data == b.data && a.entry == b.entry;
}

}  // namespace marvel
