#include "marvel/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <optional>
#include <set>
#include <sstream>

namespace marvel {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view strip_comment(std::string_view line) {
  std::size_t cut = line.size();
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' || line[i] == ';' || (line[i] == '/' && i + 1 < line.size() && line[i + 1] == '/')) {
      cut = i;
      break;
    }
  }
  return line.substr(0, cut);
}

std::vector<std::string> split_operands(std::string_view s) {
  std::vector<std::string> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

bool is_symbol_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$'; }
bool is_symbol_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$'; }

bool is_symbol(std::string_view s) {
  if (s.empty() || !is_symbol_start(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(), is_symbol_char);
}

std::optional<std::int64_t> parse_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  bool negative = false;
  if (s[0] == '-' || s[0] == '+') {
    negative = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
    base = 2;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t value = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc{} || p != s.data() + s.size() || value > 0xFFFFFFFFull) return std::nullopt;
  const auto v = static_cast<std::int64_t>(value);
  return negative ? -v : v;
}

std::int32_t hi20(std::int64_t v) { return static_cast<std::int32_t>(((v + 0x800) >> 12) & 0xFFFFF); }
std::int32_t lo12(std::int64_t v) {
  const auto low = static_cast<std::uint32_t>(v) & 0xFFFu;
  return static_cast<std::int32_t>((low ^ 0x800u)) - 0x800;
}
bool fits12(std::int64_t v) { return v >= -2048 && v <= 2047; }

// li of a literal expands to one instruction when a single addi or lui suffices.
std::size_t li_size(std::int64_t v) {
  if (fits12(v)) return 1;
  return lo12(v) == 0 ? 1 : 2;
}

enum class Section { Text, Data };

struct TextLine {
  int line;
  std::string mnemonic;
  std::vector<std::string> operands;
  std::size_t index;
};

struct DataLine {
  int line;
  std::string directive;
  std::vector<std::string> operands;
  std::uint32_t offset;
};

class Assembler {
 public:
  Assembler(std::string_view source, Variant variant) : source_(source), variant_(variant) {}

  Program run() {
    first_pass();
    second_pass();
    return std::move(prog_);
  }

 private:
  [[noreturn]] void fail(int line, const std::string& msg) const { throw AsmError(line, msg); }

  void define_label(int line, const std::string& name, Section section) {
    if (prog_.labels.count(name) || prog_.data_symbols.count(name)) fail(line, "duplicate label '" + name + "'");
    if (section == Section::Text)
      prog_.labels[name] = text_count_;
    else
      prog_.data_symbols[name] = data_offset_;
  }

  std::size_t text_size_of(int line, const std::string& mn, const std::vector<std::string>& ops) {
    if (mn == "la") return 2;
    if (mn == "li") {
      if (ops.size() != 2) fail(line, "li expects 2 operands");
      if (auto v = parse_integer(ops[1])) return li_size(*v);
      return 2;
    }
    return 1;
  }

  std::uint32_t data_size_of(int line, const std::string& dir, const std::vector<std::string>& ops) {
    if (dir == ".byte") return static_cast<std::uint32_t>(ops.size());
    if (dir == ".half") return static_cast<std::uint32_t>(2 * ops.size());
    if (dir == ".word") return static_cast<std::uint32_t>(4 * ops.size());
    if (dir == ".zero" || dir == ".space") {
      if (ops.size() != 1) fail(line, dir + " expects 1 operand");
      auto n = parse_integer(ops[0]);
      if (!n || *n < 0) fail(line, "invalid size for " + dir);
      return static_cast<std::uint32_t>(*n);
    }
    if (dir == ".align") {
      if (ops.size() != 1) fail(line, ".align expects 1 operand");
      auto n = parse_integer(ops[0]);
      if (!n || *n < 0 || *n > 12) fail(line, "invalid alignment");
      const std::uint32_t a = 1u << *n;
      return (a - data_offset_ % a) % a;
    }
    fail(line, "unknown directive '" + dir + "'");
  }

  void first_pass() {
    Section section = Section::Text;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= source_.size()) {
      std::size_t eol = source_.find('\n', pos);
      if (eol == std::string_view::npos) eol = source_.size();
      std::string_view line = strip_comment(source_.substr(pos, eol - pos));
      pos = eol + 1;
      ++line_no;

      line = trim(line);
      // leading labels
      while (true) {
        std::size_t i = 0;
        if (line.empty() || !is_symbol_start(line[0])) break;
        while (i < line.size() && is_symbol_char(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j >= line.size() || line[j] != ':') break;
        define_label(line_no, std::string(line.substr(0, i)), section);
        line = trim(line.substr(j + 1));
      }
      if (line.empty()) continue;

      std::size_t sp = 0;
      while (sp < line.size() && !std::isspace(static_cast<unsigned char>(line[sp]))) ++sp;
      const std::string head = lower(line.substr(0, sp));
      auto operands = split_operands(line.substr(sp));

      if (head == ".text") {
        section = Section::Text;
      } else if (head == ".data") {
        section = Section::Data;
      } else if (head == ".globl" || head == ".global") {
        // no linking
      } else if (head == ".entry" || head == ".liveout") {
        directives_.push_back({line_no, head, operands, 0});
      } else if (section == Section::Text) {
        if (head == ".word") {
          for (auto& op : operands) text_.push_back({line_no, ".word", {op}, text_count_++});
        } else if (!head.empty() && head[0] == '.') {
          fail(line_no, "directive '" + head + "' not allowed in .text");
        } else {
          const std::size_t n = text_size_of(line_no, head, operands);
          text_.push_back({line_no, head, std::move(operands), text_count_});
          text_count_ += n;
        }
      } else {
        if (head.empty() || head[0] != '.') fail(line_no, "instruction '" + head + "' in .data section");
        const std::uint32_t n = data_size_of(line_no, head, operands);
        data_.push_back({line_no, head, std::move(operands), data_offset_});
        data_offset_ += n;
      }
    }
    data_total_ = data_offset_;
  }

  std::int64_t symbol_value(int line, std::string_view name) const {
    if (auto it = prog_.labels.find(std::string(name)); it != prog_.labels.end())
      return static_cast<std::int64_t>(4 * it->second);
    if (auto it = prog_.data_symbols.find(std::string(name)); it != prog_.data_symbols.end()) return it->second;
    fail(line, "undefined label '" + std::string(name) + "'");
  }

  // integer | symbol | symbol(+|-)integer | %hi(expr) | %lo(expr)
  std::int64_t value(int line, std::string_view text) const {
    text = trim(text);
    if (auto v = parse_integer(text)) return *v;
    auto wrapped = [&](std::string_view prefix) -> std::optional<std::string_view> {
      if (text.size() > prefix.size() + 1 && text.substr(0, prefix.size()) == prefix && text.back() == ')')
        return text.substr(prefix.size(), text.size() - prefix.size() - 1);
      return std::nullopt;
    };
    if (auto inner = wrapped("%hi(")) return hi20(value(line, *inner));
    if (auto inner = wrapped("%lo(")) return lo12(value(line, *inner));
    std::size_t split = text.find_first_of("+-", 1);
    if (split != std::string_view::npos && is_symbol(trim(text.substr(0, split)))) {
      auto offset = parse_integer(text.substr(split));
      if (!offset) fail(line, "invalid expression '" + std::string(text) + "'");
      return symbol_value(line, trim(text.substr(0, split))) + *offset;
    }
    if (is_symbol(text)) return symbol_value(line, text);
    fail(line, "invalid immediate '" + std::string(text) + "'");
  }

  unsigned reg(int line, std::string_view text) const {
    auto r = parse_register(lower(trim(text)));
    if (!r) fail(line, "invalid register '" + std::string(text) + "'");
    return *r;
  }

  // "imm(reg)" or "(reg)"
  std::pair<std::int32_t, unsigned> mem_operand(int line, std::string_view text) const {
    text = trim(text);
    const auto open = text.find('(');
    if (open == std::string_view::npos || text.back() != ')') fail(line, "expected imm(reg), got '" + std::string(text) + "'");
    const auto imm_text = trim(text.substr(0, open));
    const std::int64_t imm = imm_text.empty() ? 0 : value(line, imm_text);
    return {static_cast<std::int32_t>(imm), reg(line, text.substr(open + 1, text.size() - open - 2))};
  }

  std::int32_t branch_offset(int line, std::string_view text, std::size_t index) const {
    text = trim(text);
    if (auto v = parse_integer(text)) return static_cast<std::int32_t>(*v);
    auto it = prog_.labels.find(std::string(text));
    if (it == prog_.labels.end()) fail(line, "undefined label '" + std::string(text) + "'");
    return static_cast<std::int32_t>((static_cast<std::int64_t>(it->second) - static_cast<std::int64_t>(index)) * 4);
  }

  std::int32_t zol_offset(int line, std::string_view text, std::size_t index) const {
    text = trim(text);
    if (auto v = parse_integer(text)) return static_cast<std::int32_t>(*v);
    auto it = prog_.labels.find(std::string(text));
    if (it == prog_.labels.end()) fail(line, "undefined label '" + std::string(text) + "'");
    return static_cast<std::int32_t>(static_cast<std::int64_t>(it->second) - static_cast<std::int64_t>(index));
  }

  void expect(int line, const std::string& mn, const std::vector<std::string>& ops, std::size_t n) const {
    if (ops.size() != n)
      fail(line, "'" + mn + "' expects " + std::to_string(n) + " operand" + (n == 1 ? "" : "s") + ", got " +
                     std::to_string(ops.size()));
  }

  void emit(int line, Instruction inst) {
    if (!supports(variant_, inst.op))
      fail(line, "'" + std::string(mnemonic(inst.op)) + "' requires variant >= " +
                     std::string(variant_name(required_variant(inst.op))) + " (assembling for " +
                     std::string(variant_name(variant_)) + ")");
    try {
      validate(inst);
    } catch (const RangeError& e) {
      fail(line, std::string("immediate out of range: ") + e.what());
    }
    prog_.text.push_back(inst);
    prog_.lines.push_back(line);
  }

  void emit_li(int line, unsigned rd, std::int64_t v, bool force_pair) {
    if (!force_pair && fits12(v)) {
      emit(line, make_i(Op::Addi, rd, 0, static_cast<std::int32_t>(v)));
      return;
    }
    emit(line, make_u(Op::Lui, rd, hi20(v)));
    if (force_pair || lo12(v) != 0) emit(line, make_i(Op::Addi, rd, rd, lo12(v)));
  }

  std::int32_t imm32(int line, std::string_view text) const {
    const std::int64_t v = value(line, text);
    if (v < INT32_MIN || v > static_cast<std::int64_t>(UINT32_MAX)) fail(line, "immediate out of range: " + std::string(text));
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
  }

  void assemble_line(const TextLine& t) {
    const int ln = t.line;
    const auto& mn = t.mnemonic;
    const auto& o = t.operands;
    const std::size_t idx = t.index;

    if (mn == ".word") {
      emit(ln, decode(static_cast<std::uint32_t>(imm32(ln, o[0]))));
      return;
    }
    // pseudo-instructions
    if (mn == "li") {
      expect(ln, mn, o, 2);
      const unsigned rd = reg(ln, o[0]);
      if (auto v = parse_integer(o[1])) {
        if (*v < INT32_MIN || *v > static_cast<std::int64_t>(UINT32_MAX)) fail(ln, "immediate out of range: " + o[1]);
        emit_li(ln, rd, static_cast<std::int32_t>(static_cast<std::uint32_t>(*v)), false);
      } else {
        emit_li(ln, rd, value(ln, o[1]), true);
      }
      return;
    }
    if (mn == "la") {
      expect(ln, mn, o, 2);
      emit_li(ln, reg(ln, o[0]), value(ln, o[1]), true);
      return;
    }
    if (mn == "mv") {
      expect(ln, mn, o, 2);
      emit(ln, make_i(Op::Addi, reg(ln, o[0]), reg(ln, o[1]), 0));
      return;
    }
    if (mn == "nop") {
      expect(ln, mn, o, 0);
      emit(ln, make_i(Op::Addi, 0, 0, 0));
      return;
    }
    if (mn == "not") {
      expect(ln, mn, o, 2);
      emit(ln, make_i(Op::Xori, reg(ln, o[0]), reg(ln, o[1]), -1));
      return;
    }
    if (mn == "neg") {
      expect(ln, mn, o, 2);
      emit(ln, make_r(Op::Sub, reg(ln, o[0]), 0, reg(ln, o[1])));
      return;
    }
    if (mn == "j") {
      expect(ln, mn, o, 1);
      emit(ln, make_j(0, branch_offset(ln, o[0], idx)));
      return;
    }
    if (mn == "halt") {
      expect(ln, mn, o, 0);
      emit(ln, make_j(0, 0));
      return;
    }
    if (mn == "jr") {
      expect(ln, mn, o, 1);
      emit(ln, make_i(Op::Jalr, 0, reg(ln, o[0]), 0));
      return;
    }
    if (mn == "ret") {
      expect(ln, mn, o, 0);
      emit(ln, make_i(Op::Jalr, 0, 1, 0));
      return;
    }
    struct ZeroBranch { std::string_view name; Op op; bool swap; };
    static constexpr ZeroBranch kZeroBranches[] = {
        {"beqz", Op::Beq, false}, {"bnez", Op::Bne, false}, {"bltz", Op::Blt, false},
        {"bgez", Op::Bge, false}, {"blez", Op::Bge, true},  {"bgtz", Op::Blt, true}};
    for (const auto& zb : kZeroBranches) {
      if (mn == zb.name) {
        expect(ln, mn, o, 2);
        const unsigned r = reg(ln, o[0]);
        const auto off = branch_offset(ln, o[1], idx);
        emit(ln, zb.swap ? make_b(zb.op, 0, r, off) : make_b(zb.op, r, 0, off));
        return;
      }
    }
    struct SwapBranch { std::string_view name; Op op; };
    static constexpr SwapBranch kSwapBranches[] = {
        {"bgt", Op::Blt}, {"ble", Op::Bge}, {"bgtu", Op::Bltu}, {"bleu", Op::Bgeu}};
    for (const auto& sb : kSwapBranches) {
      if (mn == sb.name) {
        expect(ln, mn, o, 3);
        emit(ln, make_b(sb.op, reg(ln, o[1]), reg(ln, o[0]), branch_offset(ln, o[2], idx)));
        return;
      }
    }

    auto op = op_from_mnemonic(mn);
    if (!op) fail(ln, "unknown mnemonic '" + mn + "'");

    switch (format_of(*op)) {
      case Format::R:
        expect(ln, mn, o, 3);
        emit(ln, make_r(*op, reg(ln, o[0]), reg(ln, o[1]), reg(ln, o[2])));
        return;
      case Format::I:
        if (*op == Op::Jalr) {
          if (o.size() == 1) {
            emit(ln, make_i(Op::Jalr, 1, reg(ln, o[0]), 0));
          } else if (o.size() == 2) {
            auto [imm, rs1] = mem_operand(ln, o[1]);
            emit(ln, make_i(Op::Jalr, reg(ln, o[0]), rs1, imm));
          } else {
            expect(ln, mn, o, 3);
            emit(ln, make_i(Op::Jalr, reg(ln, o[0]), reg(ln, o[1]), imm32(ln, o[2])));
          }
          return;
        }
        if (is_load(*op)) {
          expect(ln, mn, o, 2);
          auto [imm, rs1] = mem_operand(ln, o[1]);
          emit(ln, make_i(*op, reg(ln, o[0]), rs1, imm));
          return;
        }
        expect(ln, mn, o, 3);
        emit(ln, make_i(*op, reg(ln, o[0]), reg(ln, o[1]), imm32(ln, o[2])));
        return;
      case Format::Shift:
        expect(ln, mn, o, 3);
        emit(ln, make_i(*op, reg(ln, o[0]), reg(ln, o[1]), imm32(ln, o[2])));
        return;
      case Format::S: {
        expect(ln, mn, o, 2);
        auto [imm, rs1] = mem_operand(ln, o[1]);
        emit(ln, make_s(*op, rs1, reg(ln, o[0]), imm));
        return;
      }
      case Format::B:
        expect(ln, mn, o, 3);
        emit(ln, make_b(*op, reg(ln, o[0]), reg(ln, o[1]), branch_offset(ln, o[2], idx)));
        return;
      case Format::U:
        expect(ln, mn, o, 2);
        emit(ln, make_u(*op, reg(ln, o[0]), imm32(ln, o[1])));
        return;
      case Format::J:
        if (o.size() == 1) {
          emit(ln, make_j(1, branch_offset(ln, o[0], idx)));
        } else {
          expect(ln, mn, o, 2);
          emit(ln, make_j(reg(ln, o[0]), branch_offset(ln, o[1], idx)));
        }
        return;
      case Format::Fence:
        if (o.empty()) {
          emit(ln, {Op::Fence, 0, 0, 0, 0x0FF, 0});
        } else {
          expect(ln, mn, o, 1);
          emit(ln, {Op::Fence, 0, 0, 0, imm32(ln, o[0]), 0});
        }
        return;
      case Format::System:
      case Format::Mac: {
        expect(ln, mn, o, 0);
        Instruction inst;
        inst.op = *op;
        emit(ln, inst);
        return;
      }
      case Format::Dual:
        expect(ln, mn, o, 4);
        emit(ln, make_dual(*op, reg(ln, o[0]), reg(ln, o[1]), imm32(ln, o[2]), imm32(ln, o[3])));
        return;
      case Format::ZolReg:
        expect(ln, mn, o, 2);
        emit(ln, make_dlp(reg(ln, o[0]), zol_offset(ln, o[1], idx)));
        return;
      case Format::ZolImm:
        expect(ln, mn, o, 2);
        emit(ln, make_dlpi(imm32(ln, o[0]), zol_offset(ln, o[1], idx)));
        return;
      case Format::ZolOff:
        expect(ln, mn, o, 1);
        emit(ln, make_zlp(zol_offset(ln, o[0], idx)));
        return;
      case Format::ZolSet:
        expect(ln, mn, o, 1);
        emit(ln, make_zol_set(*op, reg(ln, o[0])));
        return;
      case Format::Illegal:
        break;
    }
    fail(ln, "unknown mnemonic '" + mn + "'");
  }

  void put(std::int64_t v, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) prog_.data.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }

  void assemble_data(const DataLine& d) {
    const int ln = d.line;
    prog_.data.resize(d.offset, 0);
    auto ranged = [&](const std::string& text, std::int64_t lo, std::int64_t hi) {
      const std::int64_t v = value(ln, text);
      if (v < lo || v > hi) fail(ln, "value out of range for " + d.directive + ": " + text);
      return v;
    };
    if (d.directive == ".byte") {
      for (auto& t : d.operands) put(ranged(t, -128, 255), 1);
    } else if (d.directive == ".half") {
      for (auto& t : d.operands) put(ranged(t, -32768, 65535), 2);
    } else if (d.directive == ".word") {
      for (auto& t : d.operands) put(ranged(t, INT32_MIN, UINT32_MAX), 4);
    } else {
      const std::uint32_t end = d.offset + data_size_of(ln, d.directive, d.operands);
      prog_.data.resize(end, 0);
    }
  }

  void second_pass() {
    for (const auto& t : text_) {
      assemble_line(t);
      if (prog_.text.size() != t.index + (t.mnemonic == ".word" ? 1 : text_size_of(t.line, t.mnemonic, t.operands)))
        fail(t.line, "internal: instruction size mismatch");
    }
    // .align computes its padding from the running offset; replay it
    data_offset_ = 0;
    for (const auto& d : data_) {
      data_offset_ = d.offset;
      assemble_data(d);
    }
    prog_.data.resize(data_total_, 0);

    for (const auto& d : directives_) {
      if (d.directive == ".entry") {
        expect(d.line, d.directive, d.operands, 1);
        auto it = prog_.labels.find(d.operands[0]);
        if (it == prog_.labels.end()) fail(d.line, "undefined label '" + d.operands[0] + "'");
        prog_.entry = it->second;
      } else {
        for (auto& r : d.operands) prog_.live_out |= reg_bit(reg(d.line, r));
      }
    }
  }

  std::string_view source_;
  Variant variant_;
  Program prog_;
  std::vector<TextLine> text_;
  std::vector<DataLine> data_;
  std::vector<DataLine> directives_;
  std::size_t text_count_ = 0;
  std::uint32_t data_offset_ = 0;
  std::uint32_t data_total_ = 0;
};

}  // namespace

Program assemble(std::string_view source, Variant variant) { return Assembler(source, variant).run(); }

namespace {

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

// Renders one instruction; `target` is the text used for a branch, jump or
// loop-end operand.
std::string render(const Instruction& in, const std::string& target) {
  const std::string m(mnemonic(in.op));
  auto r = [](unsigned reg) { return register_name(reg); };
  std::ostringstream os;
  switch (format_of(in.op)) {
    case Format::R:
      os << m << ' ' << r(in.rd) << ", " << r(in.rs1) << ", " << r(in.rs2);
      break;
    case Format::I:
      if (is_load(in.op) || in.op == Op::Jalr)
        os << m << ' ' << r(in.rd) << ", " << in.imm << '(' << r(in.rs1) << ')';
      else
        os << m << ' ' << r(in.rd) << ", " << r(in.rs1) << ", " << in.imm;
      break;
    case Format::Shift:
      os << m << ' ' << r(in.rd) << ", " << r(in.rs1) << ", " << in.imm;
      break;
    case Format::S:
      os << m << ' ' << r(in.rs2) << ", " << in.imm << '(' << r(in.rs1) << ')';
      break;
    case Format::B:
      os << m << ' ' << r(in.rs1) << ", " << r(in.rs2) << ", " << target;
      break;
    case Format::U:
      os << m << ' ' << r(in.rd) << ", " << hex(static_cast<std::uint32_t>(in.imm));
      break;
    case Format::J:
      os << m << ' ' << r(in.rd) << ", " << target;
      break;
    case Format::Fence:
      os << m << ' ' << in.imm;
      break;
    case Format::System:
      os << m;
      break;
    case Format::Mac:
      os << m << " ;x20 = x20 + x21*x22";
      break;
    case Format::Dual:
      os << m << ' ' << r(in.rs1) << ", " << r(in.rs2) << ", " << in.imm << ", " << in.imm2;
      break;
    case Format::ZolReg:
      os << m << ' ' << r(in.rs1) << ", " << target;
      break;
    case Format::ZolImm:
      os << m << ' ' << in.imm2 << ", " << target;
      break;
    case Format::ZolOff:
      os << m << ' ' << target;
      break;
    case Format::ZolSet:
      os << m << ' ' << r(in.rs1);
      break;
    case Format::Illegal:
      os << ".word " << hex(static_cast<std::uint32_t>(in.imm));
      break;
  }
  return os.str();
}

// Instruction index a control instruction refers to, if statically known.
std::optional<std::int64_t> target_index(const Instruction& in, std::size_t index) {
  const auto i = static_cast<std::int64_t>(index);
  if (is_branch(in.op) || in.op == Op::Jal) return i + in.imm / 4;
  if (in.op == Op::Dlp || in.op == Op::Dlpi || in.op == Op::Zlp) return i + in.imm;
  return std::nullopt;
}

}  // namespace

std::string format_instruction(const Instruction& inst) {
  std::string target;
  if (is_branch(inst.op) || inst.op == Op::Jal || inst.op == Op::Dlp || inst.op == Op::Dlpi || inst.op == Op::Zlp)
    target = std::to_string(inst.imm);
  return render(inst, target);
}

std::string disassemble(const Program& p) {
  const std::size_t n = p.text.size();
  std::map<std::size_t, std::vector<std::string>> names;
  for (const auto& [name, idx] : p.labels) names[idx].push_back(name);

  // Targets without a label get a synthetic one. Offsets that leave the text
  // stay numeric.
  auto in_range = [&](std::int64_t t) { return t >= 0 && t <= static_cast<std::int64_t>(n); };
  for (std::size_t i = 0; i < n; ++i) {
    auto t = target_index(p.text[i], i);
    if (t && in_range(*t) && !names.count(static_cast<std::size_t>(*t)))
      names[static_cast<std::size_t>(*t)].push_back(".L" + std::to_string(*t));
  }
  for (auto& [idx, v] : names) std::sort(v.begin(), v.end());

  std::ostringstream os;
  if (p.entry != 0) {
    if (!names.count(p.entry)) names[p.entry].push_back(".L" + std::to_string(p.entry));
    os << "    .entry " << names[p.entry].front() << '\n';
  }
  if (p.live_out != 0) {
    os << "    .liveout ";
    bool first = true;
    for (unsigned r = 1; r < 32; ++r) {
      if (!(p.live_out & reg_bit(r))) continue;
      os << (first ? "" : ", ") << register_name(r);
      first = false;
    }
    os << '\n';
  }
  os << "    .text\n";
  for (std::size_t i = 0; i <= n; ++i) {
    if (auto it = names.find(i); it != names.end())
      for (const auto& name : it->second) os << name << ":\n";
    if (i == n) break;
    const Instruction& in = p.text[i];
    std::string target;
    if (auto t = target_index(in, i)) {
      if (in_range(*t))
        target = names[static_cast<std::size_t>(*t)].front();
      else
        target = std::to_string(in.imm);
    }
    os << "    " << render(in, target) << '\n';
  }

  if (!p.data.empty() || !p.data_symbols.empty()) {
    os << "    .data\n";
    std::map<std::uint32_t, std::vector<std::string>> dnames;
    for (const auto& [name, addr] : p.data_symbols) dnames[addr].push_back(name);
    std::size_t off = 0;
    auto flush_labels = [&](std::size_t at) {
      if (auto it = dnames.find(static_cast<std::uint32_t>(at)); it != dnames.end())
        for (const auto& name : it->second) os << name << ":\n";
    };
    while (off < p.data.size()) {
      flush_labels(off);
      auto next = dnames.upper_bound(static_cast<std::uint32_t>(off));
      const std::size_t stop = std::min<std::size_t>(
          {p.data.size(), off + 16, next == dnames.end() ? p.data.size() : static_cast<std::size_t>(next->first)});
      os << "    .byte ";
      for (std::size_t i = off; i < stop; ++i)
        os << (i == off ? "" : ", ") << static_cast<int>(static_cast<std::int8_t>(p.data[i]));
      os << '\n';
      off = stop;
    }
    for (auto it = dnames.lower_bound(static_cast<std::uint32_t>(p.data.size())); it != dnames.end(); ++it)
      for (const auto& name : it->second) os << name << ":\n";
  }
  return os.str();
}

// Binary image

namespace {
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
}  // namespace

std::vector<std::uint8_t> write_image(const Program& p) {
  if (p.entry > 0xFFFF) throw ImageError("entry index does not fit the image header");
  std::vector<std::uint8_t> out{'M', 'R', 'V', 'L'};
  put_u16(out, kImageVersion);
  put_u16(out, static_cast<std::uint16_t>(p.entry));
  put_u32(out, static_cast<std::uint32_t>(4 * p.text.size()));
  put_u32(out, static_cast<std::uint32_t>(p.data.size()));
  for (const auto& inst : p.text) put_u32(out, encode(inst));
  out.insert(out.end(), p.data.begin(), p.data.end());
  return out;
}

Program read_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kImageHeaderBytes) throw ImageError("image shorter than its header");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, "MRVL")) throw ImageError("bad magic (expected MRVL)");
  if (get_u16(bytes, 4) != kImageVersion) throw ImageError("unsupported image version");
  Program p;
  p.entry = get_u16(bytes, 6);
  const std::uint32_t text_bytes = get_u32(bytes, 8);
  const std::uint32_t data_bytes = get_u32(bytes, 12);
  if (text_bytes % 4 != 0) throw ImageError("text length is not a multiple of 4");
  if (bytes.size() != kImageHeaderBytes + std::size_t{text_bytes} + data_bytes)
    throw ImageError("image length does not match its header");
  for (std::size_t at = kImageHeaderBytes; at < kImageHeaderBytes + text_bytes; at += 4)
    p.text.push_back(decode(get_u32(bytes, at)));
  p.lines.assign(p.text.size(), 0);
  const auto data_begin = bytes.begin() + static_cast<std::ptrdiff_t>(kImageHeaderBytes + text_bytes);
  p.data.assign(data_begin, bytes.end());
  if (p.entry > p.text.size()) throw ImageError("entry outside text");
  return p;
}

}  // namespace marvel
