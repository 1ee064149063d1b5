#pragma once

// Independent oracles and random generators shared by the test binaries.
// Nothing here calls into the code under test except to assemble and run.

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "marvel/assembler.hpp"
#include "marvel/isa.hpp"
#include "marvel/profiler.hpp"
#include "marvel/simulator.hpp"

namespace marvel::check {

// Pattern predicates restated from their definitions.

inline bool naive_mul_add(const Instruction& m, const Instruction& a) {
  if (m.op != Op::Mul || a.op != Op::Add) return false;
  if (m.rd == 0 || a.rd == 0 || m.rd == a.rd) return false;
  return std::minmax(a.rs1, a.rs2) == std::minmax(a.rd, m.rd);
}

inline bool naive_increment(const Instruction& i) { return i.op == Op::Addi && i.rd == i.rs1 && i.rd != 0; }

inline bool naive_addi_pair(const Instruction& x, const Instruction& y) {
  return naive_increment(x) && naive_increment(y) && x.rd != y.rd;
}

inline bool naive_window(const Instruction* w) {
  if (!naive_addi_pair(w[0], w[1]) || !naive_mul_add(w[2], w[3])) return false;
  const std::uint8_t touched[] = {w[2].rd, w[2].rs1, w[2].rs2, w[3].rd};
  for (auto r : {w[0].rd, w[1].rd})
    if (std::find(std::begin(touched), std::end(touched), r) != std::end(touched)) return false;
  return true;
}

struct NaiveScan {
  PatternReport report;
  ImmediateHistogram histogram;
};

// Each pattern is re-scanned from the start of the trace with an explicit
// cursor that skips past every match.
inline NaiveScan naive_scan(const std::vector<Instruction>& t, const std::vector<std::uint64_t>& cost) {
  NaiveScan out;
  auto& raw = out.report.raw;
  auto& wt = out.report.weighted;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    raw.total_retired++;
    wt.total_retired += cost[i];
    auto bump = [&](std::uint64_t PatternCounts::*f) {
      out.report.raw.*f += 1;
      out.report.weighted.*f += cost[i];
    };
    if (t[i].op == Op::Add) bump(&PatternCounts::add);
    if (t[i].op == Op::Mul) bump(&PatternCounts::mul);
    if (t[i].op == Op::Addi) bump(&PatternCounts::addi);
    if (t[i].op == Op::Blt) bump(&PatternCounts::blt);
  }
  for (std::size_t i = 0; i + 1 < n;) {
    if (naive_mul_add(t[i], t[i + 1])) {
      raw.mul_add++;
      wt.mul_add += cost[i] + cost[i + 1];
      i += 2;
    } else {
      i += 1;
    }
  }
  for (std::size_t i = 0; i + 1 < n;) {
    if (naive_addi_pair(t[i], t[i + 1])) {
      raw.addi_addi++;
      wt.addi_addi += cost[i] + cost[i + 1];
      out.histogram.add(t[i].imm, t[i + 1].imm, cost[i] + cost[i + 1]);
      i += 2;
    } else {
      i += 1;
    }
  }
  for (std::size_t i = 0; i + 3 < n;) {
    if (naive_window(&t[i])) {
      raw.fusedmac++;
      wt.fusedmac += cost[i] + cost[i + 1] + cost[i + 2] + cost[i + 3];
      i += 4;
    } else {
      i += 1;
    }
  }
  return out;
}

// Dense random traces over a small register set so that patterns occur often.
inline std::vector<Instruction> random_trace(std::mt19937& rng, std::size_t length) {
  std::uniform_int_distribution<int> kind(0, 9), reg(0, 5), imm(-3, 40), big(0, 1500);
  std::vector<Instruction> t;
  t.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const unsigned a = reg(rng), b = reg(rng), c = reg(rng);
    switch (kind(rng)) {
      case 0: case 1: t.push_back(make_r(Op::Mul, a, b, c)); break;
      case 2: t.push_back(make_r(Op::Add, a, a, b)); break;
      case 3: t.push_back(make_r(Op::Add, a, b, a)); break;
      case 4: case 5: t.push_back(make_i(Op::Addi, a, a, imm(rng))); break;
      case 6: t.push_back(make_i(Op::Addi, a, a, big(rng))); break;
      case 7: t.push_back(make_i(Op::Addi, a, b, imm(rng))); break;
      case 8: t.push_back(make_b(Op::Blt, a, b, -8)); break;
      default: t.push_back(make_r(Op::Sub, a, b, c)); break;
    }
  }
  return t;
}

/// A well-formed RV32IM instruction with uniformly drawn fields.
inline Instruction random_base_instruction(std::mt19937& rng) {
  auto any = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const auto op = static_cast<Op>(any(0, static_cast<int>(index_of(Op::Mac)) - 1));
  const unsigned rd = any(0, 31), rs1 = any(0, 31), rs2 = any(0, 31);
  switch (format_of(op)) {
    case Format::R: return make_r(op, rd, rs1, rs2);
    case Format::I: return make_i(op, rd, rs1, any(-2048, 2047));
    case Format::Shift: return make_i(op, rd, rs1, any(0, 31));
    case Format::S: return make_s(op, rs1, rs2, any(-2048, 2047));
    case Format::B: return make_b(op, rs1, rs2, 2 * any(-2048, 2047));
    case Format::U: return make_u(op, rd, any(0, 0xFFFFF));
    case Format::J: return make_j(rd, 2 * any(-(1 << 19), (1 << 19) - 1));
    case Format::Fence: {
      Instruction f;
      f.op = op;
      f.imm = any(0, 0xFF);
      return f;
    }
    default: {
      Instruction sys;
      sys.op = op;
      return sys;
    }
  }
}

// Brute force over all 14 splits, recomputing coverage from scratch.
struct BruteSplit {
  int b1 = 0;
  std::uint64_t covered = 0;
};

inline BruteSplit brute_split(const ImmediateHistogram& h) {
  BruteSplit best{0, 0};
  for (int b1 = 1; b1 <= 14; ++b1) {
    const int b2 = 15 - b1;
    std::uint64_t covered = 0;
    for (const auto& [k, w] : h.unsigned_pairs)
      if (k.first >= 0 && k.second >= 0 && k.first < (1 << b1) && k.second < (1 << b2)) covered += w;
    if (best.b1 == 0 || covered > best.covered) best = {b1, covered};
  }
  return best;
}

/// Straight-line register/memory program ending in halt; no custom ops.
inline std::string random_straight_line(std::mt19937& rng, int length) {
  static const char* alu[] = {"add", "sub", "xor", "or", "and", "sll", "srl", "sra", "slt", "sltu",
                              "mul", "mulh", "mulhu", "mulhsu", "div", "divu", "rem", "remu"};
  static const char* alui[] = {"addi", "xori", "ori", "andi", "slti", "sltiu"};
  std::uniform_int_distribution<int> pick(0, 99), reg(0, 31), imm(-2048, 2047), sh(0, 31), off(0, 63);
  std::ostringstream s;
  s << ".data\nbuf: .zero 256\n.text\n";
  for (int r = 1; r < 32; ++r) s << "  li x" << r << ", " << static_cast<std::int32_t>(rng()) << "\n";
  s << "  la x31, buf\n";
  for (int i = 0; i < length; ++i) {
    const int p = pick(rng);
    const int rd = reg(rng) % 31, a = reg(rng), b = reg(rng);
    if (p < 45) {
      s << "  " << alu[pick(rng) % std::size(alu)] << " x" << rd << ", x" << a << ", x" << b << "\n";
    } else if (p < 75) {
      s << "  " << alui[pick(rng) % std::size(alui)] << " x" << rd << ", x" << a << ", " << imm(rng) << "\n";
    } else if (p < 82) {
      static const char* shi[] = {"slli", "srli", "srai"};
      s << "  " << shi[pick(rng) % 3] << " x" << rd << ", x" << a << ", " << sh(rng) << "\n";
    } else if (p < 86) {
      s << "  lui x" << rd << ", " << (rng() & 0xFFFFF) << "\n";
    } else if (p < 93) {
      static const char* st[] = {"sb", "sh", "sw"};
      const int w = pick(rng) % 3;
      s << "  " << st[w] << " x" << a << ", " << (off(rng) << w) << "(x31)\n";
    } else {
      static const char* ld[] = {"lb", "lbu", "lh", "lhu", "lw"};
      const int w = pick(rng) % 5;
      const int shift = w < 2 ? 0 : (w < 4 ? 1 : 2);
      s << "  " << ld[w] << " x" << rd << ", " << (off(rng) << shift) << "(x31)\n";
    }
  }
  s << "  halt\n";
  return s.str();
}

/// Loop programs in the shape of generated kernels: counted loops (some
/// nested, some with the counter read after exit) over a byte buffer, with
/// mul/add accumulations and paired pointer increments. Results are stored
/// to memory and a subset of registers is marked live at exit.
inline std::string random_loop_program(std::mt19937& rng) {
  std::uniform_int_distribution<int> pick(0, 99);
  auto any = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  // pointer registers s0, s1; work registers below; t4/t5 and s6/s7 hold loop state
  static const char* work[] = {"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "t0", "t1", "t2"};
  auto w = [&] { return work[any(0, static_cast<int>(std::size(work)) - 1)]; };
  std::ostringstream s;
  s << ".data\nbuf: ";
  for (int i = 0; i < 64; ++i) s << (i ? ", " : ".byte ") << any(-128, 127);
  s << "\nout: .zero 4096\n.text\n";
  s << "  la s0, buf\n  la s1, out\n";
  for (const char* r : work) s << "  li " << r << ", " << any(-50, 50) << "\n";
  int label = 0;
  auto body = [&](int ops) {
    for (int k = 0; k < ops; ++k) {
      const int p = pick(rng);
      if (p < 30) {
        // mostly a dedicated product register, as in generated kernels
        const char* t = pick(rng) < 75 ? "t3" : w();
        s << "  mul " << t << ", " << w() << ", " << w() << "\n";
        const char* c = w();
        if (c == t) continue;
        if (pick(rng) < 50) s << "  add " << c << ", " << c << ", " << t << "\n";
        else s << "  add " << c << ", " << t << ", " << c << "\n";
      } else if (p < 45) {
        s << "  addi s0, s0, " << any(0, 1) << "\n  addi s1, s1, " << any(1, 4) << "\n";
      } else if (p < 55) {
        s << "  addi s1, s1, " << any(1, 4) << "\n  addi s0, s0, " << any(0, 1) << "\n";
      } else if (p < 65) {
        s << "  lb " << w() << ", " << any(0, 15) << "(s0)\n";
      } else if (p < 75) {
        s << "  sb " << w() << ", " << any(0, 15) << "(s1)\n";
      } else if (p < 80) {
        s << "  addi " << w() << ", " << w() << ", " << any(-40, 2000) << "\n";
      } else {
        static const char* alu[] = {"add", "sub", "xor", "and", "or"};
        s << "  " << alu[any(0, 4)] << " " << w() << ", " << w() << ", " << w() << "\n";
      }
    }
  };
  auto loop = [&](const char* iv, const char* bound, int max_trips, auto&& inner) {
    const int id = label++;
    const int step = any(1, 3);
    const int init = any(0, 3);
    s << "  li " << iv << ", " << init << "\n  li " << bound << ", " << init + any(1, max_trips) * step - any(0, step - 1)
      << "\n.L" << id << ":\n";
    inner();
    s << "  addi " << iv << ", " << iv << ", " << step << "\n  blt " << iv << ", " << bound << ", .L" << id << "\n";
    if (pick(rng) < 15) s << "  add " << w() << ", " << w() << ", " << iv << "\n";
  };
  const int loops = any(1, 3);
  for (int l = 0; l < loops; ++l) {
    body(any(0, 2));
    if (pick(rng) < 35) {
      loop("s6", "s7", 4, [&] {
        body(any(0, 2));
        loop("t4", "t5", 12, [&] { body(any(1, 5)); });
        body(any(0, 2));
      });
    } else {
      loop("t4", "t5", 40, [&] { body(any(1, 6)); });
    }
  }
  for (int i = 0; i < 4; ++i) s << "  sb " << w() << ", " << i << "(s1)\n";
  s << "  halt\n.liveout";
  int n = 0;
  for (const char* r : work)
    if (pick(rng) < 40) s << (n++ ? ", " : " ") << r;
  if (n == 0) s << " a0";
  s << "\n";
  return s.str();
}

inline RunResult run_on(const Program& p, Variant v, const CycleModel& model = {}) {
  RunLimits limits;
  limits.max_steps = 50'000'000;
  limits.memory_bytes = 1u << 16;
  return run(p, v, model, limits);
}

}  // namespace marvel::check
