#include "marvel/rewriter.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "marvel/profiler.hpp"

namespace marvel {

std::string_view rule_name(Rule rule) {
  switch (rule) {
    case Rule::Mac: return "mac_rule";
    case Rule::Add2i: return "add2i_rule";
    case Rule::Fusedmac: return "fusedmac_rule";
    case Rule::Zol: return "zol_rule";
  }
  return "?";
}

Variant rule_min_variant(Rule rule) {
  switch (rule) {
    case Rule::Mac: return Variant::V1;
    case Rule::Add2i: return Variant::V2;
    case Rule::Fusedmac: return Variant::V3;
    case Rule::Zol: return Variant::V4;
  }
  return Variant::V4;
}

namespace {

constexpr RegMask kMacRegs = (1u << kMacAcc) | (1u << kMacLhs) | (1u << kMacRhs);
constexpr RegMask kAllRegs = ~1u;

}  // namespace

RegMask uses_of(const Instruction& in) {
  switch (format_of(in.op)) {
    case Format::R:
    case Format::S:
    case Format::B:
      return reg_bit(in.rs1) | reg_bit(in.rs2);
    case Format::I:
    case Format::Shift:
    case Format::ZolReg:
    case Format::ZolSet:
      return reg_bit(in.rs1);
    case Format::Mac:
      return kMacRegs;
    case Format::Dual:
      return reg_bit(in.rs1) | reg_bit(in.rs2) | (in.op == Op::Fusedmac ? kMacRegs : 0u);
    default:
      return 0;
  }
}

RegMask defs_of(const Instruction& in) {
  switch (format_of(in.op)) {
    case Format::R:
    case Format::I:
    case Format::Shift:
    case Format::U:
    case Format::J:
      return reg_bit(in.rd);
    case Format::Mac:
      return reg_bit(kMacAcc);
    case Format::Dual:
      return reg_bit(in.rs1) | reg_bit(in.rs2) | (in.op == Op::Fusedmac ? reg_bit(kMacAcc) : 0u);
    default:
      return 0;
  }
}

namespace {

constexpr std::uint32_t kEnd = std::numeric_limits<std::uint32_t>::max();

bool has_target(const Instruction& in) {
  return is_branch(in.op) || in.op == Op::Jal || in.op == Op::Dlp || in.op == Op::Dlpi || in.op == Op::Zlp;
}

bool is_zol_setup(Op op) { return op == Op::Dlp || op == Op::Dlpi || op == Op::Zlp; }

struct Node {
  Instruction inst;
  std::uint32_t id = 0;
  std::uint32_t target = kEnd;  // node id named by a branch, jump or zol setup
  int line = 0;
};

// Program text with control-flow targets held as node ids, so instructions
// can be inserted and removed without re-resolving offsets by hand.
class Listing {
 public:
  explicit Listing(const Program& program) : base_(program) {
    const std::size_t n = program.text.size();
    for (std::size_t i = 0; i < n; ++i) {
      Node node{program.text[i], next_id_++, kEnd, i < program.lines.size() ? program.lines[i] : 0};
      nodes.push_back(node);
    }
    auto id_at = [&](std::int64_t pos) -> std::optional<std::uint32_t> {
      if (pos < 0 || pos > static_cast<std::int64_t>(n)) return std::nullopt;
      return pos == static_cast<std::int64_t>(n) ? kEnd : nodes[pos].id;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const Instruction& in = nodes[i].inst;
      if (in.op == Op::Jalr || in.op == Op::SetZs || in.op == Op::SetZe) opaque_ = true;
      if (!has_target(in)) continue;
      const std::int64_t rel = is_zol_setup(in.op) ? in.imm : in.imm / 4;
      auto t = id_at(static_cast<std::int64_t>(i) + rel);
      if (!t) {
        opaque_ = true;
        continue;
      }
      nodes[i].target = *t;
    }
    for (const auto& [name, pos] : program.labels) labels_[name] = id_at(static_cast<std::int64_t>(pos)).value_or(kEnd);
    entry_ = id_at(static_cast<std::int64_t>(program.entry)).value_or(kEnd);
  }

  // Indirect jumps, explicit loop-register writes and out-of-range targets
  // make the control flow unknowable; such programs are left alone.
  bool opaque() const { return opaque_; }

  std::vector<Node> nodes;

  std::size_t size() const { return nodes.size(); }

  std::size_t pos_of(std::uint32_t id) const {
    if (id == kEnd) return nodes.size();
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    throw std::logic_error("dangling node id");
  }

  std::uint32_t id_after(std::size_t pos) const { return pos + 1 < nodes.size() ? nodes[pos + 1].id : kEnd; }

  Node make(const Instruction& in, int line, std::uint32_t target = kEnd) {
    return Node{in, next_id_++, target, line};
  }

  void insert(std::size_t pos, std::vector<Node> fresh) {
    nodes.insert(nodes.begin() + static_cast<std::ptrdiff_t>(pos), fresh.begin(), fresh.end());
  }

  /// Removes nodes[pos]; branch targets, labels and the entry move to
  /// `redirect`, zol end markers to `zol_redirect`.
  void erase(std::size_t pos, std::uint32_t redirect, std::uint32_t zol_redirect) {
    const std::uint32_t id = nodes[pos].id;
    nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(pos));
    for (Node& n : nodes)
      if (n.target == id) n.target = is_zol_setup(n.inst.op) ? zol_redirect : redirect;
    for (auto& [name, t] : labels_)
      if (t == id) t = redirect;
    if (entry_ == id) entry_ = redirect;
  }

  void erase(std::size_t pos) {
    const std::uint32_t next = id_after(pos);
    erase(pos, next, next);
  }

  RegMask live_out() const { return base_.live_out; }

  bool is_entry(std::size_t pos) const { return pos < nodes.size() && nodes[pos].id == entry_; }

  Program to_program() const {
    Program out;
    out.data = base_.data;
    out.data_symbols = base_.data_symbols;
    out.live_out = base_.live_out;
    std::map<std::uint32_t, std::size_t> pos;
    for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i].id] = i;
    pos[kEnd] = nodes.size();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      Instruction in = nodes[i].inst;
      if (has_target(in)) {
        const auto rel = static_cast<std::int64_t>(pos.at(nodes[i].target)) - static_cast<std::int64_t>(i);
        in.imm = static_cast<std::int32_t>(is_zol_setup(in.op) ? rel : rel * 4);
      }
      validate(in);
      out.text.push_back(in);
      out.lines.push_back(nodes[i].line);
    }
    for (const auto& [name, id] : labels_) out.labels[name] = pos.at(id);
    out.entry = pos.at(entry_);
    return out;
  }

 private:
  Program base_;
  std::map<std::string, std::uint32_t> labels_;
  std::uint32_t entry_ = kEnd;
  std::uint32_t next_id_ = 0;
  bool opaque_ = false;
};

struct Flow {
  std::vector<std::vector<std::size_t>> succ;  // size() denotes program exit
  std::vector<int> refs;                       // incoming explicit edges per position (branch, jump, entry, loop start)
  std::vector<bool> zol_end;                   // position is the last body instruction of a hardware loop
  std::vector<RegMask> live_in;
  std::vector<RegMask> live_out;
};

Flow analyze(const Listing& l, RegMask exit_live) {
  const std::size_t n = l.size();
  Flow f;
  f.succ.resize(n);
  f.refs.assign(n + 1, 0);
  f.zol_end.assign(n + 1, false);
  std::vector<std::size_t> pos_of_target(n, n);
  for (std::size_t i = 0; i < n; ++i)
    if (has_target(l.nodes[i].inst)) pos_of_target[i] = l.pos_of(l.nodes[i].target);

  for (std::size_t i = 0; i < n; ++i) {
    const Instruction& in = l.nodes[i].inst;
    auto& s = f.succ[i];
    if (is_halt(in)) {
      s.push_back(n);
    } else if (in.op == Op::Jal) {
      s.push_back(pos_of_target[i]);
      ++f.refs[pos_of_target[i]];
    } else if (is_branch(in.op)) {
      s.push_back(i + 1);
      s.push_back(pos_of_target[i]);
      ++f.refs[pos_of_target[i]];
    } else {
      s.push_back(i + 1);
    }
    if (is_zol_setup(in.op)) {
      const std::size_t end = pos_of_target[i];
      if (i + 1 <= end && end < n) {
        f.succ[end].push_back(i + 1);  // filled before or after: both fine
        ++f.refs[i + 1];
        f.zol_end[end] = true;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (l.is_entry(i)) ++f.refs[i];

  f.live_in.assign(n, 0);
  f.live_out.assign(n, 0);
  auto in_of = [&](std::size_t p) -> RegMask {
    if (p >= n) return exit_live;
    return f.live_in[p];
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = n; k-- > 0;) {
      const Instruction& in = l.nodes[k].inst;
      RegMask out = 0;
      if (in.op == Op::Ecall || in.op == Op::Ebreak || in.op == Op::Illegal) out = kAllRegs;
      for (std::size_t s : f.succ[k]) out |= in_of(s);
      const RegMask live = uses_of(in) | (out & ~defs_of(in));
      if (out != f.live_out[k] || live != f.live_in[k]) {
        f.live_out[k] = out;
        f.live_in[k] = live;
        changed = true;
      }
    }
  }
  return f;
}

// Straight-line constant evaluation of the block that falls into `pos`.
std::map<unsigned, std::int32_t> constants_before(const Listing& l, const Flow& f, std::size_t pos) {
  std::size_t begin = pos;
  while (begin > 0 && (begin == pos || f.refs[begin] == 0) && !is_control(l.nodes[begin - 1].inst.op)) --begin;
  std::map<unsigned, std::int32_t> known;
  for (std::size_t i = begin; i < pos; ++i) {
    const Instruction& in = l.nodes[i].inst;
    const RegMask d = defs_of(in);
    std::optional<std::int32_t> value;
    auto reg = [&](unsigned r) -> std::optional<std::int32_t> {
      if (r == 0) return 0;
      auto it = known.find(r);
      return it == known.end() ? std::nullopt : std::optional<std::int32_t>(it->second);
    };
    if (in.op == Op::Addi) {
      if (auto v = reg(in.rs1)) value = static_cast<std::int32_t>(static_cast<std::uint32_t>(*v) + static_cast<std::uint32_t>(in.imm));
    } else if (in.op == Op::Lui) {
      value = static_cast<std::int32_t>(static_cast<std::uint32_t>(in.imm) << 12);
    }
    for (unsigned r = 1; r < 32; ++r)
      if (d & (1u << r)) known.erase(r);
    if (value && in.rd != 0) known[in.rd] = *value;
  }
  return known;
}

std::vector<LoopShape> loops_of(const Listing& l, const Flow& f) {
  std::vector<LoopShape> out;
  const std::size_t n = l.size();
  for (std::size_t e = 0; e < n; ++e) {
    const Node& back = l.nodes[e];
    if (back.inst.op != Op::Blt) continue;
    const std::size_t s = l.pos_of(back.target);
    if (s >= e) continue;
    bool simple = f.refs[s] == 1 && !l.is_entry(s);
    for (std::size_t k = s; simple && k < e; ++k) {
      if (is_control(l.nodes[k].inst.op) || f.zol_end[k]) simple = false;
      if (k > s && f.refs[k] != 0) simple = false;
    }
    if (!simple || f.zol_end[e]) continue;
    LoopShape shape;
    shape.start = s;
    shape.backedge = e;
    shape.induction = back.inst.rs1;
    shape.bound_reg = back.inst.rs2;
    if (shape.induction == 0 || shape.induction == shape.bound_reg) continue;
    int updates = 0;
    bool ok = true;
    for (std::size_t k = s; k < e; ++k) {
      const Instruction& in = l.nodes[k].inst;
      const RegMask d = defs_of(in);
      if (d & reg_bit(shape.bound_reg)) ok = false;
      if (d & reg_bit(shape.induction)) {
        ++updates;
        if (is_addi_increment(in) && in.rd == shape.induction && in.imm > 0) {
          shape.induction_update = k;
          shape.step = in.imm;
        } else {
          ok = false;
        }
      }
    }
    if (!ok || updates != 1) continue;
    const auto known = constants_before(l, f, s);
    if (auto it = known.find(shape.induction); it != known.end()) shape.init = it->second;
    if (shape.bound_reg == 0) shape.bound = 0;
    else if (auto it = known.find(shape.bound_reg); it != known.end()) shape.bound = it->second;
    if (shape.init && shape.bound) {
      const std::int64_t span = std::int64_t{*shape.bound} - *shape.init;
      shape.trip_count = std::max<std::int64_t>(1, (span + shape.step - 1) / shape.step);
      if (span <= 0) shape.trip_count = 1;
    }
    out.push_back(shape);
  }
  return out;
}

const LoopShape* enclosing_loop(const std::vector<LoopShape>& loops, std::size_t first, std::size_t last) {
  for (const auto& lp : loops)
    if (lp.start <= first && last < lp.backedge) return &lp;
  return nullptr;
}

std::int64_t cost_of(const CycleModel& m, Op op) { return static_cast<std::int64_t>(m.cost(op)); }

Instruction rename(Instruction in, const std::map<unsigned, unsigned>& map) {
  auto sub = [&](std::uint8_t& r) {
    auto it = map.find(r);
    if (it != map.end()) r = static_cast<std::uint8_t>(it->second);
  };
  switch (format_of(in.op)) {
    case Format::R:
      sub(in.rd), sub(in.rs1), sub(in.rs2);
      break;
    case Format::I:
    case Format::Shift:
      sub(in.rd), sub(in.rs1);
      break;
    case Format::S:
    case Format::B:
    case Format::Dual:
      sub(in.rs1), sub(in.rs2);
      break;
    case Format::U:
    case Format::J:
      sub(in.rd);
      break;
    case Format::ZolReg:
    case Format::ZolSet:
      sub(in.rs1);
      break;
    default:
      break;
  }
  return in;
}

Instruction move(unsigned rd, unsigned rs) { return make_i(Op::Addi, rd, rs, 0); }

// ---------------------------------------------------------------------------
// mac

class MacRule {
 public:
  MacRule(Listing& l, const CycleModel& m, RuleStats& st, std::set<std::uint32_t>& seen)
      : l_(l), m_(m), st_(st), seen_(seen) {}

  bool run_once() {
    const Flow f = analyze(l_, exit_live());
    const auto loops = loops_of(l_, f);
    for (std::size_t i = 0; i + 1 < l_.size(); ++i) {
      const Instruction& mul = l_.nodes[i].inst;
      const Instruction& add = l_.nodes[i + 1].inst;
      if (!is_mul_add_pair(mul, add)) continue;
      if (seen_.insert(l_.nodes[i].id).second) ++st_.matched;
      if (f.refs[i + 1] != 0 || f.zol_end[i]) continue;
      const unsigned t = mul.rd, a = mul.rs1, b = mul.rs2, c = add.rd;
      if (f.live_out[i + 1] & reg_bit(t)) continue;
      if (a == b || c == a || c == b || a == 0 || b == 0 || t == a || t == b) continue;
      const std::int64_t pair_cost = cost_of(m_, Op::Mul) + cost_of(m_, Op::Add);
      const std::int64_t per_exec = pair_cost - cost_of(m_, Op::Mac);

      if (c == kMacAcc && ((a == kMacLhs && b == kMacRhs) || (a == kMacRhs && b == kMacLhs))) {
        if (per_exec <= 0) continue;
        fuse(i);
        ++st_.applied;
        st_.estimated_cycles_saved += per_exec;
        return true;
      }
      if (const LoopShape* lp = enclosing_loop(loops, i, i + 1)) {
        if (try_loop(f, *lp, i, a, b, c, per_exec)) return true;
        continue;
      }
      if (!f.zol_end[i + 1] && try_straight(f, i, a, b, c, per_exec)) return true;
    }
    return false;
  }

 private:
  RegMask exit_live() const { return l_.live_out(); }

  void fuse(std::size_t i) {
    l_.nodes[i].inst = make_mac();
    l_.erase(i + 1, l_.id_after(i + 1), l_.nodes[i].id);
  }

  bool try_loop(const Flow& f, const LoopShape& lp, std::size_t i, unsigned a, unsigned b, unsigned c,
                std::int64_t per_exec) {
    RegMask body_regs = 0;
    for (std::size_t k = lp.start; k <= lp.backedge; ++k)
      body_regs |= uses_of(l_.nodes[k].inst) | defs_of(l_.nodes[k].inst);
    const RegMask at_exit = lp.backedge + 1 < l_.size() ? f.live_in[lp.backedge + 1] : exit_live();
    const RegMask at_entry = f.live_in[lp.start];
    const std::int64_t trips = lp.trip_count.value_or(kUnknownTripEstimate);

    for (const auto& [ra, rb] : {std::pair{kMacLhs, kMacRhs}, std::pair{kMacRhs, kMacLhs}}) {
      std::map<unsigned, unsigned> map;
      for (const auto& [from, to] : {std::pair{c, kMacAcc}, std::pair{a, ra}, std::pair{b, rb}})
        if (from != to) map[from] = to;
      bool ok = true;
      int copies = 0;
      for (const auto& [from, to] : map) {
        if (from == 0 || (body_regs & reg_bit(to)) || (at_exit & reg_bit(to))) ok = false;
        if (at_entry & reg_bit(from)) ++copies;
        if (at_exit & reg_bit(from)) ++copies;
      }
      if (!ok) continue;
      const std::int64_t saved = trips * per_exec - copies * cost_of(m_, Op::Addi);
      if (saved <= 0) return false;

      const std::size_t s = lp.start, e = lp.backedge;
      for (std::size_t k = s; k <= e; ++k) l_.nodes[k].inst = rename(l_.nodes[k].inst, map);
      const int line_s = l_.nodes[s].line, line_e = l_.nodes[e].line;
      std::vector<Node> post;
      for (const auto& [from, to] : map)
        if (at_exit & reg_bit(from)) post.push_back(l_.make(move(from, to), line_e));
      l_.insert(e + 1, post);
      fuse(i);
      std::vector<Node> pre;
      for (const auto& [from, to] : map)
        if (at_entry & reg_bit(from)) pre.push_back(l_.make(move(to, from), line_s));
      l_.insert(s, pre);
      ++st_.applied;
      st_.estimated_cycles_saved += saved;
      return true;
    }
    return false;
  }

  bool try_straight(const Flow& f, std::size_t i, unsigned a, unsigned b, unsigned c, std::int64_t per_exec) {
    const RegMask after = f.live_out[i + 1];
    for (const auto& [ra, rb] : {std::pair{kMacLhs, kMacRhs}, std::pair{kMacRhs, kMacLhs}}) {
      std::vector<std::pair<unsigned, unsigned>> map;
      for (const auto& [from, to] : {std::pair{c, kMacAcc}, std::pair{a, ra}, std::pair{b, rb}})
        if (from != to) map.emplace_back(from, to);
      bool ok = true;
      for (const auto& [from, to] : map) {
        if (after & reg_bit(to)) ok = false;
        // a source sitting in another operand's scratch register would be clobbered
        for (const auto& [f2, t2] : map)
          if (from == t2) ok = false;
      }
      if (!ok) continue;
      const bool copy_back = c != kMacAcc && (after & reg_bit(c));
      const std::int64_t moves = static_cast<std::int64_t>(map.size()) + (copy_back ? 1 : 0);
      const std::int64_t saved = per_exec - moves * cost_of(m_, Op::Addi);
      if (saved <= 0) return false;
      const int line = l_.nodes[i].line;
      fuse(i);
      if (copy_back) l_.insert(i + 1, {l_.make(move(c, kMacAcc), line)});
      std::vector<Node> pre;
      for (const auto& [from, to] : map) pre.push_back(l_.make(move(to, from), line));
      // the moves take over the mul's place as a branch target
      if (!pre.empty()) {
        std::swap(pre.front().inst, l_.nodes[i].inst);
        std::swap(pre.front().line, l_.nodes[i].line);
        Node mac = pre.front();
        pre.erase(pre.begin());
        pre.push_back(mac);
        l_.insert(i + 1, pre);
      }
      ++st_.applied;
      st_.estimated_cycles_saved += saved;
      return true;
    }
    return false;
  }

  Listing& l_;
  const CycleModel& m_;
  RuleStats& st_;
  std::set<std::uint32_t>& seen_;
};

// ---------------------------------------------------------------------------
// add2i / fusedmac

std::optional<Instruction> pack_add2i(const Instruction& first, const Instruction& second) {
  auto fits = [](std::int32_t i1, std::int32_t i2) { return i1 >= 0 && i1 <= kI1Max && i2 >= 0 && i2 <= kI2Max; };
  if (fits(first.imm, second.imm)) return make_dual(Op::Add2i, first.rd, second.rd, first.imm, second.imm);
  if (fits(second.imm, first.imm)) return make_dual(Op::Add2i, second.rd, first.rd, second.imm, first.imm);
  return std::nullopt;
}

bool add2i_pass(Listing& l, const CycleModel& m, RuleStats& st, std::set<std::uint32_t>& seen) {
  const Flow f = analyze(l, 0);
  const std::int64_t saved = 2 * cost_of(m, Op::Addi) - cost_of(m, Op::Add2i);
  for (std::size_t i = 0; i + 1 < l.size(); ++i) {
    const Instruction first = l.nodes[i].inst;
    const Instruction second = l.nodes[i + 1].inst;
    if (!is_addi_pair(first, second)) continue;
    if (seen.insert(l.nodes[i].id).second) ++st.matched;
    if (f.refs[i + 1] != 0 || f.zol_end[i]) continue;
    auto fused = pack_add2i(first, second);
    if (!fused || saved <= 0) continue;
    l.nodes[i].inst = *fused;
    l.erase(i + 1, l.id_after(i + 1), l.nodes[i].id);
    ++st.applied;
    st.estimated_cycles_saved += saved;
    return true;
  }
  return false;
}

bool fusedmac_pass(Listing& l, const CycleModel& m, RuleStats& st, std::set<std::uint32_t>& seen) {
  const Flow f = analyze(l, 0);
  const std::int64_t saved = cost_of(m, Op::Mac) + cost_of(m, Op::Add2i) - cost_of(m, Op::Fusedmac);
  for (std::size_t i = 0; i + 1 < l.size(); ++i) {
    const Instruction x = l.nodes[i].inst;
    const Instruction y = l.nodes[i + 1].inst;
    const Instruction* dual = nullptr;
    if (x.op == Op::Mac && y.op == Op::Add2i) dual = &y;
    else if (x.op == Op::Add2i && y.op == Op::Mac) dual = &x;
    if (!dual) continue;
    if (seen.insert(l.nodes[i].id).second) ++st.matched;
    if (f.refs[i + 1] != 0 || f.zol_end[i]) continue;
    if ((reg_bit(dual->rs1) | reg_bit(dual->rs2)) & kMacRegs) continue;
    if (saved <= 0) continue;
    l.nodes[i].inst = make_dual(Op::Fusedmac, dual->rs1, dual->rs2, dual->imm, dual->imm2);
    l.erase(i + 1, l.id_after(i + 1), l.nodes[i].id);
    ++st.applied;
    st.estimated_cycles_saved += saved;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// zol

std::vector<Instruction> load_constant(unsigned rd, std::int32_t value) {
  if (value >= -2048 && value <= 2047) return {make_i(Op::Addi, rd, 0, value)};
  const auto u = static_cast<std::uint32_t>(value);
  std::uint32_t hi = (u + 0x800) >> 12;
  auto lo = static_cast<std::int32_t>(u - (hi << 12));
  std::vector<Instruction> out{make_u(Op::Lui, rd, static_cast<std::int32_t>(hi & 0xFFFFF))};
  if (lo != 0) out.push_back(make_i(Op::Addi, rd, rd, lo));
  return out;
}

// Deletes the last definition of `reg` before `pos` in the preheader block
// when nothing reads it any more. Returns the number of nodes removed.
int drop_dead_constant(Listing& l, std::uint32_t anchor, unsigned reg) {
  const Flow f = analyze(l, l.live_out());
  const std::size_t pos = l.pos_of(anchor);
  std::size_t k = pos;
  while (k > 0 && f.refs[k] == 0 && !is_control(l.nodes[k - 1].inst.op)) {
    --k;
    const Instruction& in = l.nodes[k].inst;
    if (!(defs_of(in) & reg_bit(reg))) {
      if (uses_of(in) & reg_bit(reg)) return 0;
      continue;
    }
    if (f.live_out[k] & reg_bit(reg)) return 0;
    if (in.op == Op::Addi && in.rs1 == 0) {
      l.erase(k);
      return 1;
    }
    if (in.op == Op::Lui) {
      l.erase(k);
      return 1;
    }
    if (in.op == Op::Addi && in.rs1 == reg && k > 0 && l.nodes[k - 1].inst.op == Op::Lui &&
        l.nodes[k - 1].inst.rd == reg && f.refs[k] == 0) {
      l.erase(k);
      l.erase(k - 1);
      return 2;
    }
    return 0;
  }
  return 0;
}

bool zol_pass(Listing& l, const CycleModel& m, RuleStats& st, std::set<std::uint32_t>& seen) {
  const Flow f = analyze(l, l.live_out());
  const auto loops = loops_of(l, f);
  for (const LoopShape& lp : loops) {
    const std::size_t s = lp.start, e = lp.backedge;
    if (seen.insert(l.nodes[e].id).second) ++st.matched;
    bool ok = true;
    for (std::size_t k = s; k < e; ++k) {
      if (k == lp.induction_update) continue;
      if ((uses_of(l.nodes[k].inst) | defs_of(l.nodes[k].inst)) & reg_bit(lp.induction)) ok = false;
    }
    const RegMask at_exit = e + 1 < l.size() ? f.live_in[e + 1] : l.live_out();
    if (at_exit & reg_bit(lp.induction)) ok = false;
    const std::size_t body = e - s - 1;  // without the update and the branch
    if (body == 0 || body > static_cast<std::size_t>(kZolOffsetMax)) ok = false;
    if (!ok) continue;

    std::vector<Instruction> setup;
    std::int64_t trips = kUnknownTripEstimate;
    if (lp.trip_count) {
      trips = *lp.trip_count;
      if (trips > std::numeric_limits<std::int32_t>::max()) continue;
      if (trips <= kZolCountMax) {
        setup.push_back(make_dlpi(static_cast<std::int32_t>(trips), 0));
      } else {
        setup = load_constant(lp.induction, static_cast<std::int32_t>(trips));
        setup.push_back(make_zol_set(Op::SetZc, lp.induction));
        setup.push_back(make_zlp(0));
      }
    } else if (lp.init && *lp.init == 0 && lp.step == 1 && lp.bound_reg != 0) {
      setup.push_back(make_zol_set(Op::SetZc, lp.bound_reg));
      setup.push_back(make_zlp(0));
    } else {
      continue;
    }
    std::int64_t setup_cost = 0;
    for (const auto& in : setup) setup_cost += cost_of(m, in.op);
    std::int64_t saved = trips * (cost_of(m, Op::Addi) + cost_of(m, Op::Blt)) +
                         (trips - 1) * static_cast<std::int64_t>(m.taken_branch_extra) - setup_cost;
    if (saved <= 0) continue;

    const std::uint32_t update_id = l.nodes[lp.induction_update].id;
    const std::uint32_t back_id = l.nodes[e].id;
    l.erase(l.pos_of(back_id));
    l.erase(l.pos_of(update_id));
    // body now spans [s, e - 2]
    const std::uint32_t last_id = l.nodes[e - 2].id;
    std::vector<Node> nodes;
    const int line = l.nodes[s].line;
    for (const auto& in : setup)
      nodes.push_back(l.make(in, line, is_zol_setup(in.op) ? last_id : kEnd));
    l.insert(s, nodes);
    int removed = 0;
    const std::uint32_t setup_id = l.nodes[s].id;
    removed += drop_dead_constant(l, setup_id, lp.induction);
    if (lp.bound_reg != lp.induction) removed += drop_dead_constant(l, setup_id, lp.bound_reg);
    saved += removed * cost_of(m, Op::Addi);  // dead init and bound constants
    ++st.applied;
    st.estimated_cycles_saved += saved;
    return true;
  }
  return false;
}

template <typename Pass>
Program apply(const Program& program, const CycleModel& model, RuleStats* stats, Pass pass) {
  Listing l(program);
  if (l.opaque()) return program;
  RuleStats local;
  RuleStats& st = stats ? *stats : local;
  std::set<std::uint32_t> seen;
  bool any = false;
  while (pass(l, model, st, seen)) any = true;
  return any ? l.to_program() : program;
}

}  // namespace

Liveness compute_liveness(const Program& program) {
  Listing l(program);
  Flow f = analyze(l, program.live_out);
  if (l.opaque()) {
    std::fill(f.live_in.begin(), f.live_in.end(), kAllRegs);
    std::fill(f.live_out.begin(), f.live_out.end(), kAllRegs);
  }
  return Liveness{std::move(f.live_in), std::move(f.live_out)};
}

std::vector<LoopShape> find_loops(const Program& program) {
  Listing l(program);
  if (l.opaque()) return {};
  return loops_of(l, analyze(l, program.live_out));
}

Program apply_mac(const Program& program, const CycleModel& model, RuleStats* stats) {
  return apply(program, model, stats, [](Listing& l, const CycleModel& m, RuleStats& st, std::set<std::uint32_t>& seen) {
    MacRule rule(l, m, st, seen);
    return rule.run_once();
  });
}

Program apply_add2i(const Program& program, const CycleModel& model, RuleStats* stats) {
  return apply(program, model, stats, add2i_pass);
}

Program apply_fusedmac(const Program& program, const CycleModel& model, RuleStats* stats) {
  return apply(program, model, stats, fusedmac_pass);
}

Program apply_zol(const Program& program, const CycleModel& model, RuleStats* stats) {
  return apply(program, model, stats, zol_pass);
}

RetargetResult retarget(const Program& program, Variant variant, const CycleModel& model) {
  RetargetResult r{program, {}};
  for (;;) {
    const Program before = r.program;
    for (Rule rule : kAllRules) {
      if (variant < rule_min_variant(rule)) continue;
      RuleStats* st = &r.stats[rule];
      switch (rule) {
        case Rule::Mac: r.program = apply_mac(r.program, model, st); break;
        case Rule::Add2i: r.program = apply_add2i(r.program, model, st); break;
        case Rule::Fusedmac: r.program = apply_fusedmac(r.program, model, st); break;
        case Rule::Zol: r.program = apply_zol(r.program, model, st); break;
      }
    }
    if (r.program == before) break;
  }
  return r;
}

}  // namespace marvel
