#include "marvel/profiler.hpp"

#include <set>
#include <stdexcept>

namespace marvel {

std::uint64_t ImmediateHistogram::total_weight() const {
  std::uint64_t t = 0;
  for (const auto& [k, w] : unsigned_pairs) t += w;
  for (const auto& [k, w] : signed_pairs) t += w;
  return t;
}

void ImmediateHistogram::add(std::int32_t i1, std::int32_t i2, std::uint64_t weight) {
  auto& bucket = (i1 < 0 || i2 < 0) ? signed_pairs : unsigned_pairs;
  bucket[{i1, i2}] += weight;
}

bool is_addi_increment(const Instruction& in) { return in.op == Op::Addi && in.rd != 0 && in.rd == in.rs1; }

bool is_addi_pair(const Instruction& first, const Instruction& second) {
  return is_addi_increment(first) && is_addi_increment(second) && first.rd != second.rd;
}

bool is_mul_add_pair(const Instruction& mul, const Instruction& add) {
  if (mul.op != Op::Mul || add.op != Op::Add) return false;
  const unsigned t = mul.rd;
  const unsigned c = add.rd;
  if (t == 0 || c == 0 || c == t) return false;
  return (add.rs1 == c && add.rs2 == t) || (add.rs1 == t && add.rs2 == c);
}

bool is_fusedmac_window(const Instruction& i0, const Instruction& i1, const Instruction& i2, const Instruction& i3) {
  if (!is_addi_pair(i0, i1) || !is_mul_add_pair(i2, i3)) return false;
  for (unsigned r : {unsigned{i0.rd}, unsigned{i1.rd}})
    if (r == i2.rd || r == i2.rs1 || r == i2.rs2 || r == i3.rd) return false;
  return true;
}

void PatternCounter::add(const Instruction& inst, std::uint64_t cost) {
  auto& raw = report_.raw;
  auto& wt = report_.weighted;
  ++raw.total_retired;
  wt.total_retired += cost;
  switch (inst.op) {
    case Op::Add: ++raw.add; wt.add += cost; break;
    case Op::Mul: ++raw.mul; wt.mul += cost; break;
    case Op::Addi: ++raw.addi; wt.addi += cost; break;
    case Op::Blt: ++raw.blt; wt.blt += cost; break;
    default: break;
  }

  const Item item{inst, cost};

  if (mul_pending_ && is_mul_add_pair(mul_pending_->inst, inst)) {
    ++raw.mul_add;
    wt.mul_add += mul_pending_->cost + cost;
    mul_pending_.reset();
  } else {
    mul_pending_ = item;
  }

  if (addi_pending_ && is_addi_pair(addi_pending_->inst, inst)) {
    ++raw.addi_addi;
    wt.addi_addi += addi_pending_->cost + cost;
    histogram_.add(addi_pending_->inst.imm, inst.imm, addi_pending_->cost + cost);
    addi_pending_.reset();
  } else {
    addi_pending_ = item;
  }

  window_.push_back(item);
  if (window_.size() == 4) {
    if (is_fusedmac_window(window_[0].inst, window_[1].inst, window_[2].inst, window_[3].inst)) {
      ++raw.fusedmac;
      wt.fusedmac += window_[0].cost + window_[1].cost + window_[2].cost + window_[3].cost;
      window_.clear();
    } else {
      window_.pop_front();
    }
  }
}

PatternReport count_patterns(std::span<const TraceEvent> events) {
  PatternCounter c;
  for (const auto& e : events) c.add(e.inst, e.cost);
  return c.report();
}

ImmediateHistogram immediate_histogram(std::span<const TraceEvent> events) {
  PatternCounter c;
  for (const auto& e : events) c.add(e.inst, e.cost);
  return c.histogram();
}

namespace {

void scale_into(PatternCounts& dst, const PatternCounts& src, std::uint64_t k) {
  dst.add += src.add * k;
  dst.mul += src.mul * k;
  dst.mul_add += src.mul_add * k;
  dst.addi += src.addi * k;
  dst.addi_addi += src.addi_addi * k;
  dst.fusedmac += src.fusedmac * k;
  dst.blt += src.blt * k;
  dst.total_retired += src.total_retired * k;
}

// Block leaders: entry, control-flow targets, and the successor of every
// control instruction or hardware-loop end.
std::vector<std::size_t> leaders(const Program& p) {
  const std::size_t n = p.text.size();
  std::set<std::size_t> out{0, p.entry};
  for (std::size_t i = 0; i < n; ++i) {
    const Instruction& in = p.text[i];
    const auto si = static_cast<std::int64_t>(i);
    if (is_control(in.op)) out.insert(i + 1);
    if (is_branch(in.op) || in.op == Op::Jal) {
      const std::int64_t t = si + in.imm / 4;
      if (t >= 0 && t <= static_cast<std::int64_t>(n)) out.insert(static_cast<std::size_t>(t));
    }
    if (in.op == Op::Dlp || in.op == Op::Dlpi || in.op == Op::Zlp) {
      const std::int64_t end = si + in.imm;
      if (end >= 0 && end < static_cast<std::int64_t>(n)) out.insert(static_cast<std::size_t>(end + 1));
    }
  }
  std::vector<std::size_t> v;
  for (auto l : out)
    if (l < n) v.push_back(l);
  return v;
}

}  // namespace

PatternReport count_patterns_static(const Program& program, std::span<const std::uint64_t> pc_hist,
                                    std::span<const std::uint64_t> taken_hist, const CycleModel& model,
                                    ImmediateHistogram* histogram) {
  const std::size_t n = program.text.size();
  if (pc_hist.size() != n || taken_hist.size() != n)
    throw std::invalid_argument("execution histogram does not match the program");
  PatternReport out;
  const auto starts = leaders(program);
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const std::size_t first = starts[b];
    const std::size_t last = b + 1 < starts.size() ? starts[b + 1] : n;
    const std::uint64_t count = pc_hist[first];
    if (count == 0) continue;
    PatternCounter c;
    for (std::size_t i = first; i < last; ++i) c.add(program.text[i], model.cost(program.text[i].op));
    scale_into(out.raw, c.report().raw, count);
    scale_into(out.weighted, c.report().weighted, count);
    if (histogram)
      for (const auto& [key, w] : c.histogram().unsigned_pairs) histogram->add(key.first, key.second, w * count);
    if (histogram)
      for (const auto& [key, w] : c.histogram().signed_pairs) histogram->add(key.first, key.second, w * count);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t extra = taken_hist[i] * model.taken_branch_extra;
    out.weighted.total_retired += extra;
    if (program.text[i].op == Op::Blt) out.weighted.blt += extra;
  }
  return out;
}

namespace {
std::uint64_t covered_weight(const ImmediateHistogram& hist, int b1, int b2) {
  const std::int64_t lim1 = std::int64_t{1} << b1;
  const std::int64_t lim2 = std::int64_t{1} << b2;
  std::uint64_t covered = 0;
  for (const auto& [key, w] : hist.unsigned_pairs)
    if (key.first < lim1 && key.second < lim2) covered += w;
  return covered;
}
}  // namespace

double coverage(const ImmediateHistogram& hist, int b1, int b2) {
  const std::uint64_t total = hist.total_weight();
  if (total == 0) return 0.0;
  return static_cast<double>(covered_weight(hist, b1, b2)) / static_cast<double>(total);
}

SplitChoice select_split(const ImmediateHistogram& hist) {
  if (hist.total_weight() == 0) throw std::invalid_argument("select_split: empty immediate histogram");
  int best_b1 = 1;
  std::uint64_t best = covered_weight(hist, 1, kSplitBits - 1);
  for (int b1 = 2; b1 < kSplitBits; ++b1) {
    const std::uint64_t c = covered_weight(hist, b1, kSplitBits - b1);
    if (c > best) {
      best = c;
      best_b1 = b1;
    }
  }
  return {best_b1, kSplitBits - best_b1, coverage(hist, best_b1, kSplitBits - best_b1)};
}

}  // namespace marvel
