// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>

#include "marvel/assembler.hpp"
#include "marvel/evaluator.hpp"
#include "marvel/profiler.hpp"
#include "marvel/rewriter.hpp"
#include "marvel/workloads.hpp"
#include "support.hpp"

using namespace marvel;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void criterion(int id, const char* title, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s  %2d  %-34s %6.2fs  %s\n", v.pass ? "PASS" : "FAIL", id, title, secs, v.detail.c_str());
  std::fflush(stdout);
  failures += !v.pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

Verdict encoding() {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  std::uint64_t checked = 0;
  auto same = [&](const Instruction& in) {
    ++checked;
    return decode(encode(in)) == in;
  };
  bool ok = true;
  for (Op op : {Op::Add2i, Op::Fusedmac})
    for (int i1 = 0; i1 <= kI1Max; ++i1)
      for (int i2 = 0; i2 <= kI2Max; ++i2) ok &= same(make_dual(op, (i1 + i2) % 32, (i1 * 7 + i2) % 32, i1, i2));
  v.require(ok, "dual-increment round trip");
  ok = true;
  for (int off = kZolOffsetMin; off <= kZolOffsetMax; ++off) {
    for (unsigned r = 0; r < 32; ++r) ok &= same(make_dlp(r, off));
    for (int n = 0; n <= kZolCountMax; ++n) ok &= same(make_dlpi(n, off));
    ok &= same(make_zlp(off));
  }
  for (Op op : {Op::SetZc, Op::SetZs, Op::SetZe})
    for (unsigned r = 0; r < 32; ++r) ok &= same(make_zol_set(op, r));
  v.require(ok, "hardware-loop round trip");
  ok = same(make_mac());
  std::mt19937 rng(0xC0DE);
  for (int i = 0; i < 100000; ++i) ok &= same(check::random_base_instruction(rng));
  v.require(ok, "base instruction round trip");
  const double secs = seconds_since(t0);
  v.require(secs < 10.0, "slower than 10 s");
  if (v.pass) v.detail = std::to_string(checked) + " instructions";
  return v;
}

Verdict semantics() {
  Verdict v;
  std::vector<std::future<std::string>> jobs;
  for (const auto& spec : bundled_workloads()) {
    const auto weights = random_weights(spec);
    for (std::uint32_t i = 0; i < 20; ++i)
      jobs.push_back(std::async(std::launch::async, [spec, weights, i] {
        const WorkloadData data{random_input(spec, kDefaultSeed, i), weights};
        const Program base = codegen(spec, data);
        const GoldenResult want = oracle(spec, data);
        for (Variant var : kAllVariants) {
          const Program p = retarget(base, var).program;
          const RunResult r = run(p, var, {});
          if (read_outputs(spec, p, r.state.mem) != want)
            return spec.name + " input " + std::to_string(i) + " " + std::string(variant_name(var));
        }
        return std::string();
      }));
  }
  int cells = 0;
  for (auto& j : jobs) {
    const std::string bad = j.get();
    v.require(bad.empty(), "mismatch: " + bad);
    cells += 5;
  }
  if (v.pass) v.detail = std::to_string(cells) + " runs bit-identical";
  return v;
}

Verdict mac_halving() {
  Verdict v;
  const int n = 10000;
  const std::string loop =
      "  li t4, 0\n"
      "  li t5, " + std::to_string(n) + "\n"
      "top:\n"
      "  mul x23, x21, x22\n"
      "  add x20, x20, x23\n"
      "  addi t4, t4, 1\n"
      "  blt t4, t5, top\n"
      "  halt\n"
      ".liveout x20\n";
  const Program base = assemble("  li x21, 3\n  li x22, -7\n" + loop, Variant::V0);
  const Program fused = retarget(base, Variant::V1).program;
  const RunResult a = check::run_on(base, Variant::V0);
  const RunResult b = check::run_on(fused, Variant::V1);
  v.require(a.state.x[20] == b.state.x[20], "accumulator differs");
  v.require(b.state.retired_of(Op::Mac) == static_cast<std::uint64_t>(n), "mac retirements");
  const std::int64_t saved = static_cast<std::int64_t>(a.cycles) - static_cast<std::int64_t>(b.cycles);
  v.require(saved == n, "saved " + std::to_string(saved) + " cycles, expected " + std::to_string(n));

  // same loop on ordinary registers: the operand copies sit outside the loop
  const Program general = assemble(
      "  li a1, 3\n  li a2, -7\n  li t4, 0\n  li t5, " + std::to_string(n) +
          "\ntop:\n  mul a0, a1, a2\n  add a3, a3, a0\n  addi t4, t4, 1\n  blt t4, t5, top\n  halt\n"
          ".liveout a3\n",
      Variant::V0);
  const Program renamed = retarget(general, Variant::V1).program;
  const std::int64_t g = static_cast<std::int64_t>(check::run_on(general, Variant::V0).cycles) -
                         static_cast<std::int64_t>(check::run_on(renamed, Variant::V1).cycles);
  v.require(g > n - 8 && g <= n, "general-register loop saved " + std::to_string(g));
  if (v.pass)
    v.detail = "N=" + std::to_string(n) + ", saved " + std::to_string(saved) + " (ordinary registers: " +
               std::to_string(g) + " after copies)";
  return v;
}

// Body of a loop with its induction update and backedge removed.
std::vector<Instruction> stripped_body(const Program& p, const LoopShape& l) {
  std::vector<Instruction> out;
  for (std::size_t i = l.start; i < l.backedge; ++i)
    if (i != l.induction_update) out.push_back(p.text[i]);
  return out;
}

Verdict blt_elimination() {
  Verdict v;
  int regions = 0;
  for (const auto& spec : bundled_workloads()) {
    const Program base = codegen(spec, seeded_data(spec));
    const Program v3 = retarget(base, Variant::V3).program;
    const auto v4 = retarget(base, Variant::V4);
    const RunResult r3 = run(v3, Variant::V3, {});
    const RunResult r4 = run(v4.program, Variant::V4, {});
    const auto loops = find_loops(v3);
    std::uint64_t blt_removed = 0, updates_removed = 0;
    int found = 0;
    std::size_t next = 0;
    for (std::size_t s = 0; s < v4.program.text.size(); ++s) {
      const Instruction& in = v4.program.text[s];
      if (in.op != Op::Dlpi && in.op != Op::Zlp && in.op != Op::Dlp) continue;
      const std::size_t end = s + static_cast<std::size_t>(in.imm);
      const std::vector<Instruction> body(v4.program.text.begin() + static_cast<std::ptrdiff_t>(s) + 1,
                                          v4.program.text.begin() + static_cast<std::ptrdiff_t>(end) + 1);
      // loops keep their order, and bodies can repeat across layers
      const LoopShape* origin = nullptr;
      while (next < loops.size() && !origin)
        if (stripped_body(v3, loops[next++]) == body) origin = &loops[next - 1];
      v.require(origin != nullptr, spec.name + ": hardware loop without a source loop");
      if (!origin) continue;
      ++found;
      std::uint64_t blt = 0, updates = 0;
      for (std::size_t i = s + 1; i <= end; ++i) {
        const Instruction& b = v4.program.text[i];
        if (b.op == Op::Blt) blt += r4.state.pc_hist[i];
        if (b.op == Op::Addi && b.rd == origin->induction) updates += r4.state.pc_hist[i];
      }
      v.require(blt == 0, spec.name + ": blt retired inside a hardware loop");
      v.require(updates == 0, spec.name + ": induction update retired inside a hardware loop");
      v.require(r4.state.pc_hist[s + 1] > 0, spec.name + ": hardware loop never ran");
      blt_removed += r3.state.pc_hist[origin->backedge];
      updates_removed += r3.state.pc_hist[origin->induction_update];
    }
    v.require(found == static_cast<int>(v4.stats[Rule::Zol].applied), spec.name + ": loop count mismatch");
    v.require(r3.state.retired_of(Op::Blt) - r4.state.retired_of(Op::Blt) == blt_removed,
              spec.name + ": blt retirements not explained by converted loops");
    v.require(updates_removed > 0, spec.name + ": no induction updates removed");
    regions += found;
  }

  // per-iteration saving, measured differentially between two trip counts
  const CycleModel model;
  auto delta = [&](int trips) {
    const Program p = assemble("  li t4, 0\n  li t5, " + std::to_string(trips) +
                                   "\ntop:\n  add a0, a0, a1\n  xor a1, a1, a0\n  sub a2, a2, a1\n"
                                   "  addi t4, t4, 1\n  blt t4, t5, top\n  halt\n.liveout a0, a1, a2\n",
                               Variant::V0);
    const Program v3 = retarget(p, Variant::V3).program;
    const Program v4 = retarget(p, Variant::V4).program;
    return static_cast<std::int64_t>(check::run_on(v3, Variant::V3).cycles) -
           static_cast<std::int64_t>(check::run_on(v4, Variant::V4).cycles);
  };
  const std::int64_t per = (delta(510) - delta(10)) / 500;
  const std::int64_t expected = model.cost(Op::Addi) + model.taken_branch_extra + model.cost(Op::Blt);
  v.require((delta(510) - delta(10)) % 500 == 0 && per == expected,
            "per-iteration saving " + std::to_string(per) + ", expected " + std::to_string(expected));
  if (v.pass)
    v.detail = std::to_string(regions) + " converted loops clean; saving " + std::to_string(per) + " cycles/iteration";
  return v;
}

std::vector<BenchRow> matrix_rows;
double matrix_seconds = 0;

Verdict speedup() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  matrix_rows = bench_matrix(bundled_workloads(), {kAllVariants.begin(), kAllVariants.end()}, {}, {});
  matrix_seconds = seconds_since(t0);
  std::vector<BenchRow> lenet;
  for (const auto& r : matrix_rows)
    if (r.workload == "lenet5_star") lenet.push_back(r);
  v.require(lenet.size() == 5, "missing rows");
  if (!v.pass) return v;
  for (std::size_t i = 1; i < lenet.size(); ++i)
    v.require(lenet[i].cycles < lenet[i - 1].cycles, "cycles not strictly decreasing");
  const double s = lenet[4].speedup;
  v.require(s >= 1.5 && s <= 2.5, "speedup " + fmt(s) + " outside [1.5, 2.5]");
  v.require(matrix_seconds < 30.0, "matrix took " + fmt(matrix_seconds, "%.1f") + " s");
  std::ostringstream cyc;
  for (const auto& r : lenet) cyc << (r.variant == Variant::V0 ? "" : " > ") << r.cycles;
  if (v.pass) v.detail = "v4 speedup " + fmt(s) + "; cycles " + cyc.str() + "; matrix " + fmt(matrix_seconds, "%.2f") + " s";
  return v;
}

Verdict immediate_split() {
  Verdict v;
  const auto spec = lenet5_star();
  PatternCounter c;
  run(codegen(spec, seeded_data(spec)), Variant::V0, {}, {}, &c);
  const double cov = coverage(c.histogram(), 5, 10);
  v.require(cov == 1.0, "lenet coverage at (5,10) is " + fmt(cov, "%.6f"));
  std::mt19937 rng(0x5911);
  for (int k = 0; k < 100; ++k) {
    ImmediateHistogram h;
    const int entries = 1 + static_cast<int>(rng() % 40);
    for (int e = 0; e < entries; ++e)
      h.add(static_cast<std::int32_t>(rng() % (1u << (rng() % 15))), static_cast<std::int32_t>(rng() % (1u << (rng() % 15))),
            1 + rng() % 500);
    if (k % 5 == 0) h.add(-2, 9, 1 + rng() % 500);
    const auto got = select_split(h);
    const auto want = check::brute_split(h);
    v.require(got.b1 == want.b1 && got.b2 == 15 - want.b1, "histogram " + std::to_string(k) + " split differs");
  }
  if (v.pass) v.detail = "lenet coverage 1.0; 100/100 histograms match brute force";
  return v;
}

Verdict energy_formula() {
  Verdict v;
  const EnergyParams p;
  const double e = energy(1'000'000, Variant::V0, p);
  const double ulp = std::nextafter(8.3e-3, 1.0) - 8.3e-3;
  v.require(std::abs(e - 8.3e-3) <= ulp, "energy(1e6, v0) = " + fmt(e, "%.17g"));
  std::mt19937_64 rng(0xE4E);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t a = 1 + rng() % 1'000'000'000, b = 1 + rng() % 1'000'000'000;
    const Variant var = kAllVariants[rng() % 5];
    const double ea = energy(a, var, p), eb = energy(b, var, p), eab = energy(a + b, var, p);
    v.require(std::abs(eab - (ea + eb)) <= 1e-14 * eab, "additivity");
    v.require(energy(2 * a, var, p) == 2 * ea, "scaling by two");
    v.require(a == b || (a < b) == (ea < eb), "monotonicity");
  }
  if (v.pass) v.detail = "E = " + fmt(e, "%.17g") + " J; 10^4 linearity samples (rel tol 1e-14)";
  return v;
}

Verdict profiler_oracle() {
  Verdict v;
  std::mt19937 rng(0xFACE);
  std::uint64_t events = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto t = check::random_trace(rng, 1000 + rng() % 9001);
    std::vector<std::uint64_t> cost(t.size());
    for (auto& c : cost) c = 1 + rng() % 4;
    PatternCounter pc;
    for (std::size_t i = 0; i < t.size(); ++i) pc.add(t[i], cost[i]);
    const auto want = check::naive_scan(t, cost);
    v.require(pc.report() == want.report, "trace " + std::to_string(k) + " counts differ");
    v.require(pc.histogram() == want.histogram, "trace " + std::to_string(k) + " histogram differs");
    events += t.size();
  }
  if (v.pass) v.detail = "1000 traces, " + std::to_string(events) + " events";
  return v;
}

Verdict monotone_idempotent() {
  Verdict v;
  v.require(!matrix_rows.empty(), "matrix unavailable");
  for (std::size_t i = 1; i < matrix_rows.size(); ++i)
    if (matrix_rows[i].workload == matrix_rows[i - 1].workload)
      v.require(matrix_rows[i].cycles <= matrix_rows[i - 1].cycles, matrix_rows[i].workload + " cycles increase");
  int pairs = 0;
  for (const auto& spec : bundled_workloads()) {
    const Program base = codegen(spec, seeded_data(spec));
    for (Variant var : kAllVariants) {
      const Program once = retarget(base, var).program;
      const Program twice = retarget(once, var).program;
      v.require(disassemble(once) == disassemble(twice),
                spec.name + " " + std::string(variant_name(var)) + " not idempotent");
      ++pairs;
    }
  }
  if (v.pass) v.detail = "non-increasing on all workloads; " + std::to_string(pairs) + " idempotent retargets";
  return v;
}

Verdict memory_accounting() {
  Verdict v;
  v.require(!matrix_rows.empty(), "matrix unavailable");
  for (const auto& row : matrix_rows) {
    const auto spec = *find_workload(row.workload);
    const Program p = retarget(codegen(spec, seeded_data(spec)), row.variant).program;
    v.require(row.pm_bytes == 4 * p.text.size(), row.workload + " pm bytes");
    v.require(write_image(p).size() == kImageHeaderBytes + row.pm_bytes + row.dm_bytes, row.workload + " image size");
  }
  if (v.pass) v.detail = std::to_string(matrix_rows.size()) + " rows exact";
  return v;
}

}  // namespace

int main() {
  criterion(1, "encode/decode round trip", encoding);
  criterion(2, "outputs match the oracle", semantics);
  criterion(3, "mac halves the accumulate loop", mac_halving);
  criterion(4, "hardware loops drop blt and update", blt_elimination);
  criterion(5, "lenet speedup band", speedup);
  criterion(6, "immediate split", immediate_split);
  criterion(7, "energy per inference", energy_formula);
  criterion(8, "profiler equals naive re-scan", profiler_oracle);
  criterion(9, "rewrites monotone and idempotent", monotone_idempotent);
  criterion(10, "program memory accounting", memory_accounting);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
