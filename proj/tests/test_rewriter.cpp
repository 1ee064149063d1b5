#include <random>

#include "doctest.h"
#include "marvel/assembler.hpp"
#include "marvel/rewriter.hpp"
#include "marvel/workloads.hpp"
#include "support.hpp"

using namespace marvel;

namespace {

std::size_t count_op(const Program& p, Op op) {
  std::size_t n = 0;
  for (const auto& i : p.text) n += i.op == op;
  return n;
}

// Final memory and every live-at-exit register must agree.
void check_equivalent(const Program& base, const Program& rewritten, Variant v) {
  const RunResult a = check::run_on(base, Variant::V0);
  const RunResult b = check::run_on(rewritten, v);
  REQUIRE(a.state.mem == b.state.mem);
  for (unsigned r = 1; r < 32; ++r)
    if (base.live_out & reg_bit(r)) REQUIRE(a.state.x[r] == b.state.x[r]);
}

const char* kCountedLoop =
    "  li t4, 0\n"
    "  li t5, 10\n"
    "top:\n"
    "  add a0, a0, a1\n"
    "  add a1, a1, a2\n"
    "  xor a2, a2, a0\n"
    "  addi t4, t4, 1\n"
    "  blt t4, t5, top\n"
    "  halt\n"
    ".liveout a0, a1, a2\n";

}  // namespace

TEST_SUITE("rewriter") {

TEST_CASE("hardwired accumulator loop becomes mac without copies") {
  const Program p = assemble(
      "  li t4, 0\n"
      "  li t5, 10\n"
      "top:\n"
      "  mul x23, x21, x22\n"
      "  add x20, x20, x23\n"
      "  addi t4, t4, 1\n"
      "  blt t4, t5, top\n"
      "  halt\n"
      ".liveout x20\n",
      Variant::V0);
  RuleStats st;
  const Program q = apply_mac(p, {}, &st);
  CHECK(q.text.size() == p.text.size() - 1);
  CHECK(count_op(q, Op::Mac) == 1);
  CHECK(count_op(q, Op::Mul) == 0);
  CHECK(count_op(q, Op::Addi) == count_op(p, Op::Addi));
  CHECK(st.applied == 1);
  check_equivalent(p, q, Variant::V1);
}

TEST_CASE("a lone pair needing three moves is left alone") {
  const Program p = assemble("mul a0, a1, a2\nadd a3, a3, a0\nhalt\n.liveout a3\n", Variant::V0);
  RuleStats st;
  CHECK(apply_mac(p, {}, &st) == p);
  CHECK(st.matched == 1);
  CHECK(st.applied == 0);
}

TEST_CASE("general registers in a loop are renamed with copies outside") {
  const Program p = assemble(
      "  li a1, 3\n"
      "  li a2, 5\n"
      "  li t4, 0\n"
      "  li t5, 100\n"
      "top:\n"
      "  mul a0, a1, a2\n"
      "  add a3, a3, a0\n"
      "  addi a1, a1, 1\n"
      "  addi t4, t4, 1\n"
      "  blt t4, t5, top\n"
      "  halt\n"
      ".liveout a1, a3\n",
      Variant::V0);
  const Program q = apply_mac(p);
  CHECK(count_op(q, Op::Mac) == 1);
  check_equivalent(p, q, Variant::V1);
  CHECK(check::run_on(q, Variant::V1).cycles < check::run_on(p, Variant::V0).cycles);
}

TEST_CASE("increment pairs") {
  auto one = [](const char* src) { return apply_add2i(assemble(src, Variant::V0)); };
  Program q = one("addi x5, x5, 4\naddi x6, x6, 64\nhalt\n");
  CHECK(q.text[0] == make_dual(Op::Add2i, 5, 6, 4, 64));
  CHECK(q.text.size() == 2);
  q = one("addi x5, x5, 64\naddi x6, x6, 4\nhalt\n");
  CHECK(q.text[0] == make_dual(Op::Add2i, 6, 5, 4, 64));
  const Program far = assemble("addi x5, x5, 40\naddi x6, x6, 2000\nhalt\n", Variant::V0);
  CHECK(apply_add2i(far) == far);
  const Program neg = assemble("addi x5, x5, -1\naddi x6, x6, 4\nhalt\n", Variant::V0);
  CHECK(apply_add2i(neg) == neg);
  // the second increment is a branch target
  const Program tgt = assemble("addi x5, x5, 1\nnext:\naddi x6, x6, 1\nbeq x0, x1, next\nhalt\n", Variant::V0);
  CHECK(apply_add2i(tgt) == tgt);
}

TEST_CASE("fusedmac folds mac with an adjacent add2i") {
  const Program p = assemble("mac\nadd2i x5, x6, 4, 64\nhalt\n", Variant::V2);
  const Program q = apply_fusedmac(p);
  REQUIRE(q.text.size() == 2);
  CHECK(q.text[0] == make_dual(Op::Fusedmac, 5, 6, 4, 64));
  const Program before = assemble("add2i x5, x6, 4, 64\nmac\nhalt\n", Variant::V2);
  CHECK(apply_fusedmac(before).text[0] == make_dual(Op::Fusedmac, 5, 6, 4, 64));
  const Program dep = assemble("add2i x20, x6, 4, 64\nmac\nhalt\n", Variant::V2);
  CHECK(apply_fusedmac(dep) == dep);
}

TEST_CASE("fusedmac saves one cycle per fused iteration") {
  const auto spec = conv_micro();
  const Program base = codegen(spec, seeded_data(spec));
  const Program v2 = retarget(base, Variant::V2).program;
  const Program v3 = retarget(base, Variant::V3).program;
  const RunResult r2 = check::run_on(v2, Variant::V2);
  const RunResult r3 = check::run_on(v3, Variant::V3);
  CHECK(r3.state.retired_of(Op::Fusedmac) > 0);
  CHECK(r2.cycles - r3.cycles == r3.state.retired_of(Op::Fusedmac));
}

TEST_CASE("counted loop becomes a hardware loop") {
  const Program p = assemble(kCountedLoop, Variant::V0);
  RuleStats st;
  const Program q = apply_zol(p, {}, &st);
  CHECK(st.applied == 1);
  CHECK(count_op(q, Op::Blt) == 0);
  CHECK(count_op(q, Op::Dlpi) == 1);
  const RunResult a = check::run_on(p, Variant::V0);
  const RunResult b = check::run_on(q, Variant::V4);
  // 2 li + 10 * (3 + 1 + 1) + 9 taken extras + halt
  CHECK(a.cycles == 62);
  CHECK(b.cycles == 1 + 10 * 3 + 1);
  CHECK(b.state.retired_of(Op::Blt) == 0);
  check_equivalent(p, q, Variant::V4);
}

TEST_CASE("large and register-bound trip counts") {
  const Program big = assemble(
      "  li t4, 0\n  li t5, 5000\ntop:\n  add a0, a0, a1\n  addi t4, t4, 1\n  blt t4, t5, top\n  halt\n"
      ".liveout a0\n",
      Variant::V0);
  const Program q = apply_zol(big);
  CHECK(count_op(q, Op::Zlp) == 1);
  CHECK(count_op(q, Op::SetZc) == 1);
  check_equivalent(big, q, Variant::V4);

  const Program reg = assemble(
      ".data\nn: .word 7\n.text\n  la a5, n\n  lw a4, 0(a5)\n  li t4, 0\ntop:\n  add a0, a0, a1\n"
      "  addi t4, t4, 1\n  blt t4, a4, top\n  halt\n.liveout a0\n",
      Variant::V0);
  const Program r = apply_zol(reg);
  CHECK(count_op(r, Op::Blt) == 0);
  check_equivalent(reg, r, Variant::V4);
}

TEST_CASE("a counter read after the loop blocks conversion") {
  const Program p = assemble(
      "  li t4, 0\n  li t5, 10\ntop:\n  add a0, a0, a1\n  addi t4, t4, 1\n  blt t4, t5, top\n"
      "  add a0, a0, t4\n  halt\n.liveout a0\n",
      Variant::V0);
  CHECK(apply_zol(p) == p);
  const Program live = assemble(
      "  li t4, 0\n  li t5, 10\ntop:\n  add a0, a0, a1\n  addi t4, t4, 1\n  blt t4, t5, top\n  halt\n"
      ".liveout a0, t4\n",
      Variant::V0);
  CHECK(apply_zol(live) == live);
}

TEST_CASE("indirect jumps make a program opaque") {
  const Program p = assemble(
      "  la ra, done\n  li t4, 0\n  li t5, 4\ntop:\n  mul x23, x21, x22\n  add x20, x20, x23\n"
      "  addi t4, t4, 1\n  blt t4, t5, top\n  jalr x0, 0(ra)\ndone:\n  halt\n",
      Variant::V0);
  CHECK(retarget(p, Variant::V4).program == p);
}

TEST_CASE("loop discovery on generated kernels") {
  for (const auto& spec : bundled_workloads()) {
    const Program p = codegen(spec, seeded_data(spec));
    const auto loops = find_loops(p);
    CHECK_FALSE(loops.empty());
    for (const auto& l : loops) {
      CHECK(l.start <= l.induction_update);
      CHECK(l.induction_update < l.backedge);
      CHECK(l.step > 0);
      REQUIRE(l.trip_count.has_value());
      CHECK(*l.trip_count >= 1);
    }
  }
}

TEST_CASE("liveness of a straight line") {
  const Program p = assemble("li a0, 1\nli a1, 2\nadd a2, a0, a1\nhalt\n.liveout a2\n", Variant::V0);
  const Liveness l = compute_liveness(p);
  CHECK(l.live_in[2] == (reg_bit(10) | reg_bit(11)));
  CHECK(l.live_out[2] == reg_bit(12));
  CHECK(l.live_in[0] == 0u);
}

TEST_CASE("v0 is the identity") {
  for (const auto& spec : bundled_workloads()) {
    const Program p = codegen(spec, seeded_data(spec));
    const auto r = retarget(p, Variant::V0);
    CHECK(r.program == p);
    for (Rule rule : kAllRules) CHECK(r.stats[rule].applied == 0);
  }
}

TEST_CASE("generated conv loop loses its backedge") {
  const auto spec = conv_micro();
  const Program base = codegen(spec, seeded_data(spec));
  const auto r = retarget(base, Variant::V4);
  CHECK(r.stats[Rule::Zol].applied >= 1);
  CHECK(count_op(r.program, Op::Blt) == count_op(base, Op::Blt) - r.stats[Rule::Zol].applied);
}

TEST_CASE("random programs: equivalence, legality, idempotence, monotone cycles") {
  std::mt19937 rng(2024);
  int converted = 0, fused = 0;
  for (int k = 0; k < 150; ++k) {
    const std::string src = check::random_loop_program(rng);
    CAPTURE(src);
    const Program p = assemble(src, Variant::V0);
    std::uint64_t prev = check::run_on(p, Variant::V0).cycles;
    for (Variant v : kAllVariants) {
      const auto r = retarget(p, v);
      CHECK_NOTHROW(check_variant(r.program, v));
      check_equivalent(p, r.program, v);
      const std::uint64_t cycles = check::run_on(r.program, v).cycles;
      CHECK(cycles <= prev);
      prev = cycles;
      CHECK(disassemble(retarget(r.program, v).program) == disassemble(r.program));
      if (v == Variant::V4) {
        converted += static_cast<int>(r.stats[Rule::Zol].applied);
        fused += static_cast<int>(r.stats[Rule::Mac].applied);
      }
    }
  }
  MESSAGE("converted ", converted, ", fused ", fused);
  // the generator must actually exercise the rules
  CHECK(converted > 50);
  CHECK(fused > 20);
}

TEST_CASE("bundled workloads keep their outputs on every variant") {
  for (const auto& spec : bundled_workloads()) {
    const auto data = seeded_data(spec, kDefaultSeed, 3);
    const Program p = codegen(spec, data);
    const GoldenResult want = oracle(spec, data);
    for (Variant v : kAllVariants) {
      const Program q = retarget(p, v).program;
      const RunResult r = run(q, v, {});
      CHECK(read_outputs(spec, q, r.state.mem) == want);
    }
  }
}

}
