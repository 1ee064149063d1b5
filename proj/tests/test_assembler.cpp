#include <string>

#include "doctest.h"
#include "marvel/assembler.hpp"
#include "marvel/workloads.hpp"

using namespace marvel;

TEST_SUITE("assembler") {

TEST_CASE("mac under v1") {
  const Program p = assemble("mac\n", Variant::V1);
  REQUIRE(p.text.size() == 1);
  CHECK(p.text[0] == make_mac());
  CHECK(p.pm_bytes() == 4);
}

TEST_CASE("custom mnemonics are gated by variant") {
  try {
    assemble("nop\nadd2i x5, x6, 4, 64\n", Variant::V0);
    FAIL("expected an error");
  } catch (const AsmError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("requires variant >= v2") != std::string::npos);
  }
  CHECK_NOTHROW(assemble("add2i x5, x6, 4, 64\n", Variant::V2));
  CHECK_THROWS_AS(assemble("dlpi 3, end\nend:\n", Variant::V3), AsmError);
}

TEST_CASE("out-of-range immediates report the line") {
  try {
    assemble("\n\nfusedmac x5, x6, 1, 1024\n", Variant::V4);
    FAIL("expected an error");
  } catch (const AsmError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("i2") != std::string::npos);
  }
  CHECK_THROWS_AS(assemble("addi x1, x1, 4096\n", Variant::V0), AsmError);
  CHECK_THROWS_AS(assemble("beq x1, x2, nowhere\n", Variant::V0), AsmError);
  CHECK_THROWS_AS(assemble("frobnicate x1\n", Variant::V0), AsmError);
}

TEST_CASE("labels resolve to pc-relative offsets") {
  const Program p = assemble(
      "top:\n"
      "  addi x1, x1, 1\n"
      "  blt x1, x2, top\n"
      "  j done\n"
      "  nop\n"
      "done:\n"
      "  halt\n",
      Variant::V0);
  REQUIRE(p.text.size() == 5);
  CHECK(p.text[1] == make_b(Op::Blt, 1, 2, -4));
  CHECK(p.text[2] == make_j(0, 8));
  CHECK(is_halt(p.text[4]));
  CHECK(p.labels.at("done") == 4);
}

TEST_CASE("zol setups take the loop end label as a word offset") {
  const Program p = assemble(
      "  dlpi 3, last\n"
      "  addi x1, x1, 1\n"
      "last:\n"
      "  addi x2, x2, 1\n"
      "  halt\n",
      Variant::V4);
  CHECK(p.text[0] == make_dlpi(3, 2));
}

TEST_CASE("data directives fill the data image") {
  const Program p = assemble(
      ".data\n"
      "a: .byte 1, -1\n"
      ".align 2\n"
      "b: .word 0x01020304\n"
      "c: .zero 3\n"
      ".text\n"
      "  la x5, b\n"
      "  halt\n",
      Variant::V0);
  CHECK(p.data_symbols.at("a") == 0);
  CHECK(p.data_symbols.at("b") == 4);
  CHECK(p.data_symbols.at("c") == 8);
  CHECK(p.data == std::vector<std::uint8_t>{1, 0xFF, 0, 0, 4, 3, 2, 1, 0, 0, 0});
}

TEST_CASE("abi and numeric register names are interchangeable") {
  const Program a = assemble("add a0, s4, t6\n", Variant::V0);
  const Program b = assemble("add x10, x20, x31\n", Variant::V0);
  CHECK(same_image(a, b));
}

TEST_CASE("disassembly annotates mac and round trips") {
  const Program p = assemble("mac\nadd2i x5, x6, 4, 64\nhalt\n", Variant::V4);
  const std::string text = disassemble(p);
  CHECK(text.find("mac ;x20 = x20 + x21*x22") != std::string::npos);
  const Program q = assemble(text, Variant::V4);
  CHECK(same_image(p, q));
  CHECK(disassemble(q) == text);
}

TEST_CASE("every bundled workload round trips through disassembly") {
  for (const auto& spec : bundled_workloads()) {
    const Program p = codegen(spec, seeded_data(spec));
    const std::string once = disassemble(p);
    const Program q = assemble(once, Variant::V4);
    CHECK(same_image(p, q));
    CHECK(q.live_out == p.live_out);
    CHECK(disassemble(q) == once);
  }
}

TEST_CASE("binary images") {
  const Program p = assemble(".data\nd: .byte 9, 8, 7\n.text\nstart:\n  nop\n  halt\n.entry start\n", Variant::V0);
  const auto img = write_image(p);
  REQUIRE(img.size() == kImageHeaderBytes + 8 + 3);
  CHECK(std::string(img.begin(), img.begin() + 4) == "MRVL");
  CHECK(img[4] == kImageVersion);
  CHECK(same_image(read_image(img), p));

  auto bad = img;
  bad[0] = 'X';
  CHECK_THROWS_AS(read_image(bad), ImageError);
  CHECK_THROWS_AS(read_image(std::span(img).first(10)), ImageError);
  CHECK_THROWS_AS(read_image(std::span(img).first(img.size() - 1)), ImageError);
}

}
