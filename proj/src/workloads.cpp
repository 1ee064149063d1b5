#include "marvel/workloads.hpp"

#include <algorithm>
#include <cstring>
#include <random>
#include <sstream>

#include "json.hpp"

#include "marvel/assembler.hpp"

namespace marvel {

std::string_view activation_name(Activation a) { return a == Activation::Relu ? "relu" : "none"; }

namespace {

constexpr std::int64_t kAccLimit = std::int64_t{1} << 31;
constexpr std::int64_t kWorstProduct = 128 * 128;

std::string layer_tag(std::size_t i) { return "layer " + std::to_string(i); }

std::size_t flat_out(const Layer& layer) {
  if (auto* c = std::get_if<Conv2d>(&layer))
    return static_cast<std::size_t>(c->filters) * c->out_h() * c->out_w();
  if (auto* d = std::get_if<Dense>(&layer)) return static_cast<std::size_t>(d->out_dim);
  return 1;
}

}  // namespace

void validate(const KernelSpec& spec) {
  if (spec.layers.empty()) throw SpecError("spec has no layers");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Layer& layer = spec.layers[i];
    const std::string at = layer_tag(i);
    if (auto* c = std::get_if<Conv2d>(&layer)) {
      if (c->in_h <= 0 || c->in_w <= 0 || c->in_c <= 0 || c->kernel <= 0 || c->stride <= 0 || c->filters <= 0)
        throw SpecError(at + ": conv2d dimensions must be positive");
      if (c->kernel > c->in_h || c->kernel > c->in_w) throw SpecError(at + ": kernel larger than input");
      if (c->requant_shift < 0 || c->requant_shift > 31) throw SpecError(at + ": requant_shift must be in 0..31");
      if (c->depthwise && c->filters != c->in_c) throw SpecError(at + ": depthwise conv needs filters == in_c");
      if (c->reduction() * kWorstProduct >= kAccLimit) throw SpecError(at + ": accumulator may overflow 32 bits");
      if (i > 0) {
        const auto* prev = std::get_if<Conv2d>(&spec.layers[i - 1]);
        if (!prev || prev->out_h() != c->in_h || prev->out_w() != c->in_w || prev->filters != c->in_c)
          throw SpecError(at + ": conv2d input does not match the previous layer's output");
      }
    } else if (auto* d = std::get_if<Dense>(&layer)) {
      if (d->in_dim <= 0 || d->out_dim <= 0) throw SpecError(at + ": dense dimensions must be positive");
      if (d->requant_shift < 0 || d->requant_shift > 31) throw SpecError(at + ": requant_shift must be in 0..31");
      if (d->in_dim * kWorstProduct >= kAccLimit) throw SpecError(at + ": accumulator may overflow 32 bits");
      if (i > 0) {
        if (std::holds_alternative<Argmax>(spec.layers[i - 1]))
          throw SpecError(at + ": dense cannot follow argmax");
        if (flat_out(spec.layers[i - 1]) != static_cast<std::size_t>(d->in_dim))
          throw SpecError(at + ": dense in_dim does not match the previous layer's output");
      }
    } else {
      const auto& a = std::get<Argmax>(layer);
      if (i == 0) throw SpecError(at + ": argmax needs a preceding layer");
      if (i + 1 != spec.layers.size()) throw SpecError(at + ": argmax must be the last layer");
      if (std::holds_alternative<Argmax>(spec.layers[i - 1])) throw SpecError(at + ": argmax cannot follow argmax");
      if (a.dim <= 0 || flat_out(spec.layers[i - 1]) != static_cast<std::size_t>(a.dim))
        throw SpecError(at + ": argmax dim does not match the previous layer's output");
    }
  }
}

std::size_t input_size(const KernelSpec& spec) {
  if (spec.layers.empty()) return 0;
  if (auto* c = std::get_if<Conv2d>(&spec.layers[0]))
    return static_cast<std::size_t>(c->in_c) * c->in_h * c->in_w;
  if (auto* d = std::get_if<Dense>(&spec.layers[0])) return static_cast<std::size_t>(d->in_dim);
  return 0;
}

std::vector<std::size_t> weight_sizes(const KernelSpec& spec) {
  std::vector<std::size_t> out;
  for (const Layer& layer : spec.layers) {
    if (auto* c = std::get_if<Conv2d>(&layer))
      out.push_back(static_cast<std::size_t>(c->filters) * c->reduction());
    else if (auto* d = std::get_if<Dense>(&layer))
      out.push_back(static_cast<std::size_t>(d->in_dim) * d->out_dim);
    else
      out.push_back(0);
  }
  return out;
}

std::vector<std::size_t> output_sizes(const KernelSpec& spec) {
  std::vector<std::size_t> out;
  for (const Layer& layer : spec.layers) out.push_back(flat_out(layer));
  return out;
}

std::vector<std::vector<std::uint32_t>> output_dims(const KernelSpec& spec) {
  std::vector<std::vector<std::uint32_t>> out;
  for (const Layer& layer : spec.layers) {
    if (auto* c = std::get_if<Conv2d>(&layer))
      out.push_back({static_cast<std::uint32_t>(c->filters), static_cast<std::uint32_t>(c->out_h()),
                     static_cast<std::uint32_t>(c->out_w())});
    else if (auto* d = std::get_if<Dense>(&layer))
      out.push_back({static_cast<std::uint32_t>(d->out_dim)});
    else
      out.push_back({1});
  }
  return out;
}

bool output_is_int8(const KernelSpec& spec, std::size_t layer) {
  if (std::holds_alternative<Argmax>(spec.layers.at(layer))) return false;
  return layer + 1 < spec.layers.size() && !std::holds_alternative<Argmax>(spec.layers[layer + 1]);
}

std::uint64_t mac_count(const KernelSpec& spec) {
  std::uint64_t total = 0;
  for (const Layer& layer : spec.layers) {
    if (auto* c = std::get_if<Conv2d>(&layer))
      total += std::uint64_t(c->filters) * c->out_h() * c->out_w() * c->reduction();
    else if (auto* d = std::get_if<Dense>(&layer))
      total += std::uint64_t(d->in_dim) * d->out_dim;
  }
  return total;
}

KernelSpec lenet5_star() {
  KernelSpec s;
  s.name = "lenet5_star";
  s.layers.push_back(Conv2d{28, 28, 1, 6, 2, 12, Activation::Relu, 9, false});
  s.layers.push_back(Conv2d{12, 12, 12, 6, 2, 32, Activation::Relu, 10, false});
  s.layers.push_back(Dense{512, 10, Activation::None, 0});
  s.layers.push_back(Argmax{10});
  return s;
}

KernelSpec conv_micro() {
  return KernelSpec{"conv_micro", {Conv2d{8, 8, 4, 3, 1, 8, Activation::Relu, 7, false}}};
}

KernelSpec depthwise_micro() {
  return KernelSpec{"depthwise_micro", {Conv2d{8, 8, 8, 3, 1, 8, Activation::Relu, 6, true}}};
}

KernelSpec dense_micro() {
  return KernelSpec{"dense_micro", {Dense{64, 16, Activation::None, 0}}};
}

std::vector<KernelSpec> microkernels() { return {conv_micro(), depthwise_micro(), dense_micro()}; }

std::vector<KernelSpec> bundled_workloads() {
  std::vector<KernelSpec> all{lenet5_star()};
  for (auto& k : microkernels()) all.push_back(std::move(k));
  return all;
}

std::optional<KernelSpec> find_workload(std::string_view name) {
  for (auto& s : bundled_workloads())
    if (s.name == name) return s;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// seeded data

namespace {

std::vector<std::int8_t> random_bytes(std::size_t n, std::uint32_t seed, std::uint32_t stream) {
  std::seed_seq seq{seed, stream};
  std::mt19937 rng(seq);
  std::vector<std::int8_t> out(n);
  for (auto& v : out) v = static_cast<std::int8_t>(rng() >> 24);
  return out;
}

}  // namespace

std::vector<std::vector<std::int8_t>> random_weights(const KernelSpec& spec, std::uint32_t seed) {
  std::vector<std::vector<std::int8_t>> out;
  const auto sizes = weight_sizes(spec);
  for (std::size_t i = 0; i < sizes.size(); ++i)
    out.push_back(random_bytes(sizes[i], seed, static_cast<std::uint32_t>(0x80000000u + i)));
  return out;
}

std::vector<std::int8_t> random_input(const KernelSpec& spec, std::uint32_t seed, std::uint32_t index) {
  return random_bytes(input_size(spec), seed, index);
}

WorkloadData seeded_data(const KernelSpec& spec, std::uint32_t seed, std::uint32_t index) {
  return WorkloadData{random_input(spec, seed, index), random_weights(spec, seed)};
}

// ---------------------------------------------------------------------------
// oracle

namespace {

std::int32_t requantize(std::int64_t acc, int shift, Activation act, bool int8) {
  std::int32_t v = static_cast<std::int32_t>(acc) >> shift;
  if (act == Activation::Relu) v = std::max(v, 0);
  if (int8) v = std::clamp(v, -128, 127);
  return v;
}

void check_data(const KernelSpec& spec, const WorkloadData& data) {
  validate(spec);
  if (data.input.size() != input_size(spec)) throw SpecError("input has the wrong number of elements");
  const auto sizes = weight_sizes(spec);
  if (data.weights.size() != sizes.size()) throw SpecError("weights needed for every layer");
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (data.weights[i].size() != sizes[i]) throw SpecError(layer_tag(i) + ": wrong number of weights");
}

}  // namespace

GoldenResult oracle(const KernelSpec& spec, const WorkloadData& data) {
  check_data(spec, data);
  GoldenResult result;
  const auto dims = output_dims(spec);
  std::vector<std::int32_t> act(data.input.begin(), data.input.end());
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const Layer& layer = spec.layers[li];
    const auto& w = data.weights[li];
    const bool int8 = output_is_int8(spec, li);
    std::vector<std::int32_t> out;
    if (auto* c = std::get_if<Conv2d>(&layer)) {
      const int oh = c->out_h(), ow = c->out_w(), k = c->kernel;
      const int group = c->depthwise ? 1 : c->in_c;
      for (int f = 0; f < c->filters; ++f)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            std::int64_t acc = 0;
            for (int g = 0; g < group; ++g) {
              const int ch = c->depthwise ? f : g;
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                  const int x = act[(ch * c->in_h + oy * c->stride + ky) * c->in_w + ox * c->stride + kx];
                  const int wt = w[((f * group + g) * k + ky) * k + kx];
                  acc += x * wt;
                }
            }
            out.push_back(requantize(acc, c->requant_shift, c->activation, int8));
          }
    } else if (auto* d = std::get_if<Dense>(&layer)) {
      for (int j = 0; j < d->out_dim; ++j) {
        std::int64_t acc = 0;
        for (int i = 0; i < d->in_dim; ++i) acc += act[i] * w[static_cast<std::size_t>(j) * d->in_dim + i];
        out.push_back(requantize(acc, d->requant_shift, d->activation, int8));
      }
    } else {
      const auto best = std::max_element(act.begin(), act.end());  // first maximum
      const auto index = static_cast<std::int32_t>(best - act.begin());
      out.push_back(index);
      result.class_index = index;
    }
    result.layers.push_back(Tensor{int8 ? DType::I8 : DType::I32, dims[li], out});
    act = std::move(out);
  }
  return result;
}

// ---------------------------------------------------------------------------
// code generation

namespace {

class Emitter {
 public:
  void op(const std::string& text) { text_ << "    " << text << '\n'; }
  void label(const std::string& name) { text_ << name << ":\n"; }
  void comment(const std::string& text) { text_ << "# " << text << '\n'; }

  // reg += imm, through t0 when the immediate does not fit
  void bump(const std::string& reg, std::int64_t imm) {
    if (imm == 0) return;
    if (imm >= -2048 && imm <= 2047) {
      op("addi " + reg + ", " + reg + ", " + std::to_string(imm));
    } else {
      op("li t0, " + std::to_string(imm));
      op("add " + reg + ", " + reg + ", t0");
    }
  }

  std::string fresh(const std::string& stem) { return ".L" + stem + std::to_string(counter_++); }

  std::string str() const { return text_.str(); }

 private:
  std::ostringstream text_;
  int counter_ = 0;
};

std::string n(std::int64_t v) { return std::to_string(v); }

// Accumulator in a0 -> stored value in a0.
void emit_requant(Emitter& e, int shift, Activation act, bool int8) {
  if (shift > 0) e.op("srai a0, a0, " + n(shift));
  if (act == Activation::Relu) {
    e.op("srai t3, a0, 31");
    e.op("xori t3, t3, -1");
    e.op("and a0, a0, t3");
  }
  if (int8) {
    const std::string hi = e.fresh("sat");
    e.op("li t3, 127");
    e.op("bge t3, a0, " + hi);
    e.op("mv a0, t3");
    e.label(hi);
    if (act != Activation::Relu) {
      const std::string lo = e.fresh("sat");
      e.op("li t3, -128");
      e.op("bge a0, t3, " + lo);
      e.op("mv a0, t3");
      e.label(lo);
    }
  }
}

// Reduction loop over one kernel row (or a dense row): a1/a2 walk input and
// weights, a0 accumulates.
void emit_reduction(Emitter& e, const std::string& tag, int trips) {
  e.op("li t4, 0");
  e.op("li t5, " + n(trips));
  e.label(tag);
  e.op("lb t1, 0(a1)");
  e.op("lb t2, 0(a2)");
  e.op("addi a1, a1, 1");
  e.op("addi a2, a2, 1");
  e.op("mul t3, t1, t2");
  e.op("add a0, a0, t3");
  e.op("addi t4, t4, 1");
  e.op("blt t4, t5, " + tag);
}

void emit_store(Emitter& e, bool int8) {
  e.op(int8 ? "sb a0, 0(a3)" : "sw a0, 0(a3)");
}

void emit_conv(Emitter& e, const Conv2d& c, std::size_t li, const std::string& in_sym, bool int8) {
  const std::string p = "L" + n(static_cast<std::int64_t>(li)) + "_";
  const int k = c.kernel, oh = c.out_h(), ow = c.out_w();
  const int group = c.depthwise ? 1 : c.in_c;
  const std::int64_t plane = std::int64_t{c.in_h} * c.in_w;
  e.comment("conv2d " + n(c.in_c) + "x" + n(c.in_h) + "x" + n(c.in_w) + " -> " + n(c.filters) + "x" + n(oh) + "x" +
            n(ow) + (c.depthwise ? " depthwise" : ""));
  e.op("la a6, w" + n(static_cast<std::int64_t>(li)));
  e.op("la a3, out" + n(static_cast<std::int64_t>(li)));
  if (c.depthwise) e.op("la a7, " + in_sym);
  e.op("li s11, 0");
  e.op("li t6, " + n(c.filters));
  e.label(p + "f");
  if (c.depthwise)
    e.op("mv a5, a7");
  else
    e.op("la a5, " + in_sym);
  e.op("li s9, 0");
  e.op("li s10, " + n(oh));
  e.label(p + "oy");
  e.op("mv a4, a5");
  e.op("li s7, 0");
  e.op("li s8, " + n(ow));
  e.label(p + "ox");
  e.op("mv a1, a4");
  e.op("mv a2, a6");
  e.op("li a0, 0");
  if (group > 1) {
    e.op("li s0, 0");
    e.op("li s1, " + n(group));
    e.label(p + "rc");
  }
  if (k > 1) {
    e.op("li s2, 0");
    e.op("li s3, " + n(k));
    e.label(p + "ry");
  }
  emit_reduction(e, p + "rx", k);
  if (k > 1) {
    e.op("addi s2, s2, 1");
    e.bump("a1", c.in_w - k);
    e.op("blt s2, s3, " + p + "ry");
  }
  if (group > 1) {
    // a1 has moved k rows when the ry loop exists, one element otherwise
    const std::int64_t walked = k > 1 ? std::int64_t{k} * c.in_w : 1;
    e.op("addi s0, s0, 1");
    e.bump("a1", plane - walked);
    e.op("blt s0, s1, " + p + "rc");
  }
  emit_requant(e, c.requant_shift, c.activation, int8);
  emit_store(e, int8);
  e.op("addi s7, s7, 1");
  e.op("addi a3, a3, " + n(int8 ? 1 : 4));
  e.bump("a4", c.stride);
  e.op("blt s7, s8, " + p + "ox");
  e.op("addi s9, s9, 1");
  e.bump("a5", std::int64_t{c.stride} * c.in_w);
  e.op("blt s9, s10, " + p + "oy");
  e.op("addi s11, s11, 1");
  e.bump("a6", std::int64_t{k} * k * group);
  if (c.depthwise) e.bump("a7", plane);
  e.op("blt s11, t6, " + p + "f");
}

void emit_dense(Emitter& e, const Dense& d, std::size_t li, const std::string& in_sym, bool int8) {
  const std::string p = "L" + n(static_cast<std::int64_t>(li)) + "_";
  e.comment("dense " + n(d.in_dim) + " -> " + n(d.out_dim));
  e.op("la a4, " + in_sym);
  e.op("la a2, w" + n(static_cast<std::int64_t>(li)));
  e.op("la a3, out" + n(static_cast<std::int64_t>(li)));
  e.op("li s7, 0");
  e.op("li s8, " + n(d.out_dim));
  e.label(p + "j");
  e.op("mv a1, a4");
  e.op("li a0, 0");
  emit_reduction(e, p + "k", d.in_dim);
  emit_requant(e, d.requant_shift, d.activation, int8);
  emit_store(e, int8);
  e.op("addi s7, s7, 1");
  e.op("addi a3, a3, " + n(int8 ? 1 : 4));
  e.op("blt s7, s8, " + p + "j");
}

void emit_argmax(Emitter& e, const Argmax& a, std::size_t li, const std::string& in_sym) {
  const std::string p = "L" + n(static_cast<std::int64_t>(li)) + "_";
  e.comment("argmax " + n(a.dim));
  e.op("la a1, " + in_sym);
  e.op("lw t1, 0(a1)");
  e.op("li a0, 0");
  if (a.dim > 1) {
    e.op("li s0, 1");
    e.op("li s1, " + n(a.dim));
    e.op("addi a1, a1, 4");
    e.label(p + "m");
    e.op("lw t2, 0(a1)");
    e.op("bge t1, t2, " + p + "keep");
    e.op("mv t1, t2");
    e.op("mv a0, s0");
    e.label(p + "keep");
    e.op("addi s0, s0, 1");
    e.op("addi a1, a1, 4");
    e.op("blt s0, s1, " + p + "m");
  }
  e.op("la a3, result");
  e.op("sw a0, 0(a3)");
}

void emit_bytes(std::ostringstream& os, const std::vector<std::int8_t>& bytes) {
  for (std::size_t i = 0; i < bytes.size(); i += 16) {
    os << "    .byte ";
    for (std::size_t j = i; j < std::min(bytes.size(), i + 16); ++j) os << (j > i ? ", " : "") << int{bytes[j]};
    os << '\n';
  }
}

}  // namespace

std::string codegen_assembly(const KernelSpec& spec, const WorkloadData& data) {
  check_data(spec, data);
  Emitter e;
  e.comment("workload " + spec.name);
  std::string in_sym = "input";
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const Layer& layer = spec.layers[li];
    const bool int8 = output_is_int8(spec, li);
    if (auto* c = std::get_if<Conv2d>(&layer))
      emit_conv(e, *c, li, in_sym, int8);
    else if (auto* d = std::get_if<Dense>(&layer))
      emit_dense(e, *d, li, in_sym, int8);
    else
      emit_argmax(e, std::get<Argmax>(layer), li, in_sym);
    in_sym = "out" + n(static_cast<std::int64_t>(li));
  }
  e.op("halt");

  std::ostringstream os;
  os << "    .text\n" << e.str() << "\n    .data\ninput:\n";
  emit_bytes(os, data.input);
  const auto sizes = output_sizes(spec);
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    if (!data.weights[li].empty()) {
      os << "w" << li << ":\n";
      emit_bytes(os, data.weights[li]);
    }
  }
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    if (std::holds_alternative<Argmax>(spec.layers[li])) continue;
    const bool int8 = output_is_int8(spec, li);
    if (!int8) os << "    .align 2\n";
    os << "out" << li << ":\n    .zero " << sizes[li] * (int8 ? 1 : 4) << '\n';
  }
  os << "    .align 2\nresult:\n    .word 0\n";
  return os.str();
}

Program codegen(const KernelSpec& spec, const WorkloadData& data) {
  return assemble(codegen_assembly(spec, data), Variant::V0);
}

GoldenResult read_outputs(const KernelSpec& spec, const Program& program, std::span<const std::uint8_t> memory) {
  validate(spec);
  GoldenResult result;
  const auto dims = output_dims(spec);
  const auto sizes = output_sizes(spec);
  auto symbol = [&](const std::string& name) {
    auto it = program.data_symbols.find(name);
    if (it == program.data_symbols.end()) throw SpecError("program has no data symbol '" + name + "'");
    return it->second;
  };
  auto word = [&](std::size_t addr) {
    if (addr + 4 > memory.size()) throw SpecError("output outside memory");
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | memory[addr + b];
    return static_cast<std::int32_t>(v);
  };
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    Tensor t;
    t.dims = dims[li];
    if (std::holds_alternative<Argmax>(spec.layers[li])) {
      t.dtype = DType::I32;
      t.values.push_back(word(symbol("result")));
      result.class_index = t.values.back();
    } else {
      const bool int8 = output_is_int8(spec, li);
      t.dtype = int8 ? DType::I8 : DType::I32;
      const std::size_t base = symbol("out" + std::to_string(li));
      for (std::size_t i = 0; i < sizes[li]; ++i) {
        if (int8) {
          if (base + i >= memory.size()) throw SpecError("output outside memory");
          t.values.push_back(static_cast<std::int8_t>(memory[base + i]));
        } else {
          t.values.push_back(word(base + 4 * i));
        }
      }
    }
    result.layers.push_back(std::move(t));
  }
  return result;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

using nlohmann::json;

Activation parse_activation(const json& j, const std::string& at) {
  const std::string s = j.value("activation", "none");
  if (s == "relu") return Activation::Relu;
  if (s == "none") return Activation::None;
  throw SpecError(at + ": unknown activation '" + s + "'");
}

}  // namespace

std::string spec_to_json(const KernelSpec& spec) {
  json layers = json::array();
  for (const Layer& layer : spec.layers) {
    if (auto* c = std::get_if<Conv2d>(&layer)) {
      layers.push_back({{"type", "conv2d"},
                        {"in_h", c->in_h},
                        {"in_w", c->in_w},
                        {"in_c", c->in_c},
                        {"kernel", c->kernel},
                        {"stride", c->stride},
                        {"filters", c->filters},
                        {"activation", activation_name(c->activation)},
                        {"requant_shift", c->requant_shift},
                        {"depthwise", c->depthwise}});
    } else if (auto* d = std::get_if<Dense>(&layer)) {
      layers.push_back({{"type", "dense"},
                        {"in_dim", d->in_dim},
                        {"out_dim", d->out_dim},
                        {"activation", activation_name(d->activation)},
                        {"requant_shift", d->requant_shift}});
    } else {
      layers.push_back({{"type", "argmax"}, {"dim", std::get<Argmax>(layer).dim}});
    }
  }
  return json{{"name", spec.name}, {"layers", layers}}.dump(2);
}

KernelSpec spec_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("invalid JSON: ") + e.what());
  }
  KernelSpec spec;
  try {
    spec.name = doc.value("name", "");
    for (std::size_t i = 0; i < doc.at("layers").size(); ++i) {
      const json& l = doc["layers"][i];
      const std::string at = layer_tag(i);
      const std::string type = l.at("type").get<std::string>();
      if (type == "conv2d") {
        Conv2d c;
        c.in_h = l.at("in_h").get<int>();
        c.in_w = l.at("in_w").get<int>();
        c.in_c = l.at("in_c").get<int>();
        c.kernel = l.at("kernel").get<int>();
        c.stride = l.value("stride", 1);
        c.filters = l.at("filters").get<int>();
        c.activation = parse_activation(l, at);
        c.requant_shift = l.value("requant_shift", 0);
        c.depthwise = l.value("depthwise", false);
        spec.layers.emplace_back(c);
      } else if (type == "dense") {
        Dense d;
        d.in_dim = l.at("in_dim").get<int>();
        d.out_dim = l.at("out_dim").get<int>();
        d.activation = parse_activation(l, at);
        d.requant_shift = l.value("requant_shift", 0);
        spec.layers.emplace_back(d);
      } else if (type == "argmax") {
        spec.layers.emplace_back(Argmax{l.at("dim").get<int>()});
      } else {
        throw SpecError(at + ": unknown layer type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::vector<std::uint8_t> write_tensor(const Tensor& t) {
  std::size_t count = 1;
  for (auto d : t.dims) count *= d;
  if (count != t.values.size()) throw TensorError("tensor dims do not match its element count");
  if (t.dims.size() > 255) throw TensorError("tensor rank too large");
  std::vector<std::uint8_t> out{'M', 'R', 'V', 'T', static_cast<std::uint8_t>(t.dtype),
                                static_cast<std::uint8_t>(t.dims.size()), 0, 0};
  auto put32 = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  };
  for (auto d : t.dims) put32(d);
  for (auto v : t.values) {
    if (t.dtype == DType::I8) {
      if (v < -128 || v > 127) throw TensorError("int8 tensor element out of range");
      out.push_back(static_cast<std::uint8_t>(v));
    } else {
      put32(static_cast<std::uint32_t>(v));
    }
  }
  return out;
}

Tensor read_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "MRVT", 4) != 0) throw TensorError("not a tensor blob");
  Tensor t;
  if (bytes[4] != 1 && bytes[4] != 4) throw TensorError("unknown dtype");
  t.dtype = static_cast<DType>(bytes[4]);
  const std::size_t rank = bytes[5];
  std::size_t pos = 8;
  auto get32 = [&]() {
    if (pos + 4 > bytes.size()) throw TensorError("truncated tensor blob");
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | bytes[pos + b];
    pos += 4;
    return v;
  };
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.dims.push_back(get32());
    count *= t.dims.back();
  }
  const std::size_t width = t.dtype == DType::I8 ? 1 : 4;
  if (bytes.size() - pos != count * width) throw TensorError("tensor payload size mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    if (width == 1)
      t.values.push_back(static_cast<std::int8_t>(bytes[pos++]));
    else
      t.values.push_back(static_cast<std::int32_t>(get32()));
  }
  return t;
}

}  // namespace marvel
