#include "marvel/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "marvel/assembler.hpp"
#include "marvel/evaluator.hpp"
#include "marvel/profiler.hpp"
#include "marvel/rewriter.hpp"
#include "marvel/serialize.hpp"
#include "marvel/simulator.hpp"
#include "marvel/workloads.hpp"

namespace marvel {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string s = read_text(path);
  return {s.begin(), s.end()};
}

void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

struct Options {
  std::string variant = "v0";
  std::string cycle_model_path;
  std::string energy_path;
  std::string out;
  std::uint32_t seed = kDefaultSeed;
  std::uint32_t index = 0;
  std::uint64_t budget = RunLimits{}.max_steps;

  Variant variant_id() const { return *parse_variant(variant); }

  CycleModel model() const {
    if (cycle_model_path.empty()) return {};
    return cycle_model_from_json(read_text(cycle_model_path));
  }

  EnergyParams energy_params() const {
    if (energy_path.empty()) return {};
    return energy_params_from_json(read_text(energy_path));
  }

  RunLimits limits() const {
    RunLimits l;
    l.max_steps = budget;
    return l;
  }
};

KernelSpec load_spec(const std::string& what) {
  if (fs::is_regular_file(what)) return spec_from_json(read_text(what));
  if (auto s = find_workload(what)) return *s;
  throw UsageError("no such spec file or bundled workload: " + what);
}

// A program argument is an image (.bin), a spec (.json), an assembly file, or
// the name of a bundled workload.
Program load_program(const std::string& what, Variant variant, const Options& o) {
  const fs::path path(what);
  if (fs::is_regular_file(path)) {
    if (path.extension() == ".bin") return read_image(read_bytes(path));
    if (path.extension() == ".json") {
      const KernelSpec spec = spec_from_json(read_text(path));
      return codegen(spec, seeded_data(spec, o.seed, o.index));
    }
    return assemble(read_text(path), variant);
  }
  if (auto spec = find_workload(what)) return codegen(*spec, seeded_data(*spec, o.seed, o.index));
  throw UsageError("no such file or bundled workload: " + what);
}

class NdjsonTrace final : public TraceSink {
 public:
  explicit NdjsonTrace(std::ostream& os) : os_(os) {}
  void on_retire(const TraceEvent& e) override {
    os_ << "{\"pc\":" << e.pc << ",\"mnemonic\":\"" << mnemonic(e.inst.op) << "\",\"cycle\":" << e.cycle << "}\n";
  }

 private:
  std::ostream& os_;
};

std::string variants_help() {
  std::ostringstream os;
  os << "Variants:\n";
  for (Variant v : kAllVariants) os << "  " << variant_name(v) << "  " << variant_description(v) << '\n';
  os << "\nExit codes: 0 success, 1 output differs from the reference, 2 usage or parse error, 3 simulation trap.";
  return os.str();
}

void add_variant(CLI::App* cmd, Options& o, const char* help = "Target processor variant (v0..v4)") {
  cmd->add_option("--variant", o.variant, help)->check(CLI::IsMember({"v0", "v1", "v2", "v3", "v4"}));
}

void add_model(CLI::App* cmd, Options& o) {
  cmd->add_option("--cycle-model", o.cycle_model_path, "Cycle model JSON file");
}

void add_seed(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Seed for generated weights and inputs");
  cmd->add_option("--index", o.index, "Which seeded input to use");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Custom RISC-V ISA extension toolkit: assemble, simulate, profile, rewrite and benchmark", "marvel"};
  app.footer(variants_help());
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  // asm
  std::string input, output, stats_path, trace_path;
  auto* c_asm = app.add_subcommand("asm", "Assemble a source file into a binary image");
  c_asm->add_option("input", input, "Assembly source")->required();
  c_asm->add_option("-o,--out", output, "Output image (default: input with .bin)");
  add_variant(c_asm, o, "Variant whose extensions may be used (default v4)");
  c_asm->callback([&] {
    action = [&] {
      const Variant v = c_asm->count("--variant") ? o.variant_id() : Variant::V4;
      const Program p = assemble(read_text(input), v);
      const fs::path dst = output.empty() ? fs::path(input).replace_extension(".bin") : fs::path(output);
      write_file(dst, write_image(p));
      out << "wrote " << dst.string() << " (" << p.text.size() << " instructions, " << p.data.size()
          << " data bytes)\n";
      return kExitOk;
    };
  });

  // disasm
  auto* c_dis = app.add_subcommand("disasm", "Disassemble a binary image");
  c_dis->add_option("input", input, "Binary image")->required();
  c_dis->add_option("-o,--out", output, "Output file (default: stdout)");
  c_dis->callback([&] {
    action = [&] {
      const std::string text = disassemble(read_image(read_bytes(input)));
      if (output.empty())
        out << text;
      else
        write_file(output, text);
      return kExitOk;
    };
  });

  // gen
  std::string workload;
  auto* c_gen = app.add_subcommand("gen", "Generate baseline assembly, spec, input and golden outputs for a workload");
  c_gen->add_option("workload", workload, "Bundled workload name or spec JSON file")->required();
  std::string gen_dir = "gen";
  c_gen->add_option("--out", gen_dir, "Output directory")->capture_default_str();
  add_seed(c_gen, o);
  c_gen->callback([&] {
    action = [&] {
      const KernelSpec spec = load_spec(workload);
      const WorkloadData data = seeded_data(spec, o.seed, o.index);
      const GoldenResult golden = oracle(spec, data);
      const fs::path dir(gen_dir);
      write_file(dir / (spec.name + ".s"), codegen_assembly(spec, data));
      write_file(dir / (spec.name + ".spec.json"), spec_to_json(spec) + "\n");
      std::vector<std::uint32_t> in_dims;
      if (auto* c = std::get_if<Conv2d>(&spec.layers[0]))
        in_dims = {static_cast<std::uint32_t>(c->in_c), static_cast<std::uint32_t>(c->in_h),
                   static_cast<std::uint32_t>(c->in_w)};
      else
        in_dims = {static_cast<std::uint32_t>(data.input.size())};
      write_file(dir / "input.mrvt",
                 write_tensor(Tensor{DType::I8, in_dims, std::vector<std::int32_t>(data.input.begin(), data.input.end())}));
      for (std::size_t i = 0; i < golden.layers.size(); ++i)
        write_file(dir / ("golden" + std::to_string(i) + ".mrvt"), write_tensor(golden.layers[i]));
      out << "generated " << spec.name << " into " << dir.string() << '\n';
      if (golden.class_index) out << "class " << *golden.class_index << '\n';
      return kExitOk;
    };
  });

  // run
  std::string check;
  auto* c_run = app.add_subcommand("run", "Simulate a program");
  c_run->add_option("program", input, "Assembly, image, spec JSON or bundled workload")->required();
  add_variant(c_run, o);
  add_model(c_run, o);
  add_seed(c_run, o);
  c_run->add_option("--budget", o.budget, "Maximum instructions to execute")->check(CLI::PositiveNumber);
  c_run->add_option("--trace", trace_path, "Write retired instructions as NDJSON");
  c_run->add_option("--out", o.out, "Write the run summary JSON here");
  c_run->add_option("--check", check, "Compare outputs with the reference for this workload or spec");
  c_run->callback([&] {
    action = [&] {
      const Variant v = o.variant_id();
      const CycleModel model = o.model();
      Program p = load_program(input, v, o);
      if (!fs::is_regular_file(input) || fs::path(input).extension() == ".json") p = retarget(p, v, model).program;
      std::ofstream trace_file;
      std::unique_ptr<NdjsonTrace> sink;
      if (!trace_path.empty()) {
        trace_file.open(trace_path, std::ios::binary);
        if (!trace_file) throw std::runtime_error("cannot write " + trace_path);
        sink = std::make_unique<NdjsonTrace>(trace_file);
      }
      const RunResult r = run(p, v, model, o.limits(), sink.get());
      const std::string summary = run_summary_json(r, v, model) + "\n";
      if (o.out.empty())
        out << summary;
      else
        write_file(o.out, summary);
      if (!check.empty()) {
        const KernelSpec spec = load_spec(check);
        const GoldenResult want = oracle(spec, seeded_data(spec, o.seed, o.index));
        if (read_outputs(spec, p, r.state.mem) != want) {
          err << "output differs from the reference for " << spec.name << '\n';
          return kExitCorrectness;
        }
        out << "output matches the reference for " << spec.name << '\n';
      }
      return kExitOk;
    };
  });

  // profile
  bool static_mode = false;
  auto* c_prof = app.add_subcommand("profile", "Count fusible patterns and choose the add2i immediate split");
  c_prof->add_option("program", input, "Assembly, image, spec JSON or bundled workload")->required();
  add_variant(c_prof, o);
  add_model(c_prof, o);
  add_seed(c_prof, o);
  c_prof->add_option("--budget", o.budget, "Maximum instructions to execute")->check(CLI::PositiveNumber);
  std::string profile_dir = "profile";
  c_prof->add_option("--out", profile_dir, "Report directory")->capture_default_str();
  c_prof->add_flag("--static", static_mode, "Match patterns per basic block, scaled by execution counts");
  c_prof->callback([&] {
    action = [&] {
      const Variant v = o.variant_id();
      const CycleModel model = o.model();
      const Program p = load_program(input, v, o);
      PatternReport report;
      ImmediateHistogram hist;
      if (static_mode) {
        const RunResult r = run(p, v, model, o.limits());
        report = count_patterns_static(p, r.state.pc_hist, r.state.taken_hist, model, &hist);
      } else {
        PatternCounter counter;
        RunLimits limits = o.limits();
        limits.histogram = false;
        run(p, v, model, limits, &counter);
        report = counter.report();
        hist = counter.histogram();
      }
      const fs::path dir(profile_dir);
      write_file(dir / "patterns.json", pattern_report_json(report) + "\n");
      write_file(dir / "patterns.csv", pattern_report_csv(report));
      write_file(dir / "histogram.csv", histogram_csv(hist));
      nlohmann::ordered_json split;
      split["coverage_5_10"] = coverage(hist, 5, 10);
      if (hist.empty()) {
        split["selected"] = nullptr;
      } else {
        const SplitChoice best = select_split(hist);
        split["selected"] = {{"b1", best.b1}, {"b2", best.b2}, {"coverage", best.coverage}};
      }
      write_file(dir / "split.json", split.dump(2) + "\n");
      out << pattern_report_csv(report);
      out << "coverage(5,10) = " << format_double(coverage(hist, 5, 10)) << '\n';
      if (!hist.empty()) {
        const SplitChoice best = select_split(hist);
        out << "selected split = (" << best.b1 << "," << best.b2 << ") coverage " << format_double(best.coverage)
            << '\n';
      }
      return kExitOk;
    };
  });

  // rewrite
  auto* c_rw = app.add_subcommand("rewrite", "Retarget baseline code onto a variant's extensions");
  c_rw->add_option("program", input, "Assembly, image, spec JSON or bundled workload")->required();
  add_variant(c_rw, o);
  add_model(c_rw, o);
  add_seed(c_rw, o);
  c_rw->add_option("-o,--out", output, "Rewritten assembly (default: stdout)");
  c_rw->add_option("--stats", stats_path, "Write rewrite statistics JSON here (default: stderr)");
  c_rw->callback([&] {
    action = [&] {
      const Variant v = o.variant_id();
      const Program p = load_program(input, Variant::V0, o);
      const RetargetResult r = retarget(p, v, o.model());
      const std::string text = disassemble(r.program);
      if (output.empty())
        out << text;
      else
        write_file(output, text);
      const std::string stats = rewrite_stats_json(r.stats) + "\n";
      if (stats_path.empty())
        err << stats;
      else
        write_file(stats_path, stats);
      return kExitOk;
    };
  });

  // bench
  std::vector<std::string> bench_workloads;
  std::vector<std::string> bench_variants;
  bool serial = false;
  auto* c_bench = app.add_subcommand("bench", "Run the variant matrix and write the report");
  c_bench->add_option("workloads", bench_workloads, "Bundled workload names or spec JSON files (default: all bundled)");
  c_bench->add_option("--variants", bench_variants, "Variants to run (default: v0..v4)")
      ->delimiter(',')
      ->check(CLI::IsMember({"v0", "v1", "v2", "v3", "v4"}));
  add_model(c_bench, o);
  c_bench->add_option("--energy-params", o.energy_path, "Energy parameters JSON file");
  c_bench->add_option("--seed", o.seed, "Seed for generated weights and inputs");
  c_bench->add_option("--index", o.index, "Which seeded input to use");
  c_bench->add_option("--budget", o.budget, "Maximum instructions per run")->check(CLI::PositiveNumber);
  std::string bench_dir = "report";
  c_bench->add_option("--out", bench_dir, "Report directory")->capture_default_str();
  c_bench->add_flag("--serial", serial, "Run cells one at a time");
  c_bench->callback([&] {
    action = [&] {
      std::vector<KernelSpec> specs;
      if (bench_workloads.empty()) specs = bundled_workloads();
      for (const auto& w : bench_workloads) specs.push_back(load_spec(w));
      std::vector<Variant> variants(kAllVariants.begin(), kAllVariants.end());
      if (!bench_variants.empty()) {
        variants.clear();
        for (const auto& v : bench_variants) variants.push_back(*parse_variant(v));
      }
      const CycleModel model = o.model();
      const EnergyParams params = o.energy_params();
      BenchOptions opts;
      opts.seed = o.seed;
      opts.input_index = o.index;
      opts.limits = o.limits();
      opts.parallel = !serial;
      const auto rows = bench_matrix(specs, variants, model, params, opts);
      write_report(rows, bench_dir, model, params);
      out << bench_csv(rows);
      return kExitOk;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const CorrectnessError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCorrectness;
  } catch (const Trap& e) {
    err << "trap: " << trap_kind_name(e.kind()) << " at pc 0x" << std::hex << e.pc() << std::dec << ": " << e.what()
        << '\n';
    return kExitTrap;
  } catch (const SimError& e) {
    err << "simulation error: " << e.what() << '\n';
    return kExitTrap;
  } catch (const std::exception& e) {
    // assembler, image, spec, config and file errors
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace marvel
