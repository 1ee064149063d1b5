#include "marvel/evaluator.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "json.hpp"

#include "marvel/rewriter.hpp"
#include "marvel/serialize.hpp"

namespace marvel {

using ordered = nlohmann::ordered_json;

void EnergyParams::validate() const {
  for (double p : power_w)
    if (!(p > 0.0)) throw std::invalid_argument("power values must be > 0");
  if (!(clock_hz > 0.0)) throw std::invalid_argument("clock_hz must be > 0");
}

std::string energy_params_to_json(const EnergyParams& params) {
  ordered j;
  ordered power = ordered::object();
  for (Variant v : kAllVariants) power[std::string(variant_name(v))] = params.power(v);
  j["power_w"] = power;
  j["clock_hz"] = params.clock_hz;
  return j.dump(2);
}

EnergyParams energy_params_from_json(std::string_view text) {
  EnergyParams p;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("energy params must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "clock_hz") {
        p.clock_hz = value.get<double>();
      } else if (key == "power_w") {
        for (const auto& [name, w] : value.items()) {
          auto v = parse_variant(name);
          if (!v) throw std::invalid_argument("unknown variant '" + name + "' in power_w");
          p.power_w[static_cast<std::size_t>(*v)] = w.get<double>();
        }
      } else {
        throw std::invalid_argument("unknown energy params key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed energy params: ") + e.what());
  }
  p.validate();
  return p;
}

double energy(std::uint64_t cycles, Variant variant, const EnergyParams& params) {
  if (cycles == 0) throw std::invalid_argument("energy needs a positive cycle count");
  params.validate();
  return params.power(variant) * (static_cast<double>(cycles) / params.clock_hz);
}

CorrectnessError::CorrectnessError(std::string workload, Variant variant, const std::string& detail)
    : std::runtime_error(workload + " on " + std::string(variant_name(variant)) + ": output differs from oracle" +
                         (detail.empty() ? "" : " (" + detail + ")")),
      workload_(std::move(workload)),
      variant_(variant) {}

namespace {

std::string first_difference(const GoldenResult& got, const GoldenResult& want) {
  for (std::size_t l = 0; l < std::min(got.layers.size(), want.layers.size()); ++l) {
    const auto& a = got.layers[l].values;
    const auto& b = want.layers[l].values;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
      if (a[i] != b[i])
        return "layer " + std::to_string(l) + " element " + std::to_string(i) + ": got " + std::to_string(a[i]) +
               ", expected " + std::to_string(b[i]);
  }
  return "";
}

}  // namespace

CellResult run_cell(const KernelSpec& spec, const Program& baseline, const GoldenResult& golden, Variant variant,
                    const CycleModel& model, const RunLimits& limits) {
  CellResult cell;
  cell.program = retarget(baseline, variant, model).program;
  cell.run = run(cell.program, variant, model, limits);
  cell.output = read_outputs(spec, cell.program, cell.run.state.mem);
  if (cell.output != golden) throw CorrectnessError(spec.name, variant, first_difference(cell.output, golden));
  return cell;
}

std::vector<BenchRow> bench_matrix(const std::vector<KernelSpec>& workloads, const std::vector<Variant>& variants,
                                   const CycleModel& model, const EnergyParams& params, const BenchOptions& options) {
  model.validate();
  params.validate();
  RunLimits limits = options.limits;
  limits.histogram = false;

  struct Prepared {
    Program baseline;
    GoldenResult golden;
  };
  std::vector<Prepared> prepared;
  for (const auto& spec : workloads) {
    const WorkloadData data = seeded_data(spec, options.seed, options.input_index);
    prepared.push_back({codegen(spec, data), oracle(spec, data)});
  }

  std::vector<Variant> cells_variants{Variant::V0};
  for (Variant v : variants)
    if (std::find(cells_variants.begin(), cells_variants.end(), v) == cells_variants.end()) cells_variants.push_back(v);

  struct Cell {
    std::size_t workload;
    Variant variant;
    std::uint64_t cycles = 0;
    std::uint64_t retired = 0;
    std::size_t pm = 0;
    std::size_t dm = 0;
  };
  std::vector<Cell> cells;
  for (std::size_t w = 0; w < workloads.size(); ++w)
    for (Variant v : cells_variants) cells.push_back({w, v});

  auto compute = [&](Cell& c) {
    const CellResult r =
        run_cell(workloads[c.workload], prepared[c.workload].baseline, prepared[c.workload].golden, c.variant, model,
                 limits);
    c.cycles = r.run.cycles;
    c.retired = r.run.retired;
    c.pm = r.program.pm_bytes();
    c.dm = r.program.dm_bytes();
  };
  if (options.parallel) {
    std::vector<std::future<void>> jobs;
    for (Cell& c : cells) jobs.push_back(std::async(std::launch::async, compute, std::ref(c)));
    for (auto& j : jobs) j.wait();
    for (auto& j : jobs) j.get();  // rethrows the first failure in cell order
  } else {
    for (Cell& c : cells) compute(c);
  }

  std::vector<BenchRow> rows;
  for (std::size_t w = 0; w < workloads.size(); ++w) {
    const Cell* base = nullptr;
    for (const Cell& c : cells)
      if (c.workload == w && c.variant == Variant::V0) base = &c;
    for (Variant v : variants) {
      for (const Cell& c : cells) {
        if (c.workload != w || c.variant != v) continue;
        BenchRow row;
        row.workload = workloads[w].name;
        row.variant = v;
        row.cycles = c.cycles;
        row.instructions = c.retired;
        row.energy_j = energy(c.cycles, v, params);
        row.pm_bytes = c.pm;
        row.dm_bytes = c.dm;
        row.speedup = static_cast<double>(base->cycles) / static_cast<double>(c.cycles);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << kBenchCsvHeader << '\n';
  for (const auto& r : rows)
    os << r.workload << ',' << variant_name(r.variant) << ',' << r.cycles << ',' << r.instructions << ','
       << format_double(r.energy_j) << ',' << r.pm_bytes << ',' << r.dm_bytes << ',' << format_double(r.speedup)
       << '\n';
  return os.str();
}

std::string bench_json(const std::vector<BenchRow>& rows, const CycleModel& model, const EnergyParams& params) {
  ordered j;
  j["cycle_model"] = ordered::parse(cycle_model_to_json(model));
  j["energy_params"] = ordered::parse(energy_params_to_json(params));
  ordered list = ordered::array();
  for (const auto& r : rows) {
    ordered e;
    e["workload"] = r.workload;
    e["variant"] = variant_name(r.variant);
    e["cycles"] = r.cycles;
    e["instructions"] = r.instructions;
    e["energy_j"] = r.energy_j;
    e["pm_bytes"] = r.pm_bytes;
    e["dm_bytes"] = r.dm_bytes;
    e["speedup"] = r.speedup;
    list.push_back(e);
  }
  j["rows"] = list;
  return j.dump(2) + "\n";
}

namespace {

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string short_number(double v) {
  char buf[32];
  if (v >= 1e6)
    std::snprintf(buf, sizeof buf, "%.2fM", v / 1e6);
  else if (v >= 1e3)
    std::snprintf(buf, sizeof buf, "%.1fk", v / 1e3);
  else if (v >= 1.0 || v == 0.0)
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else if (v >= 1e-3)
    std::snprintf(buf, sizeof buf, "%.3gm", v * 1e3);
  else
    std::snprintf(buf, sizeof buf, "%.3gu", v * 1e6);
  return buf;
}

}  // namespace

std::string bar_chart_svg(const std::vector<BenchRow>& rows, ChartMetric metric) {
  const bool cycles = metric == ChartMetric::Cycles;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const BenchRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.workload)) order.push_back(r.workload);
    groups[r.workload].push_back(&r);
  }
  const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f"};
  constexpr int bar = 22, gap = 30, top = 50, plot_h = 220, left = 40;
  int width = left;
  for (const auto& name : order) width += static_cast<int>(groups[name].size()) * bar + gap;
  width = std::max(width + 20, 360);
  const int height = top + plot_h + 70;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">"
     << (cycles ? "Cycles per inference" : "Energy per inference (J)") << " by variant, relative to each workload's maximum</text>\n";
  for (std::size_t v = 0; v < kAllVariants.size(); ++v)
    os << "<rect x=\"" << left + 70 * v << "\" y=\"28\" width=\"10\" height=\"10\" fill=\"" << colors[v]
       << "\"/><text x=\"" << left + 70 * v + 14 << "\" y=\"37\">" << variant_name(kAllVariants[v]) << "</text>\n";
  const int base_y = top + plot_h;
  os << "<line x1=\"" << left - 5 << "\" y1=\"" << base_y << "\" x2=\"" << width - 10 << "\" y2=\"" << base_y
     << "\" stroke=\"black\"/>\n";
  int x = left;
  for (const auto& name : order) {
    const auto& g = groups[name];
    double peak = 0.0;
    for (auto* r : g) peak = std::max(peak, cycles ? static_cast<double>(r->cycles) : r->energy_j);
    const int gx = x;
    for (auto* r : g) {
      const double value = cycles ? static_cast<double>(r->cycles) : r->energy_j;
      const int h = peak > 0 ? static_cast<int>(value / peak * (plot_h - 20) + 0.5) : 0;
      const auto vi = static_cast<std::size_t>(r->variant);
      os << "<rect x=\"" << x << "\" y=\"" << base_y - h << "\" width=\"" << bar - 2 << "\" height=\"" << h
         << "\" fill=\"" << colors[vi] << "\"><title>" << escape_xml(name) << ' ' << variant_name(r->variant) << ": "
         << (cycles ? std::to_string(r->cycles) : format_double(r->energy_j)) << "</title></rect>\n";
      os << "<text x=\"" << x + bar / 2 - 1 << "\" y=\"" << base_y - h - 4
         << "\" text-anchor=\"middle\" font-size=\"8\">" << short_number(value) << "</text>\n";
      x += bar;
    }
    os << "<text x=\"" << (gx + x) / 2 << "\" y=\"" << base_y + 16 << "\" text-anchor=\"middle\">" << escape_xml(name)
       << "</text>\n";
    x += gap;
  }
  os << "</svg>\n";
  return os.str();
}

void write_report(const std::vector<BenchRow>& rows, const std::filesystem::path& dir, const CycleModel& model,
                  const EnergyParams& params) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  };
  put("bench.csv", bench_csv(rows));
  put("bench.json", bench_json(rows, model, params));
  put("cycles.svg", bar_chart_svg(rows, ChartMetric::Cycles));
  put("energy.svg", bar_chart_svg(rows, ChartMetric::Energy));
}

}  // namespace marvel
