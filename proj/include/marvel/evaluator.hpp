#pragma once

// Variant matrix benchmarking: cycles, energy per inference and memory
// footprint for each (workload, variant) cell, verified against the oracle.

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "marvel/isa.hpp"
#include "marvel/simulator.hpp"
#include "marvel/workloads.hpp"

namespace marvel {

struct EnergyParams {
  /// Average power in watts for v0..v4.
  std::array<double, 5> power_w{0.830, 0.852, 0.850, 0.847, 0.849};
  double clock_hz = 100e6;

  double power(Variant v) const { return power_w[static_cast<std::size_t>(v)]; }
  /// Throws std::invalid_argument unless every power and the clock are > 0.
  void validate() const;
};

std::string energy_params_to_json(const EnergyParams& params);
/// Missing keys keep their defaults. Throws std::invalid_argument.
EnergyParams energy_params_from_json(std::string_view text);

/// E = P * (C / f). Throws std::invalid_argument when cycles == 0.
double energy(std::uint64_t cycles, Variant variant, const EnergyParams& params);

struct BenchRow {
  std::string workload;
  Variant variant = Variant::V0;
  std::uint64_t cycles = 0;
  std::uint64_t instructions = 0;
  double energy_j = 0.0;
  std::size_t pm_bytes = 0;
  std::size_t dm_bytes = 0;
  double speedup = 1.0;  // v0 cycles / cycles

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

/// A simulated output differed from the oracle.
class CorrectnessError : public std::runtime_error {
 public:
  CorrectnessError(std::string workload, Variant variant, const std::string& detail);
  const std::string& workload() const { return workload_; }
  Variant variant() const { return variant_; }

 private:
  std::string workload_;
  Variant variant_;
};

struct BenchOptions {
  std::uint32_t seed = kDefaultSeed;
  std::uint32_t input_index = 0;
  RunLimits limits{};
  bool parallel = true;
};

struct CellResult {
  Program program;  // retargeted program that was run
  RunResult run;
  GoldenResult output;
};

/// Retargets, runs and checks one cell. Throws CorrectnessError on mismatch.
CellResult run_cell(const KernelSpec& spec, const Program& baseline, const GoldenResult& golden, Variant variant,
                    const CycleModel& model, const RunLimits& limits = {});

/// Rows are ordered by workload, then variant. The v0 baseline is always
/// simulated for the speedup even when V0 is not requested.
std::vector<BenchRow> bench_matrix(const std::vector<KernelSpec>& workloads, const std::vector<Variant>& variants,
                                   const CycleModel& model, const EnergyParams& params,
                                   const BenchOptions& options = {});

inline constexpr std::string_view kBenchCsvHeader =
    "workload,variant,cycles,instructions,energy_j,pm_bytes,dm_bytes,speedup";

std::string bench_csv(const std::vector<BenchRow>& rows);
std::string bench_json(const std::vector<BenchRow>& rows, const CycleModel& model, const EnergyParams& params);

enum class ChartMetric { Cycles, Energy };

/// Grouped bar chart, one group per workload, bars normalized to the
/// workload's largest value and labelled with absolute numbers.
std::string bar_chart_svg(const std::vector<BenchRow>& rows, ChartMetric metric);

/// Writes bench.csv, bench.json, cycles.svg and energy.svg into `dir`.
void write_report(const std::vector<BenchRow>& rows, const std::filesystem::path& dir, const CycleModel& model,
                  const EnergyParams& params);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace marvel
