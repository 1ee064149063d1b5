#pragma once

// Quantized CNN kernel specs, a baseline code generator and the integer
// reference inference used as the golden model.
//
// Tensor layouts: activations are channel-major (C, H, W); conv weights are
// (filters, C, k, k), depthwise weights (C, k, k); dense weights are
// (out_dim, in_dim). Flattening for dense layers follows the same order.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "marvel/program.hpp"

namespace marvel {

enum class Activation { None, Relu };

std::string_view activation_name(Activation a);

struct Conv2d {
  int in_h = 0;
  int in_w = 0;
  int in_c = 0;
  int kernel = 0;
  int stride = 1;
  int filters = 0;
  Activation activation = Activation::None;
  int requant_shift = 0;
  /// One k x k filter per input channel (requires filters == in_c).
  bool depthwise = false;

  int out_h() const { return (in_h - kernel) / stride + 1; }
  int out_w() const { return (in_w - kernel) / stride + 1; }
  int reduction() const { return kernel * kernel * (depthwise ? 1 : in_c); }

  friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

struct Dense {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::None;
  int requant_shift = 0;

  friend bool operator==(const Dense&, const Dense&) = default;
};

/// Index of the largest element; ties go to the lowest index.
struct Argmax {
  int dim = 0;

  friend bool operator==(const Argmax&, const Argmax&) = default;
};

using Layer = std::variant<Conv2d, Dense, Argmax>;

/// Layers run in order. A conv or dense output is int8 (shift, activation,
/// saturation) when another conv or dense layer consumes it, and int32
/// (shift, activation) otherwise.
struct KernelSpec {
  std::string name;
  std::vector<Layer> layers;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws SpecError on inconsistent dimensions or accumulator overflow risk.
void validate(const KernelSpec& spec);

std::size_t input_size(const KernelSpec& spec);
/// Weight element count per layer (0 for argmax).
std::vector<std::size_t> weight_sizes(const KernelSpec& spec);
/// Flattened output element count per layer (1 for argmax).
std::vector<std::size_t> output_sizes(const KernelSpec& spec);
std::vector<std::vector<std::uint32_t>> output_dims(const KernelSpec& spec);
/// True when layer i's output is stored as int8.
bool output_is_int8(const KernelSpec& spec, std::size_t layer);
std::uint64_t mac_count(const KernelSpec& spec);

KernelSpec lenet5_star();
KernelSpec conv_micro();
KernelSpec depthwise_micro();
KernelSpec dense_micro();
std::vector<KernelSpec> microkernels();
/// lenet5_star followed by the microkernels.
std::vector<KernelSpec> bundled_workloads();
std::optional<KernelSpec> find_workload(std::string_view name);

inline constexpr std::uint32_t kDefaultSeed = 0x4D52564C;

struct WorkloadData {
  std::vector<std::int8_t> input;
  std::vector<std::vector<std::int8_t>> weights;  // one entry per layer
};

std::vector<std::vector<std::int8_t>> random_weights(const KernelSpec& spec, std::uint32_t seed = kDefaultSeed);
/// Input number `index` of the stream selected by `seed`.
std::vector<std::int8_t> random_input(const KernelSpec& spec, std::uint32_t seed = kDefaultSeed,
                                      std::uint32_t index = 0);
WorkloadData seeded_data(const KernelSpec& spec, std::uint32_t seed = kDefaultSeed, std::uint32_t index = 0);

enum class DType : std::uint8_t { I8 = 1, I32 = 4 };

struct Tensor {
  DType dtype = DType::I32;
  std::vector<std::uint32_t> dims;
  std::vector<std::int32_t> values;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct GoldenResult {
  std::vector<Tensor> layers;
  std::optional<std::int32_t> class_index;

  friend bool operator==(const GoldenResult&, const GoldenResult&) = default;
};

/// Plain integer inference; no use of the simulator.
GoldenResult oracle(const KernelSpec& spec, const WorkloadData& data);

/// Baseline (v0) assembly. Data symbols: input, w<i>, out<i>, result.
std::string codegen_assembly(const KernelSpec& spec, const WorkloadData& data);
Program codegen(const KernelSpec& spec, const WorkloadData& data);

/// Reads per-layer outputs back from a final data-memory image.
GoldenResult read_outputs(const KernelSpec& spec, const Program& program, std::span<const std::uint8_t> memory);

// JSON documents for specs; see docs/formats.md.
std::string spec_to_json(const KernelSpec& spec);
KernelSpec spec_from_json(std::string_view text);

// Tensor blobs: "MRVT", u8 dtype (1 or 4), u8 rank, u16 zero, u32 dims[rank],
// then little-endian elements.
class TensorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> write_tensor(const Tensor& tensor);
Tensor read_tensor(std::span<const std::uint8_t> bytes);

}  // namespace marvel
