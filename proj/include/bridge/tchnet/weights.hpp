#pragma once

#include "bridge/tchnet/config.hpp"
#include "bridge/tensor_io.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bridge::tchnet {

struct TensorSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
};

// The full named-tensor inventory of the model under the frozen
// conventions. Names ending in running_mean/running_var are batch-norm
// statistics, stored but not counted as parameters.
std::vector<TensorSpec> model_inventory(const ModelConfig& cfg);

// Allocates every inventory tensor and fills trainable tensors with
// uniform(-0.05, 0.05) draws from a seeded splitmix64 stream; running means
// are zero, running variances one.
NamedTensors init_weights(const ModelConfig& cfg, std::uint64_t seed);

struct ParameterCount {
  std::size_t total = 0;
  // component -> parameter count; components are t_branch, c_branch,
  // h_branch, cbgaf, head, decoder.
  std::map<std::string, std::size_t> by_component;
};

ParameterCount count_parameters(const ModelConfig& cfg);

std::string parameter_report_json(const ParameterCount& count,
                                  std::size_t reference_total);

}  // namespace bridge::tchnet
