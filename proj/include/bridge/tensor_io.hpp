#pragma once

#include "bridge/windows.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bridge {

// "BRIDGE-TENSOR v1": magic line, u32 rank, u32 dims, little-endian float32
// payload.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t elem_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return n;
  }
};

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// WindowSet container: the feature tensor plus sidecar arrays for labels,
// contexts, and origins, serialized as one BRIDGE-TENSOR per component with
// a JSON manifest written by the caller.
void save_windowset(const std::string& dir, const WindowSet& ws);
WindowSet load_windowset(const std::string& dir);

// "BRIDGE-WEIGHTS v1": magic line, u32 tensor count, per tensor
// (u32 name length, name, u32 rank, dims, float32 data), then a u32-length
// prefixed JSON block of convention flags.
struct NamedTensors {
  std::vector<std::string> order;  // insertion order
  std::map<std::string, Tensor> tensors;
  std::string conventions_json = "{}";

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  void add(const std::string& name, std::vector<std::uint32_t> dims);
};

void save_weights(const std::string& path, const NamedTensors& w);
NamedTensors load_weights(const std::string& path);

}  // namespace bridge
