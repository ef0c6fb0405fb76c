#include "bridge/tensor_io.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace bridge {

using nlohmann::json;

namespace {

constexpr const char* kTensorMagic = "BRIDGE-TENSOR v1\n";
constexpr const char* kWeightsMagic = "BRIDGE-WEIGHTS v1\n";

// This codebase targets little-endian hosts; the formats are defined as
// little-endian on disk.
void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("tensor io: truncated file");
  return v;
}

void expect_magic(std::istream& in, const char* magic) {
  std::string line(std::string(magic).size(), '\0');
  in.read(line.data(), static_cast<std::streamsize>(line.size()));
  if (!in || line != magic) {
    throw std::runtime_error("tensor io: bad magic");
  }
}

}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << kTensorMagic;
  write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) write_u32(out, d);
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failure: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  expect_magic(in, kTensorMagic);
  Tensor t;
  std::uint32_t rank = read_u32(in);
  for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(read_u32(in));
  t.data.resize(t.elem_count());
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("tensor io: truncated payload in " + path);
  return t;
}

void save_windowset(const std::string& dir, const WindowSet& ws) {
  std::filesystem::create_directories(dir);
  Tensor feat;
  feat.dims = {static_cast<std::uint32_t>(ws.size()),
               static_cast<std::uint32_t>(ws.window),
               static_cast<std::uint32_t>(ws.feat)};
  feat.data = ws.features;
  save_tensor(dir + "/features.bt", feat);

  Tensor meta;  // label, c_ds, c_dev, dataset_id, start_row per window
  meta.dims = {static_cast<std::uint32_t>(ws.size()), 5};
  meta.data.reserve(ws.size() * 5);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    meta.data.push_back(static_cast<float>(ws.labels[i]));
    meta.data.push_back(static_cast<float>(ws.contexts[i][0]));
    meta.data.push_back(static_cast<float>(ws.contexts[i][1]));
    meta.data.push_back(static_cast<float>(ws.origins[i].dataset_id));
    meta.data.push_back(static_cast<float>(ws.origins[i].start_row));
  }
  save_tensor(dir + "/meta.bt", meta);
}

WindowSet load_windowset(const std::string& dir) {
  Tensor feat = load_tensor(dir + "/features.bt");
  Tensor meta = load_tensor(dir + "/meta.bt");
  if (feat.dims.size() != 3 || meta.dims.size() != 2 || meta.dims[1] != 5 ||
      feat.dims[0] != meta.dims[0]) {
    throw std::runtime_error("windowset: inconsistent container in " + dir);
  }
  WindowSet ws;
  ws.window = static_cast<int>(feat.dims[1]);
  ws.feat = static_cast<int>(feat.dims[2]);
  ws.features = std::move(feat.data);
  for (std::uint32_t i = 0; i < meta.dims[0]; ++i) {
    const float* row = meta.data.data() + i * 5;
    ws.labels.push_back(static_cast<std::uint8_t>(row[0]));
    ws.contexts.push_back(
        {static_cast<int>(row[1]), static_cast<int>(row[2])});
    ws.origins.push_back({static_cast<int>(row[3]),
                          static_cast<std::size_t>(row[4])});
  }
  return ws;
}

Tensor& NamedTensors::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw std::runtime_error("weights: missing tensor " + name);
  }
  return it->second;
}

const Tensor& NamedTensors::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw std::runtime_error("weights: missing tensor " + name);
  }
  return it->second;
}

void NamedTensors::add(const std::string& name,
                       std::vector<std::uint32_t> dims) {
  if (tensors.count(name)) {
    throw std::runtime_error("weights: duplicate tensor " + name);
  }
  Tensor t;
  t.dims = std::move(dims);
  t.data.assign(t.elem_count(), 0.0f);
  order.push_back(name);
  tensors.emplace(name, std::move(t));
}

void save_weights(const std::string& path, const NamedTensors& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << kWeightsMagic;
  write_u32(out, static_cast<std::uint32_t>(w.order.size()));
  for (const std::string& name : w.order) {
    const Tensor& t = w.tensors.at(name);
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) write_u32(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  write_u32(out, static_cast<std::uint32_t>(w.conventions_json.size()));
  out.write(w.conventions_json.data(),
            static_cast<std::streamsize>(w.conventions_json.size()));
  if (!out) throw std::runtime_error("write failure: " + path);
}

NamedTensors load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  expect_magic(in, kWeightsMagic);
  NamedTensors w;
  std::uint32_t count = read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    Tensor t;
    std::uint32_t rank = read_u32(in);
    for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(read_u32(in));
    t.data.resize(t.elem_count());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw std::runtime_error("weights: truncated tensor " + name);
    w.order.push_back(name);
    w.tensors.emplace(std::move(name), std::move(t));
  }
  std::uint32_t json_len = read_u32(in);
  w.conventions_json.resize(json_len);
  in.read(w.conventions_json.data(), json_len);
  if (!in) throw std::runtime_error("weights: truncated conventions block");
  return w;
}

}  // namespace bridge
