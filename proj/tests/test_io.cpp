#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bridge/tensor_io.hpp"

#include <filesystem>
#include <fstream>

using namespace bridge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bridge_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

WindowSet small_windowset() {
  WindowSet ws;
  for (int i = 0; i < 3; ++i) {
    for (std::size_t e = 0; e < ws.window_elems(); ++e) {
      ws.features.push_back(static_cast<float>(i) + 0.25f);
    }
    ws.labels.push_back(i % 2);
    ws.contexts.push_back({i, 5 - i});
    ws.origins.push_back({i, static_cast<std::size_t>(8 * i)});
  }
  return ws;
}

}  // namespace

TEST_CASE("tensor round-trip preserves dims and payload bytes") {
  TempDir tmp;
  Tensor t;
  t.dims = {2, 3, 4};
  for (int i = 0; i < 24; ++i) t.data.push_back(0.5f * i - 3.0f);
  save_tensor(tmp.file("t.bt"), t);
  Tensor u = load_tensor(tmp.file("t.bt"));
  CHECK(u.dims == t.dims);
  CHECK(u.data == t.data);
  CHECK(u.elem_count() == 24);
}

TEST_CASE("tensor file starts with the container magic") {
  TempDir tmp;
  Tensor t;
  t.dims = {1};
  t.data = {1.0f};
  save_tensor(tmp.file("m.bt"), t);
  std::ifstream in(tmp.file("m.bt"), std::ios::binary);
  std::string magic(17, '\0');
  in.read(magic.data(), 17);
  CHECK(magic == "BRIDGE-TENSOR v1\n");
}

TEST_CASE("corrupt magic and truncated payload are rejected") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.bt"), std::ios::binary);
    out << "NOT-A-TENSOR v1\n";
  }
  CHECK_THROWS_AS(load_tensor(tmp.file("bad.bt")), std::runtime_error);
  Tensor t;
  t.dims = {8};
  t.data.assign(8, 1.0f);
  save_tensor(tmp.file("cut.bt"), t);
  fs::resize_file(tmp.file("cut.bt"), fs::file_size(tmp.file("cut.bt")) - 5);
  CHECK_THROWS_AS(load_tensor(tmp.file("cut.bt")), std::runtime_error);
}

TEST_CASE("windowset round-trip preserves every sidecar") {
  TempDir tmp;
  WindowSet ws = small_windowset();
  save_windowset(tmp.file("ws"), ws);
  WindowSet r = load_windowset(tmp.file("ws"));
  CHECK(r.window == ws.window);
  CHECK(r.feat == ws.feat);
  CHECK(r.features == ws.features);
  CHECK(r.labels == ws.labels);
  CHECK(r.contexts == ws.contexts);
  REQUIRE(r.origins.size() == ws.origins.size());
  for (std::size_t i = 0; i < r.origins.size(); ++i) {
    CHECK(r.origins[i].dataset_id == ws.origins[i].dataset_id);
    CHECK(r.origins[i].start_row == ws.origins[i].start_row);
  }
}

TEST_CASE("weights round-trip preserves order, tensors, and conventions") {
  TempDir tmp;
  NamedTensors w;
  w.add("b.second", {2, 2});
  w.add("a.first", {3});
  w.at("b.second").data = {1, 2, 3, 4};
  w.at("a.first").data = {-1, 0, 1};
  w.conventions_json = R"({"linear_bias":true})";
  save_weights(tmp.file("w.bw"), w);
  NamedTensors r = load_weights(tmp.file("w.bw"));
  CHECK(r.order == std::vector<std::string>{"b.second", "a.first"});
  CHECK(r.at("b.second").dims == std::vector<std::uint32_t>{2, 2});
  CHECK(r.at("b.second").data == w.at("b.second").data);
  CHECK(r.at("a.first").data == w.at("a.first").data);
  CHECK(r.conventions_json == w.conventions_json);
}

TEST_CASE("weights file rejects duplicate and missing tensors") {
  NamedTensors w;
  w.add("x", {1});
  CHECK_THROWS_AS(w.add("x", {1}), std::runtime_error);
  CHECK_THROWS_AS(w.at("missing"), std::runtime_error);
}

TEST_CASE("saved files are byte-identical across writes") {
  TempDir tmp;
  WindowSet ws = small_windowset();
  save_windowset(tmp.file("w1"), ws);
  save_windowset(tmp.file("w2"), ws);
  for (const auto& e : fs::directory_iterator(tmp.file("w1"))) {
    std::ifstream a(e.path(), std::ios::binary);
    std::ifstream b(tmp.file("w2") + "/" + e.path().filename().string(),
                    std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
}
