#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bridge/protocol.hpp"

#include <algorithm>
#include <cstring>

using namespace bridge;

namespace {

// A mixed five-dataset window set with both labels in every dataset.
WindowSet fixture(std::uint64_t salt = 0, int datasets = 5,
                  int per_dataset = 40) {
  WindowSet ws;
  SplitMix64 rng(99 + salt);
  for (int d = 0; d < datasets; ++d) {
    for (int i = 0; i < per_dataset; ++i) {
      for (std::size_t e = 0; e < ws.window_elems(); ++e) {
        ws.features.push_back(
            static_cast<float>(rng.next_double() * 20.0 - 10.0));
      }
      ws.labels.push_back(i % 4 == 0 ? 1 : 0);  // 25% attack
      ws.contexts.push_back({d, d});
      ws.origins.push_back({d, static_cast<std::size_t>(4 * i)});
    }
  }
  return ws;
}

ScalerParams fit_on(const WindowSet& ws) {
  Eigen::Map<const MatrixRXf> rows(
      ws.features.data(),
      static_cast<Eigen::Index>(ws.size()) * ws.window, ws.feat);
  return fit_scaler(MatrixRXf(rows));
}

double benign_fraction(const WindowSet& ws) {
  std::size_t benign = 0;
  for (auto l : ws.labels) benign += l == 0;
  return static_cast<double>(benign) / static_cast<double>(ws.size());
}

}  // namespace

TEST_CASE("stratified split keeps per-label proportions and all windows") {
  WindowSet ws = fixture();
  SplitSpec spec;
  spec.mode = SplitMode::kStratifiedRandom;
  spec.seed = 5;
  auto [train, test] = split(ws, spec);
  CHECK(train.size() + test.size() == ws.size());
  std::size_t train_pos = 0, all_pos = 0;
  for (auto l : train.labels) train_pos += l;
  for (auto l : ws.labels) all_pos += l;
  // First 80% of each label stratum: 50 positives -> 40 train.
  CHECK(all_pos == 50);
  CHECK(train_pos == 40);
  CHECK(train.size() == 160);
}

TEST_CASE("stratified split is seed-determined") {
  WindowSet ws = fixture();
  SplitSpec spec;
  spec.seed = 5;
  auto [t1, x1] = split(ws, spec);
  auto [t2, x2] = split(ws, spec);
  spec.seed = 6;
  auto [t3, x3] = split(ws, spec);
  CHECK(t1.features == t2.features);
  CHECK(x1.features == x2.features);
  CHECK(t1.features != t3.features);
}

TEST_CASE("temporal split takes the earliest windows of each dataset") {
  WindowSet ws = fixture();
  SplitSpec spec;
  spec.mode = SplitMode::kTemporal;
  auto [train, test] = split(ws, spec);
  CHECK(train.size() == 160);
  // Per dataset, every train start_row precedes every test start_row.
  for (int d = 0; d < 5; ++d) {
    std::size_t max_train = 0, min_test = SIZE_MAX;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.origins[i].dataset_id == d)
        max_train = std::max(max_train, train.origins[i].start_row);
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test.origins[i].dataset_id == d)
        min_test = std::min(min_test, test.origins[i].start_row);
    }
    CHECK(max_train < min_test);
  }
}

TEST_CASE("lodo split holds out exactly the named dataset") {
  WindowSet ws = fixture();
  SplitSpec spec;
  spec.mode = SplitMode::kLodo;
  spec.held_out_dataset = 2;
  auto [train, test] = split(ws, spec);
  CHECK(test.size() == 40);
  for (std::size_t i = 0; i < test.size(); ++i)
    CHECK(test.contexts[i][0] == 2);
  for (std::size_t i = 0; i < train.size(); ++i)
    CHECK(train.contexts[i][0] != 2);
}

TEST_CASE("lodo_folds yields five folds in dataset order") {
  WindowSet ws = fixture();
  auto folds = lodo_folds(ws);
  REQUIRE(folds.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(folds[k].second.size() == 40);
    CHECK(folds[k].second.contexts.front()[0] == k);
    CHECK(folds[k].first.size() == 160);
  }
}

TEST_CASE("lodo_folds names the absent datasets") {
  WindowSet ws = fixture(0, 3);  // datasets 0..2 only
  CHECK_THROWS_WITH_AS(lodo_folds(ws), "lodo_folds: datasets absent: {3,4}",
                       std::runtime_error);
}

TEST_CASE("leakage checks pass on a clean split") {
  WindowSet ws = fixture();
  SplitSpec spec;
  spec.seed = 5;
  auto [train, test] = split(ws, spec);
  LeakageReport r = verify_leakage(train, test, fit_on(train));
  CHECK(r.scaler_order_ok);
  CHECK(r.overlap_count == 0);
  CHECK(r.ratio_ok);
  CHECK(r.passed);
  // The stratified construction keeps benign fractions aligned.
  CHECK(std::abs(benign_fraction(train) - benign_fraction(test)) <= 0.02);
}

TEST_CASE("a planted duplicate window is caught with overlap_count 1") {
  WindowSet ws = fixture();
  SplitSpec spec;
  spec.seed = 5;
  auto [train, test] = split(ws, spec);
  std::memcpy(test.window_data(0), train.window_data(0),
              train.window_elems() * sizeof(float));
  LeakageReport r = verify_leakage(train, test, fit_on(train));
  CHECK(r.overlap_count == 1);
  CHECK_FALSE(r.passed);
}

TEST_CASE("a scaler fitted on different bytes fails the ordering check") {
  WindowSet ws = fixture();
  SplitSpec spec;
  spec.seed = 5;
  auto [train, test] = split(ws, spec);
  LeakageReport r = verify_leakage(train, test, fit_on(test));
  CHECK_FALSE(r.scaler_order_ok);
  CHECK_FALSE(r.passed);
}

TEST_CASE("benign-fraction tolerance accepts 0.758 vs 0.750, rejects 0.03") {
  // Build partitions with controlled benign fractions: 500-window train at
  // 0.758 benign and 400-window test at 0.750 benign.
  auto with_fraction = [](std::size_t n, std::size_t benign,
                          float tag) {
    WindowSet ws;
    for (std::size_t i = 0; i < n; ++i) {
      ws.features.insert(ws.features.end(), ws.window_elems(),
                         tag + static_cast<float>(i));
      ws.labels.push_back(i < benign ? 0 : 1);
      ws.contexts.push_back({0, 0});
      ws.origins.push_back({0, i});
    }
    return ws;
  };
  WindowSet train = with_fraction(500, 379, 1.0f);   // 0.758
  WindowSet test = with_fraction(400, 300, 5000.0f);  // 0.750
  LeakageReport ok = verify_leakage(train, test, fit_on(train));
  CHECK(ok.train_benign_fraction == doctest::Approx(0.758));
  CHECK(ok.test_benign_fraction == doctest::Approx(0.750));
  CHECK(ok.ratio_ok);
  CHECK(ok.passed);

  WindowSet skewed = with_fraction(400, 288, 5000.0f);  // 0.72
  LeakageReport bad = verify_leakage(train, skewed, fit_on(train));
  CHECK_FALSE(bad.ratio_ok);
  CHECK_FALSE(bad.passed);
}

TEST_CASE("leakage report json carries every field") {
  WindowSet ws = fixture();
  SplitSpec spec;
  auto [train, test] = split(ws, spec);
  std::string j = leakage_report_json(verify_leakage(train, test,
                                                     fit_on(train)));
  for (const char* key :
       {"scaler_order_ok", "overlap_count", "train_benign_fraction",
        "test_benign_fraction", "ratio_ok", "passed"}) {
    CHECK(j.find(key) != std::string::npos);
  }
}
