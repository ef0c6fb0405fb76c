#include "bridge/protocol.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace bridge {

using nlohmann::json;

namespace {

std::size_t train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(static_cast<double>(n) * fraction + 1e-9);
}

std::pair<WindowSet, WindowSet> split_by(const WindowSet& ws,
                                         std::vector<std::size_t> train_idx,
                                         std::vector<std::size_t> test_idx) {
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {select_windows(ws, train_idx), select_windows(ws, test_idx)};
}

}  // namespace

std::pair<WindowSet, WindowSet> split(const WindowSet& ws,
                                      const SplitSpec& spec) {
  if (ws.size() == 0) throw std::runtime_error("split: empty window set");
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
    throw std::invalid_argument("split: train_fraction must be in (0,1)");
  }
  std::vector<std::size_t> train_idx, test_idx;

  switch (spec.mode) {
    case SplitMode::kStratifiedRandom: {
      for (int label = 0; label <= 1; ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ws.size(); ++i) {
          if (ws.labels[i] == label) idx.push_back(i);
        }
        if (idx.empty()) {
          throw std::runtime_error(
              "split: label class " + std::to_string(label) +
              " empty under stratified mode");
        }
        SplitMix64 rng(spec.seed + static_cast<std::uint64_t>(label));
        for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
          std::size_t j =
              i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
          std::swap(idx[i], idx[j]);
        }
        std::size_t tc = train_count(idx.size(), spec.train_fraction);
        train_idx.insert(train_idx.end(), idx.begin(),
                         idx.begin() + static_cast<std::ptrdiff_t>(tc));
        test_idx.insert(test_idx.end(),
                        idx.begin() + static_cast<std::ptrdiff_t>(tc),
                        idx.end());
      }
      break;
    }
    case SplitMode::kTemporal: {
      std::map<int, std::vector<std::size_t>> per_dataset;
      for (std::size_t i = 0; i < ws.size(); ++i) {
        per_dataset[ws.origins[i].dataset_id].push_back(i);
      }
      for (auto& [ds, idx] : per_dataset) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) {
                           return ws.origins[a].start_row <
                                  ws.origins[b].start_row;
                         });
        std::size_t tc = train_count(idx.size(), spec.train_fraction);
        train_idx.insert(train_idx.end(), idx.begin(),
                         idx.begin() + static_cast<std::ptrdiff_t>(tc));
        test_idx.insert(test_idx.end(),
                        idx.begin() + static_cast<std::ptrdiff_t>(tc),
                        idx.end());
      }
      break;
    }
    case SplitMode::kLodo: {
      for (std::size_t i = 0; i < ws.size(); ++i) {
        (ws.contexts[i][0] == spec.held_out_dataset ? test_idx : train_idx)
            .push_back(i);
      }
      if (test_idx.empty()) {
        throw std::runtime_error("split: held-out dataset " +
                                 std::to_string(spec.held_out_dataset) +
                                 " absent");
      }
      break;
    }
  }
  return split_by(ws, std::move(train_idx), std::move(test_idx));
}

LeakageReport verify_leakage(const WindowSet& train, const WindowSet& test,
                             const ScalerParams& scaler) {
  LeakageReport report;
  report.scaler_order_ok = fnv1a64(train.features) == scaler.fit_hash;

  // Hash every window; only cross-partition hash collisions are candidates,
  // each confirmed by byte comparison.
  const std::size_t elems = train.window_elems();
  const std::size_t bytes = elems * sizeof(float);
  std::unordered_multimap<std::uint64_t, std::size_t> train_hashes;
  train_hashes.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    train_hashes.emplace(fnv1a64(train.window_data(i), bytes), i);
  }
  for (std::size_t j = 0; j < test.size(); ++j) {
    std::uint64_t h = fnv1a64(test.window_data(j), bytes);
    auto [lo, hi] = train_hashes.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      if (std::memcmp(train.window_data(it->second), test.window_data(j),
                      bytes) == 0) {
        ++report.overlap_count;
        break;
      }
    }
  }

  auto benign_fraction = [](const WindowSet& ws) {
    std::size_t benign = 0;
    for (std::uint8_t l : ws.labels) benign += (l == 0);
    return ws.size() == 0 ? 0.0
                          : static_cast<double>(benign) /
                                static_cast<double>(ws.size());
  };
  report.train_benign_fraction = benign_fraction(train);
  report.test_benign_fraction = benign_fraction(test);
  report.ratio_ok = std::abs(report.train_benign_fraction -
                             report.test_benign_fraction) <= 0.02;
  report.passed =
      report.scaler_order_ok && report.overlap_count == 0 && report.ratio_ok;
  return report;
}

std::vector<std::pair<WindowSet, WindowSet>> lodo_folds(const WindowSet& ws) {
  std::set<int> present;
  for (const auto& ctx : ws.contexts) present.insert(ctx[0]);
  std::vector<int> absent;
  for (int d = 0; d < 5; ++d) {
    if (!present.count(d)) absent.push_back(d);
  }
  if (!absent.empty()) {
    std::ostringstream msg;
    msg << "lodo_folds: datasets absent: {";
    for (std::size_t i = 0; i < absent.size(); ++i) {
      msg << (i ? "," : "") << absent[i];
    }
    msg << "}";
    throw std::runtime_error(msg.str());
  }
  std::vector<std::pair<WindowSet, WindowSet>> folds;
  for (int d = 0; d < 5; ++d) {
    SplitSpec spec;
    spec.mode = SplitMode::kLodo;
    spec.held_out_dataset = d;
    folds.push_back(split(ws, spec));
  }
  return folds;
}

std::string leakage_report_json(const LeakageReport& report) {
  return json{{"scaler_order_ok", report.scaler_order_ok},
              {"overlap_count", report.overlap_count},
              {"train_benign_fraction", report.train_benign_fraction},
              {"test_benign_fraction", report.test_benign_fraction},
              {"ratio_ok", report.ratio_ok},
              {"passed", report.passed}}
      .dump(2);
}

}  // namespace bridge
