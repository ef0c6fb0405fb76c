#pragma once

#include "bridge/transform.hpp"
#include "bridge/windows.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bridge {

enum class SplitMode { kStratifiedRandom, kTemporal, kLodo };

struct SplitSpec {
  SplitMode mode = SplitMode::kStratifiedRandom;
  double train_fraction = 0.8;
  int held_out_dataset = 0;  // lodo mode only
  std::uint64_t seed = 0;
};

struct LeakageReport {
  bool scaler_order_ok = false;
  std::size_t overlap_count = 0;
  double train_benign_fraction = 0.0;
  double test_benign_fraction = 0.0;
  bool ratio_ok = false;
  bool passed = false;
};

// stratified_random: per-label seeded shuffle, first train_fraction train.
// temporal: per dataset, earliest windows by start row go to train.
// lodo: train = every window not from the held-out dataset.
std::pair<WindowSet, WindowSet> split(const WindowSet& ws,
                                      const SplitSpec& spec);

// Three checks: (1) scaler fit_hash matches the digest of the train feature
// bytes; (2) zero byte-identical windows across partitions (FNV-1a candidate
// hashes confirmed by byte comparison); (3) benign fractions within 0.02.
LeakageReport verify_leakage(const WindowSet& train, const WindowSet& test,
                             const ScalerParams& scaler);

// Five folds in dataset-id order; fold k holds out dataset k. Throws when
// any of the five dataset ids is absent.
std::vector<std::pair<WindowSet, WindowSet>> lodo_folds(const WindowSet& ws);

std::string leakage_report_json(const LeakageReport& report);

}  // namespace bridge
