#pragma once

#include "bridge/common.hpp"
#include "bridge/ingest.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace bridge {

struct WindowOrigin {
  int dataset_id = 0;
  std::size_t start_row = 0;
};

// Sliding-window sequence tensor: N windows of window x feat floats, with
// binary labels, (c_ds, c_dev) contexts, and row provenance.
struct WindowSet {
  int window = 32;
  int feat = kCanonicalSlots;
  std::vector<float> features;  // N * window * feat, row-major per window
  std::vector<std::uint8_t> labels;
  std::vector<std::array<int, 2>> contexts;
  std::vector<WindowOrigin> origins;

  std::size_t size() const { return labels.size(); }
  std::size_t window_elems() const {
    return static_cast<std::size_t>(window) * static_cast<std::size_t>(feat);
  }
  const float* window_data(std::size_t i) const {
    return features.data() + i * window_elems();
  }
  float* window_data(std::size_t i) {
    return features.data() + i * window_elems();
  }
};

struct WindowConfig {
  int window = 32;
  int stride = 4;
  std::size_t train_cap = 800000;
  std::size_t test_cap = 200000;
  std::map<int, int> device_category_map;  // dataset_id -> 0..5
};

// Rows must be pre-sorted by flow arrival time. Window label is attack when
// at least half the rows are attacks (ties resolve to attack). Fewer rows
// than one window yields an empty set.
WindowSet build_windows(const CanonicalMatrix& matrix,
                        const WindowConfig& cfg);

// Appends rhs to lhs; both must agree on window/feat dims.
void append_windows(WindowSet& lhs, const WindowSet& rhs);

// Uniform seeded subsample down to cap, preserving original order.
WindowSet cap_windows(const WindowSet& ws, std::size_t cap,
                      std::uint64_t seed);

// Selects a subset of windows by index, preserving the given order.
WindowSet select_windows(const WindowSet& ws,
                         const std::vector<std::size_t>& indices);

}  // namespace bridge
