#include "bridge/windows.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace bridge {

WindowSet build_windows(const CanonicalMatrix& matrix,
                        const WindowConfig& cfg) {
  if (cfg.window < 1 || cfg.stride < 1) {
    throw std::invalid_argument("build_windows: window/stride must be >= 1");
  }
  auto it = cfg.device_category_map.find(matrix.dataset_id);
  int device_category = it == cfg.device_category_map.end() ? 0 : it->second;
  if (device_category < 0 || device_category > 5) {
    throw std::invalid_argument("build_windows: device category out of 0..5");
  }

  WindowSet ws;
  ws.window = cfg.window;
  ws.feat = static_cast<int>(matrix.values.cols());
  const std::size_t rows = static_cast<std::size_t>(matrix.values.rows());
  const auto w = static_cast<std::size_t>(cfg.window);
  if (rows < w) {
    std::fprintf(stderr,
                 "build_windows: dataset %d has %zu rows < window %d, "
                 "emitting empty set\n",
                 matrix.dataset_id, rows, cfg.window);
    return ws;
  }
  const std::size_t count = (rows - w) / static_cast<std::size_t>(cfg.stride) + 1;
  ws.features.reserve(count * ws.window_elems());
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t start = k * static_cast<std::size_t>(cfg.stride);
    const float* block = matrix.values.data() +
                         start * static_cast<std::size_t>(ws.feat);
    ws.features.insert(ws.features.end(), block,
                       block + ws.window_elems());
    std::size_t attacks = 0;
    for (std::size_t r = start; r < start + w; ++r) attacks += matrix.labels[r];
    ws.labels.push_back(2 * attacks >= w ? 1 : 0);
    ws.contexts.push_back({matrix.dataset_id, device_category});
    ws.origins.push_back({matrix.dataset_id, start});
  }
  return ws;
}

void append_windows(WindowSet& lhs, const WindowSet& rhs) {
  if (lhs.size() == 0) {
    lhs.window = rhs.window;
    lhs.feat = rhs.feat;
  }
  if (lhs.window != rhs.window || lhs.feat != rhs.feat) {
    throw std::invalid_argument("append_windows: dimension mismatch");
  }
  lhs.features.insert(lhs.features.end(), rhs.features.begin(),
                      rhs.features.end());
  lhs.labels.insert(lhs.labels.end(), rhs.labels.begin(), rhs.labels.end());
  lhs.contexts.insert(lhs.contexts.end(), rhs.contexts.begin(),
                      rhs.contexts.end());
  lhs.origins.insert(lhs.origins.end(), rhs.origins.begin(),
                     rhs.origins.end());
}

WindowSet select_windows(const WindowSet& ws,
                         const std::vector<std::size_t>& indices) {
  WindowSet out;
  out.window = ws.window;
  out.feat = ws.feat;
  out.features.reserve(indices.size() * ws.window_elems());
  for (std::size_t i : indices) {
    const float* block = ws.window_data(i);
    out.features.insert(out.features.end(), block, block + ws.window_elems());
    out.labels.push_back(ws.labels[i]);
    out.contexts.push_back(ws.contexts[i]);
    out.origins.push_back(ws.origins[i]);
  }
  return out;
}

WindowSet cap_windows(const WindowSet& ws, std::size_t cap,
                      std::uint64_t seed) {
  if (ws.size() <= cap) return ws;
  return select_windows(ws, sample_indices(ws.size(), cap, seed));
}

}  // namespace bridge
