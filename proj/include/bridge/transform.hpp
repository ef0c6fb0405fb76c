#pragma once

#include "bridge/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bridge {

// Robust scaler parameters fitted on training data only. fit_hash digests
// the exact row-major float bytes the scaler was fitted on, so downstream
// leakage checks can prove fit-before-test ordering.
struct ScalerParams {
  Eigen::VectorXd center;  // per-column median
  Eigen::VectorXd scale;   // P95 - P5, floored at 1.0 for constant columns
  std::size_t fit_row_count = 0;
  std::uint64_t fit_hash = 0;
};

struct AugmentConfig {
  double probability = 0.30;
  double sigma = 0.010;
  double clip_lo = -10.0;
  double clip_hi = 10.0;
  std::uint64_t seed = 0;
};

// Median and percentiles use linear interpolation at p/100 * (N-1) over the
// sorted column. Requires at least 2 rows.
ScalerParams fit_scaler(const MatrixRXf& train);

// (x - center) / scale, clamped to [-10, 10]. Never refits.
MatrixRXf apply_scaler(const ScalerParams& params, const MatrixRXf& matrix);

// Per window: with cfg.probability, add iid N(0, sigma^2) noise to every
// element and re-clip; otherwise identity. windows is N flattened blocks of
// window_elems floats.
void augment(std::vector<float>& windows, std::size_t window_elems,
             const AugmentConfig& cfg);

std::string scaler_params_json(const ScalerParams& params);
ScalerParams parse_scaler_params_json(const std::string& text);
ScalerParams load_scaler_params(const std::string& path);

}  // namespace bridge
