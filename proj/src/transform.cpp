#include "bridge/transform.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bridge {

using nlohmann::json;

namespace {

// Linear interpolation at position p/100 * (N-1) over a sorted column.
double percentile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  double pos = p / 100.0 * static_cast<double>(n - 1);
  auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted[n - 1];
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

ScalerParams fit_scaler(const MatrixRXf& train) {
  if (train.rows() < 2) {
    throw std::runtime_error("fit_scaler: need at least 2 rows");
  }
  const Eigen::Index cols = train.cols();
  ScalerParams params;
  params.center.resize(cols);
  params.scale.resize(cols);
  params.fit_row_count = static_cast<std::size_t>(train.rows());
  params.fit_hash = fnv1a64(train.data(),
                            static_cast<std::size_t>(train.size()) *
                                sizeof(float));

  std::vector<double> col(static_cast<std::size_t>(train.rows()));
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < train.rows(); ++i) {
      col[static_cast<std::size_t>(i)] = static_cast<double>(train(i, j));
    }
    std::sort(col.begin(), col.end());
    params.center[j] = percentile_sorted(col, 50.0);
    double spread = percentile_sorted(col, 95.0) - percentile_sorted(col, 5.0);
    params.scale[j] = spread < 1e-9 ? 1.0 : spread;
  }
  return params;
}

MatrixRXf apply_scaler(const ScalerParams& params, const MatrixRXf& matrix) {
  if (matrix.cols() != params.center.size()) {
    throw std::runtime_error("apply_scaler: column count mismatch");
  }
  MatrixRXf out(matrix.rows(), matrix.cols());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      double v = (static_cast<double>(matrix(i, j)) - params.center[j]) /
                 params.scale[j];
      out(i, j) = static_cast<float>(std::clamp(v, -10.0, 10.0));
    }
  }
  return out;
}

void augment(std::vector<float>& windows, std::size_t window_elems,
             const AugmentConfig& cfg) {
  if (cfg.probability < 0.0 || cfg.probability > 1.0 || cfg.sigma < 0.0 ||
      cfg.clip_lo >= cfg.clip_hi) {
    throw std::invalid_argument("augment: invalid config");
  }
  if (window_elems == 0 || cfg.sigma == 0.0 || cfg.probability == 0.0) return;
  SplitMix64 rng(cfg.seed);
  const std::size_t n = windows.size() / window_elems;
  for (std::size_t w = 0; w < n; ++w) {
    if (rng.next_double() >= cfg.probability) continue;
    float* block = windows.data() + w * window_elems;
    for (std::size_t k = 0; k < window_elems; ++k) {
      double v = static_cast<double>(block[k]) + cfg.sigma * rng.next_gaussian();
      block[k] = static_cast<float>(std::clamp(v, cfg.clip_lo, cfg.clip_hi));
    }
  }
}

std::string scaler_params_json(const ScalerParams& params) {
  json center = json::array(), scale = json::array();
  for (Eigen::Index j = 0; j < params.center.size(); ++j) {
    center.push_back(params.center[j]);
    scale.push_back(params.scale[j]);
  }
  return json{{"center", center},
              {"scale", scale},
              {"fit_row_count", params.fit_row_count},
              {"fit_hash", params.fit_hash}}
      .dump(2);
}

ScalerParams parse_scaler_params_json(const std::string& text) {
  json j = json::parse(text);
  ScalerParams params;
  const json& center = j.at("center");
  const json& scale = j.at("scale");
  params.center.resize(static_cast<Eigen::Index>(center.size()));
  params.scale.resize(static_cast<Eigen::Index>(scale.size()));
  for (std::size_t k = 0; k < center.size(); ++k) {
    params.center[static_cast<Eigen::Index>(k)] = center[k].get<double>();
    params.scale[static_cast<Eigen::Index>(k)] = scale[k].get<double>();
  }
  params.fit_row_count = j.at("fit_row_count").get<std::size_t>();
  params.fit_hash = j.at("fit_hash").get<std::uint64_t>();
  return params;
}

ScalerParams load_scaler_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scaler_params_json(ss.str());
}

}  // namespace bridge
