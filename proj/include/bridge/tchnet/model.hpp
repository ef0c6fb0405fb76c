#pragma once

#include "bridge/common.hpp"
#include "bridge/tchnet/config.hpp"
#include "bridge/tensor_io.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace bridge::tchnet {

struct ForwardDiagnostics {
  Eigen::VectorXf h_t;     // 512
  Eigen::VectorXf h_c;     // 64
  Eigen::VectorXf h_h;     // 64
  Eigen::VectorXf gate_t;  // 128, strictly in (0,1)
  Eigen::VectorXf gate_c;
  Eigen::VectorXf gate_h;
  Eigen::VectorXf fused;   // 384 (post layer-norm)
  Eigen::VectorXf recon;   // 46
  Eigen::VectorXf mean_features;  // x-bar over the window, 46
  Eigen::Vector2f probs;
  double aux_loss = 0.0;
};

// All blocks run in inference mode: dropout disabled, batch norm on stored
// running statistics. Every function is pure in (weights, input).

// Residual per-timestep projection; X is window x feat.
MatrixRXf feat_proj(const ModelConfig& cfg, const NamedTensors& w,
                    const MatrixRXf& X);

// One ResConvSE block on a channels-first map U (C_in x L) -> C_out x L.
MatrixRXf resconvse_block(const NamedTensors& w, const std::string& prefix,
                          const MatrixRXf& U);

// Three-path temporal branch; returns the 512-dim pooled representation.
Eigen::VectorXf t_branch(const ModelConfig& cfg, const NamedTensors& w,
                         const MatrixRXf& X_tilde);

Eigen::VectorXf h_branch(const ModelConfig& cfg, const NamedTensors& w,
                         const Eigen::VectorXf& mean_features);

Eigen::VectorXf c_branch(const ModelConfig& cfg, const NamedTensors& w,
                         const std::array<int, 2>& ctx);

struct CbgafOutput {
  Eigen::VectorXf fused;  // 384
  Eigen::VectorXf gate_t, gate_c, gate_h;
};

CbgafOutput cbgaf(const ModelConfig& cfg, const NamedTensors& w,
                  const Eigen::VectorXf& h_t, const Eigen::VectorXf& h_c,
                  const Eigen::VectorXf& h_h);

Eigen::Vector2f head(const ModelConfig& cfg, const NamedTensors& w,
                     const Eigen::VectorXf& fused,
                     const Eigen::VectorXf& mean_features);

// Returns the reconstruction and its mean squared error against x-bar.
std::pair<Eigen::VectorXf, double> aux_decoder(
    const ModelConfig& cfg, const NamedTensors& w,
    const Eigen::VectorXf& fused, const Eigen::VectorXf& mean_features);

ForwardDiagnostics model_forward(const ModelConfig& cfg,
                                 const NamedTensors& w, const MatrixRXf& X,
                                 const std::array<int, 2>& ctx);

// Batch forward parallel over samples; results are per-sample deterministic
// and independent of thread count. threads <= 0 reads BRIDGE_THREADS
// (default 1).
std::vector<ForwardDiagnostics> model_forward_batch(
    const ModelConfig& cfg, const NamedTensors& w, const float* features,
    const std::vector<std::array<int, 2>>& contexts, std::size_t count,
    int threads = 0);

int thread_count_from_env();

// Inverse-frequency class weights over a batch, mean-normalized to 1.
// Falls back to (1,1) when a class is absent.
Eigen::Vector2d batch_class_weights(const std::vector<std::uint8_t>& labels);

// Class-weighted focal loss with label smoothing, batch mean, probabilities
// floored at 1e-12. Computed in double precision.
double focal_loss(const std::vector<Eigen::Vector2d>& probs,
                  const std::vector<std::uint8_t>& labels,
                  const Eigen::Vector2d& alpha, const LossConfig& cfg);

inline double total_loss(double cls, double aux, double lambda) {
  return cls + lambda * aux;
}

}  // namespace bridge::tchnet
