#pragma once

#include <array>
#include <cstdint>

namespace bridge::tchnet {

// Architecture hyperparameters. Derived dims are fixed by the invariants
// merged_dim = 256 + 128 + 128, fused_dim = 3 * fusion_dim,
// classifier_in = fused_dim + 64.
struct ModelConfig {
  int feat = 46;           // F
  int window = 32;         // W
  int embed_dim = 32;      // d_e
  std::array<int, 3> conv_channels = {64, 128, 128};
  int se_reduction = 8;    // r
  int gru1_hidden = 128;   // per direction, 2 layers
  int gru2_hidden = 64;    // per direction, 1 layer
  int transformer_dim = 128;
  int transformer_layers = 2;
  int transformer_heads = 8;
  int transformer_ffn = 512;
  int merged_dim = 512;    // d_T*
  int h_out = 64;
  int c_out = 64;          // 2 * embed_dim
  int fusion_dim = 128;    // d_f
  int fused_dim = 384;     // 3 * d_f
  int classifier_in = 448; // fused_dim + 64
  double dropout = 0.15;   // disabled in the inference kernel
  int grid = 8;            // shared temporal grid length
};

struct LossConfig {
  double gamma = 2.0;
  double label_smoothing = 0.05;
  double aux_weight = 0.05;
};

// Layer conventions frozen so the parameter count is reproducible: every
// linear, conv, and GRU layer carries bias (GRU with separate input and
// recurrent bias vectors); batch norm and layer norm carry affine
// parameters; attention uses packed Q/K/V projections with bias plus an
// output projection with bias. Batch norm running statistics are stored in
// the weights file but are not trainable parameters.
struct Conventions {
  bool linear_bias = true;
  bool conv_bias = true;
  bool norm_affine = true;
  bool gru_dual_bias = true;
  bool attention_packed_qkv_bias = true;
};

}  // namespace bridge::tchnet
