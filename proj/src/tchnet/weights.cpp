#include "bridge/tchnet/weights.hpp"

#include "bridge/common.hpp"

#include <json.hpp>

namespace bridge::tchnet {

using nlohmann::json;

namespace {

using Dims = std::vector<std::uint32_t>;

void add(std::vector<TensorSpec>& inv, std::string name, Dims dims) {
  inv.push_back({std::move(name), std::move(dims)});
}

void add_linear(std::vector<TensorSpec>& inv, const std::string& prefix,
                std::uint32_t out, std::uint32_t in) {
  add(inv, prefix + ".weight", {out, in});
  add(inv, prefix + ".bias", {out});
}

void add_layernorm(std::vector<TensorSpec>& inv, const std::string& prefix,
                   std::uint32_t n) {
  add(inv, prefix + ".gamma", {n});
  add(inv, prefix + ".beta", {n});
}

void add_batchnorm(std::vector<TensorSpec>& inv, const std::string& prefix,
                   std::uint32_t n) {
  add(inv, prefix + ".gamma", {n});
  add(inv, prefix + ".beta", {n});
  add(inv, prefix + ".running_mean", {n});
  add(inv, prefix + ".running_var", {n});
}

// One bidirectional GRU layer: per direction W_ih [3H x In], W_hh [3H x H],
// b_ih, b_hh (gate order: reset, update, candidate).
void add_bigru_layer(std::vector<TensorSpec>& inv, const std::string& prefix,
                     std::uint32_t in, std::uint32_t hidden) {
  for (const char* dir : {"fw", "bw"}) {
    std::string p = prefix + "." + dir;
    add(inv, p + ".w_ih", {3 * hidden, in});
    add(inv, p + ".w_hh", {3 * hidden, hidden});
    add(inv, p + ".b_ih", {3 * hidden});
    add(inv, p + ".b_hh", {3 * hidden});
  }
}

void add_mha(std::vector<TensorSpec>& inv, const std::string& prefix,
             std::uint32_t dim) {
  add(inv, prefix + ".in_proj_weight", {3 * dim, dim});
  add(inv, prefix + ".in_proj_bias", {3 * dim});
  add_linear(inv, prefix + ".out_proj", dim, dim);
}

// ResConvSE block: two depthwise-separable convs (BN+ReLU after each
// pointwise), SE recalibration, 1x1 conv + BN skip when channels change.
void add_resconvse(std::vector<TensorSpec>& inv, const std::string& prefix,
                   std::uint32_t c_in, std::uint32_t c_out,
                   std::uint32_t se_reduction) {
  add(inv, prefix + ".dw1.weight", {c_in, 3});
  add(inv, prefix + ".dw1.bias", {c_in});
  add_linear(inv, prefix + ".pw1", c_out, c_in);
  add_batchnorm(inv, prefix + ".bn1", c_out);
  add(inv, prefix + ".dw2.weight", {c_out, 3});
  add(inv, prefix + ".dw2.bias", {c_out});
  add_linear(inv, prefix + ".pw2", c_out, c_out);
  add_batchnorm(inv, prefix + ".bn2", c_out);
  add_linear(inv, prefix + ".se.fc1", c_out / se_reduction, c_out);
  add_linear(inv, prefix + ".se.fc2", c_out, c_out / se_reduction);
  if (c_in != c_out) {
    add_linear(inv, prefix + ".skip", c_out, c_in);
    add_batchnorm(inv, prefix + ".skip_bn", c_out);
  }
}

}  // namespace

std::vector<TensorSpec> model_inventory(const ModelConfig& cfg) {
  std::vector<TensorSpec> inv;
  const auto F = static_cast<std::uint32_t>(cfg.feat);
  const auto W = static_cast<std::uint32_t>(cfg.window);
  const auto dT = static_cast<std::uint32_t>(cfg.transformer_dim);
  const auto df = static_cast<std::uint32_t>(cfg.fusion_dim);

  // Shared residual feature projection: 46 -> 92 -> 46.
  add_linear(inv, "feat_proj.fc1", 2 * F, F);
  add_layernorm(inv, "feat_proj.ln1", 2 * F);
  add_linear(inv, "feat_proj.fc2", F, 2 * F);
  add_layernorm(inv, "feat_proj.ln2", F);

  // Path 1: ResConvSE frontend + 2-layer BiGRU.
  const auto c1 = static_cast<std::uint32_t>(cfg.conv_channels[0]);
  const auto c2 = static_cast<std::uint32_t>(cfg.conv_channels[1]);
  const auto c3 = static_cast<std::uint32_t>(cfg.conv_channels[2]);
  const auto r = static_cast<std::uint32_t>(cfg.se_reduction);
  add_resconvse(inv, "path1.block1", F, c1, r);
  add_resconvse(inv, "path1.block2", c1, c2, r);
  add_resconvse(inv, "path1.block3", c2, c3, r);
  const auto g1 = static_cast<std::uint32_t>(cfg.gru1_hidden);
  add_bigru_layer(inv, "path1.gru.l0", c3, g1);
  add_bigru_layer(inv, "path1.gru.l1", 2 * g1, g1);

  // Path 2: strided conv + single-layer BiGRU.
  add(inv, "path2.conv.weight", {c1, F, 3});
  add(inv, "path2.conv.bias", {c1});
  add_batchnorm(inv, "path2.bn", c1);
  const auto g2 = static_cast<std::uint32_t>(cfg.gru2_hidden);
  add_bigru_layer(inv, "path2.gru.l0", c1, g2);

  // Path 3: token projection, learnable positional encoding, CLS token,
  // two pre-LayerNorm transformer encoder layers.
  add_linear(inv, "path3.proj", dT, F);
  add(inv, "path3.pos", {W, dT});
  add(inv, "path3.cls", {dT});
  for (int l = 0; l < cfg.transformer_layers; ++l) {
    std::string p = "path3.layer" + std::to_string(l);
    add_layernorm(inv, p + ".ln1", dT);
    add_mha(inv, p + ".attn", dT);
    add_layernorm(inv, p + ".ln2", dT);
    add_linear(inv, p + ".ffn.fc1",
               static_cast<std::uint32_t>(cfg.transformer_ffn), dT);
    add_linear(inv, p + ".ffn.fc2", dT,
               static_cast<std::uint32_t>(cfg.transformer_ffn));
  }

  // Multi-path merge: LayerNorm + self-attention over the 8-step grid.
  const auto dm = static_cast<std::uint32_t>(cfg.merged_dim);
  add_layernorm(inv, "merge.ln", dm);
  add_mha(inv, "merge.attn", dm);

  // C-branch embedding tables.
  add(inv, "cbranch.emb_ds", {5, static_cast<std::uint32_t>(cfg.embed_dim)});
  add(inv, "cbranch.emb_dev", {6, static_cast<std::uint32_t>(cfg.embed_dim)});

  // H-branch MLP.
  add_linear(inv, "hbranch.fc1", 128, F);
  add_batchnorm(inv, "hbranch.bn1", 128);
  add_linear(inv, "hbranch.fc2", static_cast<std::uint32_t>(cfg.h_out), 128);
  add_batchnorm(inv, "hbranch.bn2", static_cast<std::uint32_t>(cfg.h_out));

  // CB-GAF: branch projections, per-branch Q/K/V and gate, final LayerNorm.
  add_linear(inv, "cbgaf.proj_t", df, dm);
  add_linear(inv, "cbgaf.proj_c", df, static_cast<std::uint32_t>(cfg.c_out));
  add_linear(inv, "cbgaf.proj_h", df, static_cast<std::uint32_t>(cfg.h_out));
  for (const char* b : {"t", "c", "h"}) {
    std::string p = std::string("cbgaf.") + b;
    add_linear(inv, p + ".wq", df, df);
    add_linear(inv, p + ".wk", df, df);
    add_linear(inv, p + ".wv", df, df);
    add_linear(inv, p + ".gate", df, 2 * df);
  }
  add_layernorm(inv, "cbgaf.ln", static_cast<std::uint32_t>(cfg.fused_dim));

  // Residual classification head.
  add_linear(inv, "head.raw", 64, F);
  add_batchnorm(inv, "head.raw_bn", 64);
  add_linear(inv, "head.fc1", 256, static_cast<std::uint32_t>(cfg.classifier_in));
  add_batchnorm(inv, "head.bn1", 256);
  add_linear(inv, "head.fc2", 128, 256);
  add_batchnorm(inv, "head.bn2", 128);
  add_linear(inv, "head.skip", 128, static_cast<std::uint32_t>(cfg.classifier_in));
  add_linear(inv, "head.out", 2, 128);

  // Auxiliary reconstruction decoder (training only).
  add_linear(inv, "decoder.fc1", 64, static_cast<std::uint32_t>(cfg.fused_dim));
  add_linear(inv, "decoder.fc2", F, 64);

  return inv;
}

NamedTensors init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  NamedTensors w;
  SplitMix64 rng(seed);
  for (const TensorSpec& spec : model_inventory(cfg)) {
    w.add(spec.name, spec.dims);
    Tensor& t = w.at(spec.name);
    if (spec.name.ends_with(".running_mean")) {
      continue;  // zeros
    }
    if (spec.name.ends_with(".running_var")) {
      std::fill(t.data.begin(), t.data.end(), 1.0f);
      continue;
    }
    for (float& v : t.data) {
      v = static_cast<float>((rng.next_double() - 0.5) * 0.1);
    }
  }
  w.conventions_json = json{{"linear_bias", true},
                            {"conv_bias", true},
                            {"norm_affine", true},
                            {"gru_dual_bias", true},
                            {"attention_packed_qkv_bias", true},
                            {"batchnorm_inference_running_stats", true}}
                           .dump();
  return w;
}

namespace {

std::string component_of(const std::string& name) {
  if (name.starts_with("cbranch.")) return "c_branch";
  if (name.starts_with("hbranch.")) return "h_branch";
  if (name.starts_with("cbgaf.")) return "cbgaf";
  if (name.starts_with("head.")) return "head";
  if (name.starts_with("decoder.")) return "decoder";
  return "t_branch";  // feat_proj, path1..3, merge
}

}  // namespace

ParameterCount count_parameters(const ModelConfig& cfg) {
  ParameterCount count;
  for (const TensorSpec& spec : model_inventory(cfg)) {
    if (spec.name.ends_with(".running_mean") ||
        spec.name.ends_with(".running_var")) {
      continue;
    }
    std::size_t n = 1;
    for (std::uint32_t d : spec.dims) n *= d;
    count.total += n;
    count.by_component[component_of(spec.name)] += n;
  }
  return count;
}

std::string parameter_report_json(const ParameterCount& count,
                                  std::size_t reference_total) {
  json by = json::object();
  for (const auto& [name, n] : count.by_component) by[name] = n;
  double residual_pct =
      100.0 *
      (static_cast<double>(count.total) -
       static_cast<double>(reference_total)) /
      static_cast<double>(reference_total);
  return json{{"total", count.total},
              {"by_component", by},
              {"reference_total", reference_total},
              {"residual", static_cast<long long>(count.total) -
                               static_cast<long long>(reference_total)},
              {"residual_percent", residual_pct}}
      .dump(2);
}

}  // namespace bridge::tchnet
