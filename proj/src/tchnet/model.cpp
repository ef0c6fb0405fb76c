#include "bridge/tchnet/model.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace bridge::tchnet {

namespace {

using Eigen::VectorXf;
using MapMat = Eigen::Map<const MatrixRXf>;
using MapVec = Eigen::Map<const VectorXf>;

MapMat mat2(const NamedTensors& w, const std::string& name) {
  const Tensor& t = w.at(name);
  if (t.dims.size() != 2) throw std::runtime_error("expected rank-2: " + name);
  return MapMat(t.data.data(), t.dims[0], t.dims[1]);
}

MapVec vec1(const NamedTensors& w, const std::string& name) {
  const Tensor& t = w.at(name);
  if (t.dims.size() != 1) throw std::runtime_error("expected rank-1: " + name);
  return MapVec(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

VectorXf linear(const NamedTensors& w, const std::string& prefix,
                const VectorXf& x) {
  return mat2(w, prefix + ".weight") * x + vec1(w, prefix + ".bias");
}

// Per-row affine: X (rows x in) -> rows x out.
MatrixRXf linear_rows(const NamedTensors& w, const std::string& prefix,
                      const MatrixRXf& X) {
  MatrixRXf out = X * mat2(w, prefix + ".weight").transpose();
  out.rowwise() += vec1(w, prefix + ".bias").transpose();
  return out;
}

constexpr float kNormEps = 1e-5f;

VectorXf layer_norm(const NamedTensors& w, const std::string& prefix,
                    const VectorXf& x) {
  float mean = x.mean();
  VectorXf centered = x.array() - mean;
  float var = centered.squaredNorm() / static_cast<float>(x.size());
  float inv = 1.0f / std::sqrt(var + kNormEps);
  return (centered.array() * inv * vec1(w, prefix + ".gamma").array() +
          vec1(w, prefix + ".beta").array())
      .matrix();
}

void layer_norm_rows(const NamedTensors& w, const std::string& prefix,
                     MatrixRXf& X) {
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    VectorXf row = X.row(r).transpose();
    X.row(r) = layer_norm(w, prefix, row).transpose();
  }
}

VectorXf batch_norm(const NamedTensors& w, const std::string& prefix,
                    const VectorXf& x) {
  auto gamma = vec1(w, prefix + ".gamma");
  auto beta = vec1(w, prefix + ".beta");
  auto mean = vec1(w, prefix + ".running_mean");
  auto var = vec1(w, prefix + ".running_var");
  return (((x - mean).array() / (var.array() + kNormEps).sqrt()) *
              gamma.array() +
          beta.array())
      .matrix();
}

// Channels-first batch norm: rows of U are channels.
void batch_norm_channels(const NamedTensors& w, const std::string& prefix,
                         MatrixRXf& U) {
  auto gamma = vec1(w, prefix + ".gamma");
  auto beta = vec1(w, prefix + ".beta");
  auto mean = vec1(w, prefix + ".running_mean");
  auto var = vec1(w, prefix + ".running_var");
  for (Eigen::Index c = 0; c < U.rows(); ++c) {
    float inv = 1.0f / std::sqrt(var[c] + kNormEps);
    U.row(c) = ((U.row(c).array() - mean[c]) * inv * gamma[c] + beta[c]);
  }
}

inline float gelu(float x) {
  return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f));
}

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// Depthwise conv, kernel 3, stride 1, same zero padding, channels-first.
MatrixRXf depthwise_conv3(const NamedTensors& w, const std::string& prefix,
                          const MatrixRXf& U) {
  auto weight = mat2(w, prefix + ".weight");  // C x 3
  auto bias = vec1(w, prefix + ".bias");
  MatrixRXf out(U.rows(), U.cols());
  const Eigen::Index L = U.cols();
  for (Eigen::Index c = 0; c < U.rows(); ++c) {
    for (Eigen::Index t = 0; t < L; ++t) {
      float acc = bias[c];
      for (int k = 0; k < 3; ++k) {
        Eigen::Index src = t + k - 1;
        if (src >= 0 && src < L) acc += weight(c, k) * U(c, src);
      }
      out(c, t) = acc;
    }
  }
  return out;
}

// Pointwise 1x1 conv: C_in x L -> C_out x L.
MatrixRXf pointwise_conv(const NamedTensors& w, const std::string& prefix,
                         const MatrixRXf& U) {
  MatrixRXf out = mat2(w, prefix + ".weight") * U;
  out.colwise() += vec1(w, prefix + ".bias");
  return out;
}

MatrixRXf maxpool2(const MatrixRXf& U) {
  MatrixRXf out(U.rows(), U.cols() / 2);
  for (Eigen::Index t = 0; t < out.cols(); ++t) {
    out.col(t) = U.col(2 * t).cwiseMax(U.col(2 * t + 1));
  }
  return out;
}

// Adaptive average pooling over the time (column) axis; bucket i averages
// columns [floor(i*L/out), ceil((i+1)*L/out)).
MatrixRXf adaptive_avg_cols(const MatrixRXf& U, Eigen::Index out_len) {
  const Eigen::Index L = U.cols();
  MatrixRXf out(U.rows(), out_len);
  for (Eigen::Index i = 0; i < out_len; ++i) {
    Eigen::Index lo = i * L / out_len;
    Eigen::Index hi = ((i + 1) * L + out_len - 1) / out_len;
    out.col(i) = U.middleCols(lo, hi - lo).rowwise().mean();
  }
  return out;
}

// One bidirectional GRU layer over X (T x In) -> T x 2H. Gate order in the
// packed weights is reset, update, candidate; the candidate recurrent term
// is gated by reset before the tanh.
MatrixRXf bigru_layer(const NamedTensors& w, const std::string& prefix,
                      const MatrixRXf& X, int hidden) {
  const Eigen::Index T = X.rows();
  const Eigen::Index H = hidden;
  MatrixRXf out(T, 2 * H);
  for (int dir = 0; dir < 2; ++dir) {
    std::string p = prefix + (dir == 0 ? ".fw" : ".bw");
    auto w_ih = mat2(w, p + ".w_ih");
    auto w_hh = mat2(w, p + ".w_hh");
    auto b_ih = vec1(w, p + ".b_ih");
    auto b_hh = vec1(w, p + ".b_hh");
    VectorXf h = VectorXf::Zero(H);
    for (Eigen::Index step = 0; step < T; ++step) {
      Eigen::Index t = dir == 0 ? step : T - 1 - step;
      VectorXf gi = w_ih * X.row(t).transpose() + b_ih;
      VectorXf gh = w_hh * h + b_hh;
      auto r = (gi.segment(0, H) + gh.segment(0, H))
                   .unaryExpr([](float v) { return sigmoid(v); });
      auto z = (gi.segment(H, H) + gh.segment(H, H))
                   .unaryExpr([](float v) { return sigmoid(v); });
      VectorXf n = (gi.segment(2 * H, H).array() +
                    r.array() * gh.segment(2 * H, H).array())
                       .tanh()
                       .matrix();
      h = ((1.0f - z.array()) * n.array() + z.array() * h.array()).matrix();
      out.row(t).segment(dir * H, H) = h.transpose();
    }
  }
  return out;
}

void softmax_rows_inplace(MatrixRXf& X) {
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    float mx = X.row(r).maxCoeff();
    X.row(r) = (X.row(r).array() - mx).exp();
    X.row(r) /= X.row(r).sum();
  }
}

// Multi-head self-attention on X (S x d) with packed Q/K/V.
MatrixRXf mha(const NamedTensors& w, const std::string& prefix,
              const MatrixRXf& X, int heads) {
  const Eigen::Index d = X.cols();
  const Eigen::Index dh = d / heads;
  MatrixRXf qkv = X * mat2(w, prefix + ".in_proj_weight").transpose();
  qkv.rowwise() += vec1(w, prefix + ".in_proj_bias").transpose();
  MatrixRXf concat(X.rows(), d);
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  for (int h = 0; h < heads; ++h) {
    auto q = qkv.middleCols(h * dh, dh);
    auto k = qkv.middleCols(d + h * dh, dh);
    auto v = qkv.middleCols(2 * d + h * dh, dh);
    MatrixRXf scores = q * k.transpose() * scale;
    softmax_rows_inplace(scores);
    concat.middleCols(h * dh, dh) = scores * v;
  }
  MatrixRXf out = concat * mat2(w, prefix + ".out_proj.weight").transpose();
  out.rowwise() += vec1(w, prefix + ".out_proj.bias").transpose();
  return out;
}

// Pre-LayerNorm transformer encoder layer (ReLU feed-forward).
MatrixRXf transformer_layer(const NamedTensors& w, const std::string& prefix,
                            MatrixRXf X, int heads) {
  MatrixRXf normed = X;
  layer_norm_rows(w, prefix + ".ln1", normed);
  X += mha(w, prefix + ".attn", normed, heads);
  normed = X;
  layer_norm_rows(w, prefix + ".ln2", normed);
  MatrixRXf hidden = linear_rows(w, prefix + ".ffn.fc1", normed)
                         .cwiseMax(0.0f);
  X += linear_rows(w, prefix + ".ffn.fc2", hidden);
  return X;
}

}  // namespace

MatrixRXf feat_proj(const ModelConfig& cfg, const NamedTensors& w,
                    const MatrixRXf& X) {
  if (X.rows() != cfg.window || X.cols() != cfg.feat) {
    throw std::runtime_error("feat_proj: input shape mismatch");
  }
  MatrixRXf out(X.rows(), X.cols());
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    VectorXf x = X.row(t).transpose();
    VectorXf h = linear(w, "feat_proj.fc1", x);
    h = layer_norm(w, "feat_proj.ln1", h);
    h = h.unaryExpr([](float v) { return gelu(v); });
    VectorXf y = linear(w, "feat_proj.fc2", h);
    y = layer_norm(w, "feat_proj.ln2", y);
    out.row(t) = (x + y).transpose();
  }
  return out;
}

MatrixRXf resconvse_block(const NamedTensors& w, const std::string& prefix,
                          const MatrixRXf& U) {
  const auto c_out = static_cast<Eigen::Index>(
      w.at(prefix + ".pw1.weight").dims[0]);

  MatrixRXf h = depthwise_conv3(w, prefix + ".dw1", U);
  h = pointwise_conv(w, prefix + ".pw1", h);
  batch_norm_channels(w, prefix + ".bn1", h);
  h = h.cwiseMax(0.0f);
  h = depthwise_conv3(w, prefix + ".dw2", h);
  h = pointwise_conv(w, prefix + ".pw2", h);
  batch_norm_channels(w, prefix + ".bn2", h);
  h = h.cwiseMax(0.0f);

  // Squeeze-excitation: channel gate from globally pooled activations.
  VectorXf pooled = h.rowwise().mean();
  VectorXf s = linear(w, prefix + ".se.fc1", pooled).cwiseMax(0.0f);
  VectorXf gate = linear(w, prefix + ".se.fc2", s)
                      .unaryExpr([](float v) { return sigmoid(v); });
  for (Eigen::Index c = 0; c < h.rows(); ++c) h.row(c) *= gate[c];

  MatrixRXf skip;
  if (U.rows() == c_out) {
    skip = U;
  } else {
    skip = pointwise_conv(w, prefix + ".skip", U);
    batch_norm_channels(w, prefix + ".skip_bn", skip);
  }
  return (h + skip).cwiseMax(0.0f);
}

Eigen::VectorXf t_branch(const ModelConfig& cfg, const NamedTensors& w,
                         const MatrixRXf& X_tilde) {
  const MatrixRXf channels_first = X_tilde.transpose();  // F x W

  // Path 1: ResConvSE frontend to the 8-step grid, then 2-layer BiGRU.
  MatrixRXf u = maxpool2(resconvse_block(w, "path1.block1", channels_first));
  u = maxpool2(resconvse_block(w, "path1.block2", u));
  u = adaptive_avg_cols(resconvse_block(w, "path1.block3", u), cfg.grid);
  MatrixRXf g1 = bigru_layer(w, "path1.gru.l0", u.transpose(),
                             cfg.gru1_hidden);
  g1 = bigru_layer(w, "path1.gru.l1", g1, cfg.gru1_hidden);  // 8 x 256

  // Path 2: strided conv (k=3, s=2, p=1), BiGRU, pool to the grid.
  const Tensor& conv = w.at("path2.conv.weight");  // [64, 46, 3]
  auto conv_bias = vec1(w, "path2.conv.bias");
  const Eigen::Index l_out = cfg.window / 2;
  MatrixRXf v(conv.dims[0], l_out);
  for (std::uint32_t o = 0; o < conv.dims[0]; ++o) {
    for (Eigen::Index t = 0; t < l_out; ++t) {
      float acc = conv_bias[o];
      for (int k = 0; k < 3; ++k) {
        Eigen::Index src = 2 * t + k - 1;
        if (src < 0 || src >= cfg.window) continue;
        const float* wk = conv.data.data() + (o * conv.dims[1] + 0) * 3;
        for (std::uint32_t c = 0; c < conv.dims[1]; ++c) {
          acc += wk[c * 3 + static_cast<std::uint32_t>(k)] *
                 channels_first(c, src);
        }
      }
      v(o, t) = acc;
    }
  }
  batch_norm_channels(w, "path2.bn", v);
  v = v.cwiseMax(0.0f);
  MatrixRXf g2 = bigru_layer(w, "path2.gru.l0", v.transpose(),
                             cfg.gru2_hidden);  // 16 x 128
  g2 = adaptive_avg_cols(g2.transpose(), cfg.grid).transpose();  // 8 x 128

  // Path 3: full-resolution pre-LN transformer with CLS readout dropped.
  MatrixRXf tokens = linear_rows(w, "path3.proj", X_tilde);
  tokens += mat2(w, "path3.pos");
  MatrixRXf seq(tokens.rows() + 1, tokens.cols());
  seq.row(0) = vec1(w, "path3.cls").transpose();
  seq.bottomRows(tokens.rows()) = tokens;
  for (int l = 0; l < cfg.transformer_layers; ++l) {
    seq = transformer_layer(w, "path3.layer" + std::to_string(l), seq,
                            cfg.transformer_heads);
  }
  MatrixRXf g3 = adaptive_avg_cols(
                     seq.bottomRows(tokens.rows()).transpose(), cfg.grid)
                     .transpose();  // 8 x 128

  // Merge onto the shared grid, self-attend, mean-pool.
  MatrixRXf cat(cfg.grid, cfg.merged_dim);
  cat << g1, g2, g3;
  MatrixRXf normed = cat;
  layer_norm_rows(w, "merge.ln", normed);
  MatrixRXf attended = mha(w, "merge.attn", normed, cfg.transformer_heads);
  return attended.colwise().mean().transpose();
}

Eigen::VectorXf h_branch(const ModelConfig& cfg, const NamedTensors& w,
                         const Eigen::VectorXf& mean_features) {
  (void)cfg;
  VectorXf h = batch_norm(w, "hbranch.bn1",
                          linear(w, "hbranch.fc1", mean_features));
  h = h.unaryExpr([](float v) { return gelu(v); });
  h = batch_norm(w, "hbranch.bn2", linear(w, "hbranch.fc2", h));
  return h.unaryExpr([](float v) { return gelu(v); });
}

Eigen::VectorXf c_branch(const ModelConfig& cfg, const NamedTensors& w,
                         const std::array<int, 2>& ctx) {
  if (ctx[0] < 0 || ctx[0] > 4 || ctx[1] < 0 || ctx[1] > 5) {
    throw std::out_of_range("c_branch: context index out of range");
  }
  auto ds = mat2(w, "cbranch.emb_ds");
  auto dev = mat2(w, "cbranch.emb_dev");
  VectorXf out(2 * cfg.embed_dim);
  out.head(cfg.embed_dim) = ds.row(ctx[0]).transpose();
  out.tail(cfg.embed_dim) = dev.row(ctx[1]).transpose();
  return out;
}

namespace {

// Scaled dot-product over exactly two key/value pairs.
VectorXf attend_two(const VectorXf& q, const VectorXf& k1, const VectorXf& k2,
                    const VectorXf& v1, const VectorXf& v2) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(q.size()));
  float l1 = q.dot(k1) * scale;
  float l2 = q.dot(k2) * scale;
  float mx = std::max(l1, l2);
  float e1 = std::exp(l1 - mx);
  float e2 = std::exp(l2 - mx);
  float a1 = e1 / (e1 + e2);
  return a1 * v1 + (1.0f - a1) * v2;
}

}  // namespace

CbgafOutput cbgaf(const ModelConfig& cfg, const NamedTensors& w,
                  const Eigen::VectorXf& h_t, const Eigen::VectorXf& h_c,
                  const Eigen::VectorXf& h_h) {
  VectorXf t = linear(w, "cbgaf.proj_t", h_t);
  VectorXf c = linear(w, "cbgaf.proj_c", h_c);
  VectorXf h = linear(w, "cbgaf.proj_h", h_h);

  auto key = [&](const char* b, const VectorXf& x) {
    return linear(w, std::string("cbgaf.") + b + ".wk", x);
  };
  auto value = [&](const char* b, const VectorXf& x) {
    return linear(w, std::string("cbgaf.") + b + ".wv", x);
  };
  VectorXf kt = key("t", t), kc = key("c", c), kh = key("h", h);
  VectorXf vt = value("t", t), vc = value("c", c), vh = value("h", h);

  VectorXf att_t = attend_two(linear(w, "cbgaf.t.wq", t), kc, kh, vc, vh);
  VectorXf att_c = attend_two(linear(w, "cbgaf.c.wq", c), kt, kh, vt, vh);
  VectorXf att_h = attend_two(linear(w, "cbgaf.h.wq", h), kt, kc, vt, vc);

  auto gated = [&](const char* b, const VectorXf& self,
                   const VectorXf& attended, VectorXf& gate_out) {
    VectorXf joint(2 * cfg.fusion_dim);
    joint << self, attended;
    gate_out = linear(w, std::string("cbgaf.") + b + ".gate", joint)
                   .unaryExpr([](float v) { return sigmoid(v); });
    return (gate_out.array() * self.array() +
            (1.0f - gate_out.array()) * attended.array())
        .matrix();
  };

  CbgafOutput out;
  VectorXf ft = gated("t", t, att_t, out.gate_t);
  VectorXf fc = gated("c", c, att_c, out.gate_c);
  VectorXf fh = gated("h", h, att_h, out.gate_h);
  VectorXf concat(cfg.fused_dim);
  concat << ft, fc, fh;
  out.fused = layer_norm(w, "cbgaf.ln", concat);
  return out;
}

Eigen::Vector2f head(const ModelConfig& cfg, const NamedTensors& w,
                     const Eigen::VectorXf& fused,
                     const Eigen::VectorXf& mean_features) {
  VectorXf r = batch_norm(w, "head.raw_bn",
                          linear(w, "head.raw", mean_features))
                   .unaryExpr([](float v) { return gelu(v); });
  VectorXf z(cfg.classifier_in);
  z << fused, r;
  VectorXf z1 = batch_norm(w, "head.bn1", linear(w, "head.fc1", z))
                    .unaryExpr([](float v) { return gelu(v); });
  VectorXf z2 = batch_norm(w, "head.bn2", linear(w, "head.fc2", z1))
                    .unaryExpr([](float v) { return gelu(v); });
  z2 += linear(w, "head.skip", z);
  VectorXf logits = linear(w, "head.out", z2);
  float mx = logits.maxCoeff();
  Eigen::Vector2f probs = (logits.array() - mx).exp();
  probs /= probs.sum();
  return probs;
}

std::pair<Eigen::VectorXf, double> aux_decoder(
    const ModelConfig& cfg, const NamedTensors& w,
    const Eigen::VectorXf& fused, const Eigen::VectorXf& mean_features) {
  VectorXf hidden = linear(w, "decoder.fc1", fused)
                        .unaryExpr([](float v) { return gelu(v); });
  VectorXf recon = linear(w, "decoder.fc2", hidden);
  double loss = (recon - mean_features).cast<double>().squaredNorm() /
                static_cast<double>(cfg.feat);
  return {recon, loss};
}

ForwardDiagnostics model_forward(const ModelConfig& cfg,
                                 const NamedTensors& w, const MatrixRXf& X,
                                 const std::array<int, 2>& ctx) {
  ForwardDiagnostics d;
  MatrixRXf projected = feat_proj(cfg, w, X);
  d.mean_features = projected.colwise().mean().transpose();
  d.h_t = t_branch(cfg, w, projected);
  d.h_h = h_branch(cfg, w, d.mean_features);
  d.h_c = c_branch(cfg, w, ctx);
  CbgafOutput fusion = cbgaf(cfg, w, d.h_t, d.h_c, d.h_h);
  d.gate_t = std::move(fusion.gate_t);
  d.gate_c = std::move(fusion.gate_c);
  d.gate_h = std::move(fusion.gate_h);
  d.fused = std::move(fusion.fused);
  d.probs = head(cfg, w, d.fused, d.mean_features);
  auto [recon, aux] = aux_decoder(cfg, w, d.fused, d.mean_features);
  d.recon = std::move(recon);
  d.aux_loss = aux;
  return d;
}

int thread_count_from_env() {
  const char* env = std::getenv("BRIDGE_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

std::vector<ForwardDiagnostics> model_forward_batch(
    const ModelConfig& cfg, const NamedTensors& w, const float* features,
    const std::vector<std::array<int, 2>>& contexts, std::size_t count,
    int threads) {
  if (threads <= 0) threads = thread_count_from_env();
  std::vector<ForwardDiagnostics> out(count);
  auto worker = [&](std::size_t begin, std::size_t end) {
    const std::size_t elems = static_cast<std::size_t>(cfg.window) *
                              static_cast<std::size_t>(cfg.feat);
    for (std::size_t i = begin; i < end; ++i) {
      Eigen::Map<const MatrixRXf> X(features + i * elems, cfg.window,
                                    cfg.feat);
      out[i] = model_forward(cfg, w, MatrixRXf(X), contexts[i]);
    }
  };
  if (threads == 1 || count < 2) {
    worker(0, count);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (count + static_cast<std::size_t>(threads) - 1) /
                        static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      std::size_t begin = static_cast<std::size_t>(t) * chunk;
      if (begin >= count) break;
      pool.emplace_back(worker, begin, std::min(count, begin + chunk));
    }
    for (std::thread& th : pool) th.join();
  }
  return out;
}

Eigen::Vector2d batch_class_weights(const std::vector<std::uint8_t>& labels) {
  std::size_t ones = 0;
  for (std::uint8_t l : labels) ones += l;
  std::size_t zeros = labels.size() - ones;
  if (zeros == 0 || ones == 0) return Eigen::Vector2d::Ones();
  double n = static_cast<double>(labels.size());
  Eigen::Vector2d raw(n / static_cast<double>(zeros),
                      n / static_cast<double>(ones));
  return raw * (2.0 / raw.sum());  // mean weight = 1
}

double focal_loss(const std::vector<Eigen::Vector2d>& probs,
                  const std::vector<std::uint8_t>& labels,
                  const Eigen::Vector2d& alpha, const LossConfig& cfg) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw std::invalid_argument("focal_loss: empty or mismatched batch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int y = labels[i];
    double target[2] = {cfg.label_smoothing / 2.0,
                        cfg.label_smoothing / 2.0};
    target[y] = 1.0 - cfg.label_smoothing / 2.0;
    double loss = 0.0;
    for (int c = 0; c < 2; ++c) {
      double p = std::max(probs[i][c], 1e-12);
      loss -= alpha[y] * target[c] * std::pow(1.0 - p, cfg.gamma) *
              std::log(p);
    }
    sum += loss;
  }
  return sum / static_cast<double>(probs.size());
}

}  // namespace bridge::tchnet
