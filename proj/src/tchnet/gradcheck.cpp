#include "bridge/tchnet/gradcheck.hpp"

#include "bridge/common.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridge::tchnet {

namespace {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

// All tensors (weights, biases, inputs) live in one name-keyed map; biases
// and inputs are single-column matrices so finite differencing can treat
// every coordinate uniformly.
using Params = std::map<std::string, MatrixXd>;

constexpr int kDm = 512;   // T-branch input width
constexpr int kDs = 64;    // C/H-branch input width
constexpr int kDf = 128;   // fusion width
constexpr int kFused = 3 * kDf;
constexpr double kLnEps = 1e-5;

const char* kBranches[3] = {"t", "c", "h"};

Params make_fixture(std::uint64_t seed) {
  SplitMix64 rng(seed);
  Params p;
  auto fill = [&](const std::string& name, int rows, int cols, double scale) {
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = (rng.next_double() - 0.5) * 2.0 * scale;
      }
    }
    p[name] = std::move(m);
  };
  fill("x_t", kDm, 1, 1.0);
  fill("x_c", kDs, 1, 1.0);
  fill("x_h", kDs, 1, 1.0);
  fill("proj_t.w", kDf, kDm, 0.05);
  fill("proj_t.b", kDf, 1, 0.05);
  fill("proj_c.w", kDf, kDs, 0.05);
  fill("proj_c.b", kDf, 1, 0.05);
  fill("proj_h.w", kDf, kDs, 0.05);
  fill("proj_h.b", kDf, 1, 0.05);
  for (const char* b : kBranches) {
    std::string base(b);
    for (const char* part : {".wq", ".wk", ".wv"}) {
      fill(base + part + ".w", kDf, kDf, 0.05);
      fill(base + part + ".b", kDf, 1, 0.05);
    }
    fill(base + ".gate.w", kDf, 2 * kDf, 0.05);
    fill(base + ".gate.b", kDf, 1, 0.05);
  }
  fill("ln.gamma", kFused, 1, 0.5);
  p["ln.gamma"].array() += 1.0;  // keep the affine scale away from zero
  fill("ln.beta", kFused, 1, 0.05);
  fill("stub.w", 2, kFused, 0.05);
  fill("stub.b", 2, 1, 0.05);
  return p;
}

struct BranchCache {
  VectorXd self, q, k, v, att, gate, fused;
  double a1 = 0.0;  // attention weight on the first of the two keys
};

struct Cache {
  BranchCache br[3];
  VectorXd concat, xhat, fused_out;
  double ln_inv_std = 0.0;
  Vector2d logits, probs;
  double loss = 0.0;
};

VectorXd affine(const Params& p, const std::string& name, const VectorXd& x) {
  return p.at(name + ".w") * x + p.at(name + ".b").col(0);
}

// Attention over exactly two key/value pairs; returns the attended vector
// and stores the weight on (k1, v1) in a1.
VectorXd attend_two(const VectorXd& q, const VectorXd& k1, const VectorXd& k2,
                    const VectorXd& v1, const VectorXd& v2, double& a1) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size()));
  double l1 = q.dot(k1) * scale;
  double l2 = q.dot(k2) * scale;
  double mx = std::max(l1, l2);
  double e1 = std::exp(l1 - mx);
  double e2 = std::exp(l2 - mx);
  a1 = e1 / (e1 + e2);
  return a1 * v1 + (1.0 - a1) * v2;
}

double focal_from_probs(const Vector2d& probs, int label,
                        const Vector2d& alpha, const LossConfig& cfg) {
  double target[2] = {cfg.label_smoothing / 2.0, cfg.label_smoothing / 2.0};
  target[label] = 1.0 - cfg.label_smoothing / 2.0;
  double loss = 0.0;
  for (int c = 0; c < 2; ++c) {
    double pc = std::max(probs[c], 1e-12);
    loss -= alpha[label] * target[c] * std::pow(1.0 - pc, cfg.gamma) *
            std::log(pc);
  }
  return loss;
}

Vector2d focal_grad_probs(const Vector2d& probs, int label,
                          const Vector2d& alpha, const LossConfig& cfg) {
  double target[2] = {cfg.label_smoothing / 2.0, cfg.label_smoothing / 2.0};
  target[label] = 1.0 - cfg.label_smoothing / 2.0;
  Vector2d g;
  for (int c = 0; c < 2; ++c) {
    double pc = std::max(probs[c], 1e-12);
    double one_minus = 1.0 - pc;
    double dpow = cfg.gamma > 0.0
                      ? -cfg.gamma * std::pow(one_minus, cfg.gamma - 1.0)
                      : 0.0;
    g[c] = -alpha[label] * target[c] *
           (dpow * std::log(pc) + std::pow(one_minus, cfg.gamma) / pc);
  }
  return g;
}

Cache forward(const Params& p, int label, const Vector2d& alpha,
              const LossConfig& cfg) {
  Cache c;
  const MatrixXd* inputs[3] = {&p.at("x_t"), &p.at("x_c"), &p.at("x_h")};
  for (int i = 0; i < 3; ++i) {
    BranchCache& b = c.br[i];
    std::string base(kBranches[i]);
    b.self = affine(p, "proj_" + base, inputs[i]->col(0));
    b.q = affine(p, base + ".wq", b.self);
    b.k = affine(p, base + ".wk", b.self);
    b.v = affine(p, base + ".wv", b.self);
  }
  // Each branch attends over the other two, in branch order.
  const int others[3][2] = {{1, 2}, {0, 2}, {0, 1}};
  for (int i = 0; i < 3; ++i) {
    BranchCache& b = c.br[i];
    const BranchCache& o1 = c.br[others[i][0]];
    const BranchCache& o2 = c.br[others[i][1]];
    b.att = attend_two(b.q, o1.k, o2.k, o1.v, o2.v, b.a1);
    VectorXd joint(2 * kDf);
    joint << b.self, b.att;
    VectorXd u = p.at(std::string(kBranches[i]) + ".gate.w") * joint +
                 p.at(std::string(kBranches[i]) + ".gate.b").col(0);
    b.gate = u.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    b.fused = (b.gate.array() * b.self.array() +
               (1.0 - b.gate.array()) * b.att.array())
                  .matrix();
  }
  c.concat.resize(kFused);
  c.concat << c.br[0].fused, c.br[1].fused, c.br[2].fused;
  double mean = c.concat.mean();
  VectorXd centered = c.concat.array() - mean;
  double var = centered.squaredNorm() / kFused;
  c.ln_inv_std = 1.0 / std::sqrt(var + kLnEps);
  c.xhat = centered * c.ln_inv_std;
  c.fused_out = (c.xhat.array() * p.at("ln.gamma").col(0).array() +
                 p.at("ln.beta").col(0).array())
                    .matrix();
  c.logits = p.at("stub.w") * c.fused_out + p.at("stub.b").col(0);
  double mx = c.logits.maxCoeff();
  c.probs = (c.logits.array() - mx).exp();
  c.probs /= c.probs.sum();
  c.loss = focal_from_probs(c.probs, label, alpha, cfg);
  return c;
}

Params analytic_gradients(const Params& p, int label, const Vector2d& alpha,
                          const LossConfig& cfg, const Cache& c) {
  Params g;
  for (const auto& [name, m] : p) g[name] = MatrixXd::Zero(m.rows(), m.cols());

  // Loss -> logits (softmax Jacobian folded in).
  Vector2d dp = focal_grad_probs(c.probs, label, alpha, cfg);
  double dot = dp.dot(c.probs);
  Vector2d dlogits = (c.probs.array() * (dp.array() - dot)).matrix();

  // Stub (parameters tracked for completeness, not part of CB-GAF).
  g["stub.w"] += dlogits * c.fused_out.transpose();
  g["stub.b"].col(0) += dlogits;
  VectorXd dfused_out = p.at("stub.w").transpose() * dlogits;

  // Layer norm.
  g["ln.gamma"].col(0) += (dfused_out.array() * c.xhat.array()).matrix();
  g["ln.beta"].col(0) += dfused_out;
  VectorXd dxhat =
      (dfused_out.array() * p.at("ln.gamma").col(0).array()).matrix();
  double mean_dxhat = dxhat.mean();
  double mean_dxhat_xhat = (dxhat.array() * c.xhat.array()).mean();
  VectorXd dconcat = c.ln_inv_std *
                     (dxhat.array() - mean_dxhat -
                      c.xhat.array() * mean_dxhat_xhat)
                         .matrix();

  const double scale = 1.0 / std::sqrt(static_cast<double>(kDf));
  const int others[3][2] = {{1, 2}, {0, 2}, {0, 1}};
  VectorXd dself[3], dq[3], dk[3], dv[3];
  for (int i = 0; i < 3; ++i) {
    dself[i] = VectorXd::Zero(kDf);
    dq[i] = VectorXd::Zero(kDf);
    dk[i] = VectorXd::Zero(kDf);
    dv[i] = VectorXd::Zero(kDf);
  }

  for (int i = 0; i < 3; ++i) {
    const BranchCache& b = c.br[i];
    std::string base(kBranches[i]);
    VectorXd dfused = dconcat.segment(i * kDf, kDf);

    // fused = g * self + (1-g) * att
    VectorXd datt = (dfused.array() * (1.0 - b.gate.array())).matrix();
    dself[i] += (dfused.array() * b.gate.array()).matrix();
    VectorXd dgate = (dfused.array() * (b.self - b.att).array()).matrix();
    VectorXd du = (dgate.array() * b.gate.array() * (1.0 - b.gate.array()))
                      .matrix();
    VectorXd joint(2 * kDf);
    joint << b.self, b.att;
    g[base + ".gate.w"] += du * joint.transpose();
    g[base + ".gate.b"].col(0) += du;
    VectorXd djoint = p.at(base + ".gate.w").transpose() * du;
    dself[i] += djoint.head(kDf);
    datt += djoint.tail(kDf);

    // att = a1 v1 + (1-a1) v2 with softmaxed logits q.k/sqrt(d).
    int j1 = others[i][0], j2 = others[i][1];
    const BranchCache& o1 = c.br[j1];
    const BranchCache& o2 = c.br[j2];
    double a1 = b.a1, a2 = 1.0 - b.a1;
    dv[j1] += a1 * datt;
    dv[j2] += a2 * datt;
    double da1 = datt.dot(o1.v);
    double da2 = datt.dot(o2.v);
    double davg = a1 * da1 + a2 * da2;
    double dl1 = a1 * (da1 - davg);
    double dl2 = a2 * (da2 - davg);
    dq[i] += scale * (dl1 * o1.k + dl2 * o2.k);
    dk[j1] += scale * dl1 * b.q;
    dk[j2] += scale * dl2 * b.q;
  }

  const char* inputs[3] = {"x_t", "x_c", "x_h"};
  for (int i = 0; i < 3; ++i) {
    const BranchCache& b = c.br[i];
    std::string base(kBranches[i]);
    struct Hop {
      const char* layer;
      const VectorXd* grad;
    } hops[3] = {{".wq", &dq[i]}, {".wk", &dk[i]}, {".wv", &dv[i]}};
    for (const Hop& hop : hops) {
      g[base + hop.layer + ".w"] += *hop.grad * b.self.transpose();
      g[base + hop.layer + ".b"].col(0) += *hop.grad;
      dself[i] += p.at(base + hop.layer + ".w").transpose() * *hop.grad;
    }
    g["proj_" + base + ".w"] += dself[i] * p.at(inputs[i]).col(0).transpose();
    g["proj_" + base + ".b"].col(0) += dself[i];
    g[inputs[i]].col(0) += p.at("proj_" + base + ".w").transpose() * dself[i];
  }
  return g;
}

}  // namespace

Eigen::Vector2d focal_grad_logits(const Eigen::Vector2d& logits, int label,
                                  const Eigen::Vector2d& alpha,
                                  const LossConfig& cfg) {
  double mx = logits.maxCoeff();
  Vector2d probs = (logits.array() - mx).exp();
  probs /= probs.sum();
  Vector2d dp = focal_grad_probs(probs, label, alpha, cfg);
  double dot = dp.dot(probs);
  return (probs.array() * (dp.array() - dot)).matrix();
}

GradcheckResult gradcheck_cbgaf_focal(std::uint64_t seed,
                                      const LossConfig& loss,
                                      std::size_t coords_per_tensor) {
  Params params = make_fixture(seed);
  SplitMix64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const int label = static_cast<int>(rng.next_below(2));
  const Vector2d alpha(1.0, 1.0);

  Cache cache = forward(params, label, alpha, loss);
  Params grads = analytic_gradients(params, label, alpha, loss, cache);

  const double step = 1e-5;
  GradcheckResult result;
  for (auto& [name, tensor] : params) {
    if (name.starts_with("stub.")) continue;  // outside the checked block
    const MatrixXd& analytic = grads.at(name);
    const std::size_t total = static_cast<std::size_t>(tensor.size());
    std::size_t n_check = std::min(coords_per_tensor, total);
    for (std::size_t s = 0; s < n_check; ++s) {
      std::size_t flat = total <= coords_per_tensor
                             ? s
                             : static_cast<std::size_t>(
                                   rng.next_below(total));
      Eigen::Index r = static_cast<Eigen::Index>(flat) % tensor.rows();
      Eigen::Index col = static_cast<Eigen::Index>(flat) / tensor.rows();
      double saved = tensor(r, col);
      tensor(r, col) = saved + step;
      double up = forward(params, label, alpha, loss).loss;
      tensor(r, col) = saved - step;
      double down = forward(params, label, alpha, loss).loss;
      tensor(r, col) = saved;
      double numeric = (up - down) / (2.0 * step);
      double a = analytic(r, col);
      if (!std::isfinite(a) || !std::isfinite(numeric)) {
        throw std::runtime_error("gradcheck_cbgaf_focal: non-finite gradient");
      }
      double rel = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
      result.max_rel_err = std::max(result.max_rel_err, rel);
      ++result.checked_coords;
    }
  }
  return result;
}

}  // namespace bridge::tchnet
