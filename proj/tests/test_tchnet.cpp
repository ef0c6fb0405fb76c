#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bridge/common.hpp"
#include "bridge/tchnet/model.hpp"
#include "bridge/tchnet/weights.hpp"

#include <cmath>
#include <cstdlib>

using namespace bridge;
using namespace bridge::tchnet;

namespace {

MatrixRXf random_window(SplitMix64& rng, const ModelConfig& cfg) {
  MatrixRXf x(cfg.window, cfg.feat);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(r, c) = static_cast<float>(rng.next_double() * 20.0 - 10.0);
    }
  }
  return x;
}

const ModelConfig kCfg;

const NamedTensors& shared_weights() {
  static NamedTensors w = init_weights(kCfg, 1234);
  return w;
}

}  // namespace

TEST_CASE("forward shape chain: 512 / 64 / 64 / 384 / 46 / simplex") {
  SplitMix64 rng(1);
  ForwardDiagnostics d =
      model_forward(kCfg, shared_weights(), random_window(rng, kCfg), {2, 3});
  CHECK(d.h_t.size() == 512);
  CHECK(d.h_c.size() == 64);
  CHECK(d.h_h.size() == 64);
  CHECK(d.fused.size() == 384);
  CHECK(d.recon.size() == 46);
  CHECK(d.mean_features.size() == 46);
  CHECK(d.gate_t.size() == 128);
  CHECK(d.probs[0] + d.probs[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(d.probs[0] >= 0.0f);
  CHECK(d.probs[1] >= 0.0f);
  CHECK(std::isfinite(d.aux_loss));
}

TEST_CASE("gates stay in (0,1) and fusion is element-wise convex") {
  // Convexity holds on the pre-norm fused vector: check the cbgaf block
  // directly against its inputs.
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXf h_t(512), h_c(64), h_h(64);
    for (auto* v : {&h_t}) {
      for (Eigen::Index i = 0; i < v->size(); ++i)
        (*v)[i] = static_cast<float>(rng.next_double() * 4.0 - 2.0);
    }
    for (auto* v : {&h_c, &h_h}) {
      for (Eigen::Index i = 0; i < v->size(); ++i)
        (*v)[i] = static_cast<float>(rng.next_double() * 4.0 - 2.0);
    }
    CbgafOutput out = cbgaf(kCfg, shared_weights(), h_t, h_c, h_h);
    for (const Eigen::VectorXf* g : {&out.gate_t, &out.gate_c, &out.gate_h}) {
      CHECK(g->minCoeff() > 0.0f);
      CHECK(g->maxCoeff() < 1.0f);
    }
  }
}

TEST_CASE("forward is deterministic and independent of batch composition") {
  SplitMix64 rng(42);
  const std::size_t n = 6;
  std::vector<float> features;
  std::vector<std::array<int, 2>> contexts;
  for (std::size_t i = 0; i < n; ++i) {
    MatrixRXf x = random_window(rng, kCfg);
    features.insert(features.end(), x.data(), x.data() + x.size());
    contexts.push_back({static_cast<int>(i % 5), static_cast<int>(i % 6)});
  }
  auto batch = model_forward_batch(kCfg, shared_weights(), features.data(),
                                   contexts, n, 1);
  // Each sample alone must reproduce its batched output bit-for-bit.
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Map<const MatrixRXf> x(features.data() + i * kCfg.window *
                                                        kCfg.feat,
                                  kCfg.window, kCfg.feat);
    ForwardDiagnostics solo =
        model_forward(kCfg, shared_weights(), MatrixRXf(x), contexts[i]);
    CHECK(solo.probs[0] == batch[i].probs[0]);
    CHECK(solo.probs[1] == batch[i].probs[1]);
    CHECK(solo.fused.isApprox(batch[i].fused, 0.0f));
  }
  // Thread count does not change any bit.
  auto batch4 = model_forward_batch(kCfg, shared_weights(), features.data(),
                                    contexts, n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(batch[i].probs[0] == batch4[i].probs[0]);
    CHECK(batch[i].probs[1] == batch4[i].probs[1]);
    CHECK(batch[i].h_t.isApprox(batch4[i].h_t, 0.0f));
  }
}

TEST_CASE("context embeddings select rows and reject bad indices") {
  const NamedTensors& w = shared_weights();
  Eigen::VectorXf c = c_branch(kCfg, w, {3, 4});
  const Tensor& ds = w.at("cbranch.emb_ds");
  const Tensor& dev = w.at("cbranch.emb_dev");
  for (int i = 0; i < 32; ++i) {
    CHECK(c[i] == ds.data[3 * 32 + i]);
    CHECK(c[32 + i] == dev.data[4 * 32 + i]);
  }
  CHECK_THROWS_AS(c_branch(kCfg, w, {5, 0}), std::out_of_range);
  CHECK_THROWS_AS(c_branch(kCfg, w, {0, 6}), std::out_of_range);
}

TEST_CASE("all-zero weights drive every gate to exactly 0.5") {
  NamedTensors w = init_weights(kCfg, 0);
  for (const std::string& name : w.order) {
    if (name.ends_with(".running_var")) continue;  // keep variance 1
    auto& data = w.at(name).data;
    std::fill(data.begin(), data.end(), 0.0f);
  }
  SplitMix64 rng(9);
  ForwardDiagnostics d =
      model_forward(kCfg, w, random_window(rng, kCfg), {0, 0});
  for (const Eigen::VectorXf* g : {&d.gate_t, &d.gate_c, &d.gate_h}) {
    CHECK(g->minCoeff() == 0.5f);
    CHECK(g->maxCoeff() == 0.5f);
  }
  CHECK(d.probs[0] == 0.5f);
  CHECK(d.probs[1] == 0.5f);
  CHECK(std::isfinite(d.aux_loss));
}

TEST_CASE("aux decoder loss is the mean squared error over 46 features") {
  const NamedTensors& w = shared_weights();
  Eigen::VectorXf fused = Eigen::VectorXf::Constant(384, 0.3f);
  Eigen::VectorXf mean = Eigen::VectorXf::Constant(46, 0.1f);
  auto [recon, loss] = aux_decoder(kCfg, w, fused, mean);
  double expect = (recon - mean).cast<double>().squaredNorm() / 46.0;
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("focal loss reduces to cross-entropy at gamma 0, no smoothing") {
  LossConfig plain;
  plain.gamma = 0.0;
  plain.label_smoothing = 0.0;
  std::vector<Eigen::Vector2d> probs = {Eigen::Vector2d(0.7, 0.3),
                                        Eigen::Vector2d(0.2, 0.8),
                                        Eigen::Vector2d(0.6, 0.4)};
  std::vector<std::uint8_t> labels = {0, 1, 1};
  double ce = -(std::log(0.7) + std::log(0.8) + std::log(0.4)) / 3.0;
  double fl = focal_loss(probs, labels, Eigen::Vector2d::Ones(), plain);
  CHECK(std::abs(fl - ce) <= 1e-10);
}

TEST_CASE("focal loss down-weights confident examples") {
  LossConfig cfg;  // gamma 2.0, smoothing 0.05
  std::vector<std::uint8_t> one = {1};
  std::vector<Eigen::Vector2d> sure = {Eigen::Vector2d(0.05, 0.95)};
  std::vector<Eigen::Vector2d> unsure = {Eigen::Vector2d(0.45, 0.55)};
  double confident = focal_loss(sure, one, Eigen::Vector2d::Ones(), cfg);
  double uncertain = focal_loss(unsure, one, Eigen::Vector2d::Ones(), cfg);
  CHECK(confident < uncertain);
  // With no smoothing, the (1-p)^gamma factor shrinks a confident example's
  // loss far below its plain cross-entropy.
  LossConfig focal_only = cfg;
  focal_only.label_smoothing = 0.0;
  LossConfig plain;
  plain.gamma = 0.0;
  plain.label_smoothing = 0.0;
  CHECK(focal_loss(sure, one, Eigen::Vector2d::Ones(), focal_only) <
        0.5 * focal_loss(sure, one, Eigen::Vector2d::Ones(), plain));
}

TEST_CASE("batch class weights are inverse-frequency with mean 1") {
  Eigen::Vector2d w = batch_class_weights({0, 0, 0, 1});
  CHECK((w[0] + w[1]) / 2.0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[1] / w[0] == doctest::Approx(3.0).epsilon(1e-12));
  // Single-class batches fall back to (1,1).
  Eigen::Vector2d only = batch_class_weights({1, 1, 1});
  CHECK(only[0] == 1.0);
  CHECK(only[1] == 1.0);
}

TEST_CASE("total loss adds the weighted auxiliary term") {
  CHECK(total_loss(0.8, 0.2, 0.05) == doctest::Approx(0.81).epsilon(1e-12));
}

TEST_CASE("parameter accounting: deterministic, embeddings 352, within 3%") {
  ParameterCount a = count_parameters(kCfg);
  ParameterCount b = count_parameters(kCfg);
  CHECK(a.total == b.total);
  CHECK(a.by_component == b.by_component);
  CHECK(a.by_component.at("c_branch") == 352);
  const double reference = 2691696.0;
  CHECK(std::abs(static_cast<double>(a.total) - reference) / reference <=
        0.03);
  std::size_t sum = 0;
  for (const auto& [name, n] : a.by_component) sum += n;
  CHECK(sum == a.total);
  std::string report = parameter_report_json(a, 2691696);
  CHECK(report.find("residual") != std::string::npos);
  CHECK(report.find("by_component") != std::string::npos);
}

TEST_CASE("init_weights draws lie in [-0.05, 0.05] and vary with the seed") {
  NamedTensors a = init_weights(kCfg, 1);
  NamedTensors b = init_weights(kCfg, 2);
  const auto& t1 = a.at("feat_proj.fc1.weight").data;
  const auto& t2 = b.at("feat_proj.fc1.weight").data;
  CHECK(t1 != t2);
  for (float v : t1) {
    CHECK(v >= -0.05f);
    CHECK(v <= 0.05f);
  }
  // Running statistics initialize to the identity transform.
  for (float v : a.at("path2.bn.running_mean").data) CHECK(v == 0.0f);
  for (float v : a.at("path2.bn.running_var").data) CHECK(v == 1.0f);
}

TEST_CASE("model inventory matches the frozen conventions block") {
  NamedTensors w = init_weights(kCfg, 3);
  CHECK(w.conventions_json.find("gru_dual_bias") != std::string::npos);
  CHECK(w.at("path3.pos").dims == std::vector<std::uint32_t>{32, 128});
  CHECK(w.at("cbgaf.proj_t.weight").dims ==
        std::vector<std::uint32_t>{128, 512});
  CHECK(w.at("cbgaf.t.gate.weight").dims ==
        std::vector<std::uint32_t>{128, 256});
  CHECK(w.at("head.fc1.weight").dims ==
        std::vector<std::uint32_t>{256, 448});
  CHECK(w.at("merge.attn.in_proj_weight").dims ==
        std::vector<std::uint32_t>{1536, 512});
}
