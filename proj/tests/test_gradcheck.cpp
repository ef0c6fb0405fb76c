#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bridge/tchnet/gradcheck.hpp"

#include <cmath>

using namespace bridge::tchnet;

TEST_CASE("fusion-block gradients match finite differences on 10 fixtures") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GradcheckResult r = gradcheck_cbgaf_focal(seed);
    CAPTURE(seed);
    CHECK(r.checked_coords > 0);
    CHECK(r.max_rel_err <= 1e-4);
  }
}

TEST_CASE("gradcheck is deterministic for a given seed") {
  GradcheckResult a = gradcheck_cbgaf_focal(77);
  GradcheckResult b = gradcheck_cbgaf_focal(77);
  CHECK(a.max_rel_err == b.max_rel_err);
  CHECK(a.checked_coords == b.checked_coords);
}

TEST_CASE("focal logit gradient reduces to cross-entropy at gamma 0") {
  LossConfig plain;
  plain.gamma = 0.0;
  plain.label_smoothing = 0.0;
  Eigen::Vector2d alpha(1.0, 1.0);
  for (double l0 : {-2.0, 0.0, 1.5}) {
    for (double l1 : {-1.0, 0.0, 3.0}) {
      Eigen::Vector2d logits(l0, l1);
      Eigen::Vector2d probs = (logits.array() - logits.maxCoeff()).exp();
      probs /= probs.sum();
      for (int label : {0, 1}) {
        Eigen::Vector2d grad = focal_grad_logits(logits, label, alpha, plain);
        // Closed form: softmax(logits) - onehot(label).
        Eigen::Vector2d expect = probs;
        expect[label] -= 1.0;
        CHECK(std::abs(grad[0] - expect[0]) <= 1e-10);
        CHECK(std::abs(grad[1] - expect[1]) <= 1e-10);
      }
    }
  }
}

TEST_CASE("focal logit gradient is finite at extreme logits") {
  LossConfig cfg;  // gamma 2, smoothing 0.05
  Eigen::Vector2d alpha(0.5, 1.5);
  Eigen::Vector2d grad =
      focal_grad_logits(Eigen::Vector2d(40.0, -40.0), 1, alpha, cfg);
  CHECK(std::isfinite(grad[0]));
  CHECK(std::isfinite(grad[1]));
  Eigen::Vector2d zero =
      focal_grad_logits(Eigen::Vector2d(0.0, 0.0), 0, alpha, cfg);
  CHECK(std::isfinite(zero[0]));
  CHECK(std::isfinite(zero[1]));
}

TEST_CASE("gradcheck also verifies the numerically sampled loss surface") {
  // With gamma 0 and no smoothing the same machinery must still agree.
  LossConfig plain;
  plain.gamma = 0.0;
  plain.label_smoothing = 0.0;
  GradcheckResult r = gradcheck_cbgaf_focal(5, plain);
  CHECK(r.max_rel_err <= 1e-4);
}
