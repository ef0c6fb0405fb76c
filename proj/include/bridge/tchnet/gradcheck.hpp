#pragma once

#include "bridge/tchnet/config.hpp"

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>

namespace bridge::tchnet {

struct GradcheckResult {
  double max_rel_err = 0.0;
  std::size_t checked_coords = 0;
};

// Verifies analytic gradients of the class-weighted focal loss taken through
// the CB-GAF fusion block and a linear classification stub, with respect to
// every CB-GAF parameter and the three branch inputs. Gradients are computed
// in double precision and compared coordinate-wise against central finite
// differences (step 1e-5) on a seeded random subset of coordinates per
// tensor; the relative error is |analytic - numeric| / max(1, |numeric|).
// Throws on non-finite gradients.
GradcheckResult gradcheck_cbgaf_focal(std::uint64_t seed,
                                      const LossConfig& loss = LossConfig{},
                                      std::size_t coords_per_tensor = 16);

// Analytic gradient of the single-sample focal loss with respect to the
// logits. With gamma = 0, smoothing = 0, alpha = (1,1) it reduces to the
// cross-entropy gradient softmax(logits) - onehot(label).
Eigen::Vector2d focal_grad_logits(const Eigen::Vector2d& logits, int label,
                                  const Eigen::Vector2d& alpha,
                                  const LossConfig& cfg);

}  // namespace bridge::tchnet
