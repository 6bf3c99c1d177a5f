#pragma once

#include "semg/core.hpp"

namespace semg {

inline constexpr double kMinProbability = 1e-12;

struct LossConfig {
  double focal_gamma = 2.0;
};

struct FocalLoss {
  double loss = 0.0;
  RowVec dlogits;  // gradient w.r.t. the logits that produced `probs`
  bool clamped = false;
};

/// FL = -(1 - p)^gamma log p with p the target probability, clamped below at
/// kMinProbability. gamma = 0 is plain cross-entropy.
FocalLoss focal_loss(const Eigen::Ref<const RowVec>& probs, int target, double gamma);

}  // namespace semg
