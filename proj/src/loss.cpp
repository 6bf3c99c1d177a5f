#include "semg/loss.hpp"

#include <cmath>
#include <string>

namespace semg {

FocalLoss focal_loss(const Eigen::Ref<const RowVec>& probs, int target, double gamma) {
  if (target < 0 || target >= probs.cols())
    throw ValidationError("focal_loss: target " + std::to_string(target) + " out of range");
  FocalLoss out;
  double p = probs(target);
  if (p < kMinProbability) {
    p = kMinProbability;
    out.clamped = true;
  }
  const double q = 1.0 - p;
  const double log_p = std::log(p);
  out.loss = -std::pow(q, gamma) * log_p;

  // g = p dFL/dp; then dFL/dz_j = g (delta_j - probs_j) through the softmax.
  // The first term vanishes as p -> 1 for any gamma > 0.
  const double focusing = (gamma == 0.0 || q <= 0.0) ? 0.0 : gamma * std::pow(q, gamma - 1.0) * p * log_p;
  const double g = focusing - std::pow(q, gamma);
  out.dlogits = -g * probs;
  out.dlogits(target) += g;
  return out;
}

}  // namespace semg
