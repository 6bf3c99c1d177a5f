#include "semg/metrics.hpp"

#include <cmath>
#include <random>
#include <string>

namespace semg {

ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
  if (predicted.size() != truth.size())
    throw ValidationError("prediction count " + std::to_string(predicted.size()) + " != truth count " +
                          std::to_string(truth.size()));
  ConfusionMatrix cm{CountMatrix::Zero(num_classes, num_classes)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes)
      throw ValidationError("label out of range at index " + std::to_string(i));
    ++cm.counts(truth[i], predicted[i]);
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  return total == 0 ? 0.0 : static_cast<double>(cm.counts.trace()) / static_cast<double>(total);
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int present = 0;
  for (Index k = 0; k < cm.counts.rows(); ++k) {
    const auto support = cm.counts.row(k).sum();
    if (support == 0) continue;
    sum += static_cast<double>(cm.counts(k, k)) / static_cast<double>(support);
    ++present;
  }
  return present == 0 ? 0.0 : sum / present;
}

double matthews_corrcoef(const ConfusionMatrix& cm) {
  const Eigen::ArrayXd t = cm.counts.rowwise().sum().cast<double>().array();
  const Eigen::ArrayXd p = cm.counts.colwise().sum().cast<double>().transpose().array();
  const double s = static_cast<double>(cm.total());
  const double c = static_cast<double>(cm.counts.trace());
  const double cov_tp = c * s - (p * t).sum();
  const double cov_pp = s * s - p.square().sum();
  const double cov_tt = s * s - t.square().sum();
  const double denom = cov_pp * cov_tt;
  if (denom <= 0.0) return 0.0;
  return cov_tp / std::sqrt(denom);
}

EvalReport evaluate(const ConfusionMatrix& cm) {
  return {accuracy(cm), balanced_accuracy(cm), matthews_corrcoef(cm), cm};
}

EvalReport evaluate(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
  return evaluate(confusion_matrix(predicted, truth, num_classes));
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < scores.cols(); ++k)
      if (scores(i, k) > scores(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

EvalReport baseline_report(BaselineKind kind, std::span<const int> truth, int num_classes, int trials,
                           std::uint64_t seed) {
  if (truth.empty()) throw ValidationError("baseline_report needs a non-empty truth sequence");
  if (kind == BaselineKind::AllOnes && num_classes < 2)
    throw ValidationError("all-ones baseline needs at least two classes");
  std::vector<int> predicted(truth.size());

  if (kind == BaselineKind::AllZeros || kind == BaselineKind::AllOnes) {
    std::fill(predicted.begin(), predicted.end(), kind == BaselineKind::AllZeros ? 0 : 1);
    return evaluate(predicted, truth, num_classes);
  }
  if (trials < 1) throw ValidationError("random baselines need at least one trial");

  std::vector<double> weights(static_cast<std::size_t>(num_classes), 1.0);
  if (kind == BaselineKind::WeightedRandom) {
    std::fill(weights.begin(), weights.end(), 0.0);
    for (int y : truth) {
      if (y < 0 || y >= num_classes) throw ValidationError("truth label out of range");
      weights[static_cast<std::size_t>(y)] += 1.0;
    }
  }
  std::discrete_distribution<int> draw(weights.begin(), weights.end());

  EvalReport mean;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
    for (auto& p : predicted) p = draw(rng);
    const auto r = evaluate(predicted, truth, num_classes);
    mean.accuracy += r.accuracy;
    mean.balanced_accuracy += r.balanced_accuracy;
    mean.mcc += r.mcc;
    if (trial == 0) mean.confusion = r.confusion;
  }
  mean.accuracy /= trials;
  mean.balanced_accuracy /= trials;
  mean.mcc /= trials;
  return mean;
}

}  // namespace semg
