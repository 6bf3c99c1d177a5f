#pragma once

#include "semg/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace semg {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows are true labels, columns predictions.
struct ConfusionMatrix {
  CountMatrix counts;

  int num_classes() const { return static_cast<int>(counts.rows()); }
  std::int64_t total() const { return counts.sum(); }
};

struct EvalReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double mcc = 0.0;
  ConfusionMatrix confusion;
};

ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> truth, int num_classes);

double accuracy(const ConfusionMatrix& cm);

/// Mean recall over the classes that occur in the truth.
double balanced_accuracy(const ConfusionMatrix& cm);

/// Multiclass MCC (the R_k statistic):
///   (c s - sum_k p_k t_k) / sqrt((s^2 - sum_k p_k^2)(s^2 - sum_k t_k^2))
/// with c correct, s total, p_k predicted and t_k true counts; 0 when the
/// denominator vanishes.
double matthews_corrcoef(const ConfusionMatrix& cm);

EvalReport evaluate(const ConfusionMatrix& cm);
EvalReport evaluate(std::span<const int> predicted, std::span<const int> truth, int num_classes);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<int> argmax_rows(const Matrix& scores);

enum class BaselineKind { WeightedRandom, UnweightedRandom, AllZeros, AllOnes };

/// Naive reference predictors. Random kinds average the three metrics over
/// `trials` seeded draws (weighted random samples from the empirical label
/// distribution of `truth`); the confusion matrix is the first trial's.
EvalReport baseline_report(BaselineKind kind, std::span<const int> truth, int num_classes, int trials,
                           std::uint64_t seed);

}  // namespace semg
