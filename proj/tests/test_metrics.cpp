#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semg/metrics.hpp"

#include <cmath>
#include <vector>

using namespace semg;

namespace {

// Rest takes 635 of every 1000 labels, the other 365 spread over 53 gestures.
std::vector<int> rest_heavy_truth() {
  std::vector<int> y;
  for (int block = 0; block < 20; ++block) {
    for (int i = 0; i < 635; ++i) y.push_back(0);
    for (int i = 0; i < 365; ++i) y.push_back(1 + (i + block) % 53);
  }
  return y;
}

}  // namespace

TEST_CASE("confusion matrix layout") {
  const std::vector<int> truth{0, 0, 1, 2}, pred{0, 1, 1, 0};
  const auto cm = confusion_matrix(pred, truth, 3);
  CHECK(cm.counts(0, 0) == 1);
  CHECK(cm.counts(0, 1) == 1);
  CHECK(cm.counts(1, 1) == 1);
  CHECK(cm.counts(2, 0) == 1);
  CHECK(cm.total() == 4);
  CHECK(accuracy(cm) == doctest::Approx(0.5));
  CHECK_THROWS_AS(confusion_matrix(std::vector<int>{0}, truth, 3), ValidationError);
  CHECK_THROWS_AS(confusion_matrix(std::vector<int>{3}, std::vector<int>{0}, 3), ValidationError);
}

TEST_CASE("binary MCC matches the textbook formula") {
  // tp 5, fn 2, fp 1, tn 4 with class 1 positive
  std::vector<int> truth, pred;
  for (int i = 0; i < 5; ++i) truth.push_back(1), pred.push_back(1);
  for (int i = 0; i < 2; ++i) truth.push_back(1), pred.push_back(0);
  truth.push_back(0), pred.push_back(1);
  for (int i = 0; i < 4; ++i) truth.push_back(0), pred.push_back(0);
  const double expected = 18.0 / std::sqrt(6.0 * 7.0 * 5.0 * 6.0);
  CHECK(matthews_corrcoef(confusion_matrix(pred, truth, 2)) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("multiclass reference values") {
  // sklearn: matthews_corrcoef, balanced_accuracy_score
  const std::vector<int> truth{0, 0, 0, 1, 1, 2, 2, 2, 2, 1}, pred{0, 1, 0, 1, 2, 2, 2, 0, 2, 1};
  const auto r = evaluate(pred, truth, 3);
  CHECK(r.mcc == doctest::Approx(0.5454545454545454).epsilon(1e-14));
  CHECK(r.balanced_accuracy == doctest::Approx(0.6944444444444443).epsilon(1e-14));
  CHECK(r.accuracy == doctest::Approx(0.7));
}

TEST_CASE("MCC properties") {
  const std::vector<int> truth{0, 1, 2, 2, 1, 0, 3};
  CHECK(matthews_corrcoef(confusion_matrix(truth, truth, 4)) == doctest::Approx(1.0));
  // constant predictions have no correlation
  const std::vector<int> zeros(truth.size(), 0);
  CHECK(matthews_corrcoef(confusion_matrix(zeros, truth, 4)) == 0.0);
  // swapping labels of a binary task gives -1
  const std::vector<int> t2{0, 0, 1, 1}, p2{1, 1, 0, 0};
  CHECK(matthews_corrcoef(confusion_matrix(p2, t2, 2)) == doctest::Approx(-1.0));
  CHECK(matthews_corrcoef(ConfusionMatrix{CountMatrix::Zero(3, 3)}) == 0.0);
}

TEST_CASE("balanced accuracy skips absent classes") {
  // class 2 never occurs in the truth
  const std::vector<int> truth{0, 0, 1, 1}, pred{0, 1, 1, 2};
  const auto cm = confusion_matrix(pred, truth, 3);
  CHECK(balanced_accuracy(cm) == doctest::Approx(0.5));
  CHECK(balanced_accuracy(ConfusionMatrix{CountMatrix::Zero(2, 2)}) == 0.0);
}

TEST_CASE("argmax ties go to the lowest index") {
  Matrix s(3, 3);
  s << 0.2, 0.5, 0.5, 1.0, 1.0, 1.0, 0.1, 0.2, 0.7;
  CHECK(argmax_rows(s) == std::vector<int>{1, 0, 2});
}

TEST_CASE("naive baselines on a rest-heavy label distribution") {
  const auto truth = rest_heavy_truth();
  const auto zeros = baseline_report(BaselineKind::AllZeros, truth, 54, 1, 0);
  CHECK(zeros.accuracy == doctest::Approx(0.635));
  CHECK(zeros.balanced_accuracy == doctest::Approx(1.0 / 54.0));
  CHECK(zeros.mcc == 0.0);

  const auto ones = baseline_report(BaselineKind::AllOnes, truth, 54, 1, 0);
  double class1 = 0.0;
  for (int y : truth) class1 += y == 1;
  CHECK(ones.accuracy == doctest::Approx(class1 / truth.size()));
  CHECK(ones.balanced_accuracy == doctest::Approx(1.0 / 54.0));
  CHECK(ones.mcc == 0.0);

  // expected accuracy of a label-frequency guesser is sum_k p_k^2
  double sum_sq = 0.0;
  {
    std::vector<double> freq(54, 0.0);
    for (int y : truth) freq[static_cast<std::size_t>(y)] += 1.0 / truth.size();
    for (double f : freq) sum_sq += f * f;
  }
  const auto weighted = baseline_report(BaselineKind::WeightedRandom, truth, 54, 50, 1);
  CHECK(weighted.accuracy == doctest::Approx(sum_sq).epsilon(0.01));
  CHECK(weighted.accuracy == doctest::Approx(0.406).epsilon(0.01));
  CHECK(weighted.balanced_accuracy == doctest::Approx(1.0 / 54.0).epsilon(0.1));
  CHECK(std::abs(weighted.mcc) < 0.01);

  const auto uniform = baseline_report(BaselineKind::UnweightedRandom, truth, 54, 50, 1);
  CHECK(uniform.accuracy == doctest::Approx(1.0 / 54.0).epsilon(0.1));
  CHECK(uniform.balanced_accuracy == doctest::Approx(1.0 / 54.0).epsilon(0.1));
  CHECK(std::abs(uniform.mcc) < 0.01);
  CHECK(uniform.confusion.total() == static_cast<std::int64_t>(truth.size()));
}

TEST_CASE("baseline errors") {
  CHECK_THROWS_AS(baseline_report(BaselineKind::AllZeros, std::vector<int>{}, 3, 1, 0), ValidationError);
  CHECK_THROWS_AS(baseline_report(BaselineKind::AllOnes, std::vector<int>{0}, 1, 1, 0), ValidationError);
  CHECK_THROWS_AS(baseline_report(BaselineKind::UnweightedRandom, std::vector<int>{0}, 2, 0, 0), ValidationError);
  CHECK_THROWS_AS(baseline_report(BaselineKind::WeightedRandom, std::vector<int>{5}, 2, 1, 0), ValidationError);
}
