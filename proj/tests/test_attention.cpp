#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grad_check.hpp"
#include "semg/attention.hpp"

using namespace semg;
using semg::testing::check_gradient;
using semg::testing::random_matrix;

namespace {

constexpr int kSeeds = 20;
constexpr double kOpTol = 1e-4;

AttentionParams<double> random_params(Index t, Index c, AttentionLayout layout, bool per_step, Rng& rng) {
  AttentionParams<double> p;
  p.layout = layout;
  p.weight = layout == AttentionLayout::SharedTemporal ? random_matrix(t, t, rng, 0.5) : random_matrix(c, t, rng);
  p.bias = random_matrix(1, per_step ? t : 1, rng);
  return p;
}

}  // namespace

TEST_CASE("attend gradients for every layout and bias shape") {
  for (int seed = 0; seed < kSeeds; ++seed)
    for (auto layout : {AttentionLayout::SharedTemporal, AttentionLayout::PerChannel})
      for (bool per_step : {false, true}) {
        Rng rng = make_rng(seed);
        Matrix h = random_matrix(6, 4, rng);
        auto p = random_params(6, 4, layout, per_step, rng);
        const RowVec r = random_matrix(1, 4, rng);
        const auto f = [&] { return attend(h, p).dot(r); };
        Matrix alpha;
        attend(h, p, &alpha);
        const auto g = attend_backward(h, p, alpha, r);
        Matrix bias = p.bias;
        const auto fb = [&] {
          auto q = p;
          q.bias = bias;
          return attend(h, q).dot(r);
        };
        CHECK(check_gradient(h, g.dh, f, kOpTol, rng).failures == 0);
        CHECK(check_gradient(p.weight, g.dweight, f, kOpTol, rng).failures == 0);
        CHECK(check_gradient(bias, g.dbias, fb, kOpTol, rng).failures == 0);
      }
}

TEST_CASE("raffel and temporal-sum gradients") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng = make_rng(seed);
    Matrix h = random_matrix(6, 4, rng);
    RaffelParams<double> p{random_matrix(1, 4, rng), random_matrix(1, 1, rng)};
    const RowVec r = random_matrix(1, 4, rng);
    RowVec alpha;
    attend_raffel(h, p, &alpha);
    const auto g = attend_raffel_backward(h, p, alpha, r);
    Matrix w = p.weight, b = p.bias;
    const auto f = [&] { return attend_raffel(h, RaffelParams<double>{w, b}).dot(r); };
    CHECK(check_gradient(h, g.dh, f, kOpTol, rng).failures == 0);
    CHECK(check_gradient(w, g.dweight, f, kOpTol, rng).failures == 0);
    CHECK(check_gradient(b, g.dbias, f, kOpTol, rng).failures == 0);

    const auto fs = [&] { return attend_sum(h).dot(r); };
    CHECK(check_gradient(h, attend_sum_backward<double>(6, r), fs, kOpTol, rng).failures == 0);
  }
}

TEST_CASE("attention rows are probability distributions over time") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng = make_rng(seed);
    const Matrix h = random_matrix(38, 16, rng, 3.0);
    for (auto layout : {AttentionLayout::SharedTemporal, AttentionLayout::PerChannel}) {
      const auto p = random_params(38, 16, layout, seed % 2 == 0, rng);
      const Matrix alpha = attention_weights(h, p);
      REQUIRE(alpha.rows() == 16);
      REQUIRE(alpha.cols() == 38);
      CHECK(alpha.minCoeff() >= 0.0);
      for (Index i = 0; i < alpha.rows(); ++i) CHECK(std::abs(alpha.row(i).sum() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("zero parameters give the temporal mean") {
  Rng rng = make_rng(4);
  const Matrix h = random_matrix(38, 16, rng);
  for (auto layout : {AttentionLayout::SharedTemporal, AttentionLayout::PerChannel}) {
    AttentionParams<double> p;
    p.layout = layout;
    p.weight = layout == AttentionLayout::SharedTemporal ? Matrix::Zero(38, 38) : Matrix::Zero(16, 38);
    p.bias = RowVec::Zero(1);
    const RowVec c = attend(h, p);
    CHECK((c - h.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("input constant in time is a fixed point") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng = make_rng(seed);
    const RowVec row = random_matrix(1, 8, rng);
    const Matrix h = row.replicate(10, 1);
    for (auto layout : {AttentionLayout::SharedTemporal, AttentionLayout::PerChannel}) {
      const auto p = random_params(10, 8, layout, true, rng);
      CHECK((attend(h, p) - row).cwiseAbs().maxCoeff() < 1e-12);
    }
    RaffelParams<double> rp{random_matrix(1, 8, rng), random_matrix(1, 1, rng)};
    CHECK((attend_raffel(h, rp) - row).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("attention shape errors") {
  const Matrix h = Matrix::Ones(6, 4);
  AttentionParams<double> p;
  p.weight = Matrix::Ones(5, 5);
  p.bias = RowVec::Zero(1);
  CHECK_THROWS_AS(attend(h, p), DimensionError);
  p.weight = Matrix::Ones(6, 6);
  p.bias = RowVec::Zero(3);
  CHECK_THROWS_AS(attend(h, p), DimensionError);
  p.layout = AttentionLayout::PerChannel;
  p.bias = RowVec::Zero(1);
  CHECK_THROWS_AS(attend(h, p), DimensionError);
  CHECK_THROWS_AS(attend_raffel(h, RaffelParams<double>{RowVec::Ones(3), RowVec::Zero(1)}), DimensionError);
}
