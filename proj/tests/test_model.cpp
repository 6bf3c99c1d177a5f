#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grad_check.hpp"
#include "semg/model.hpp"

#include <cmath>
#include <limits>

using namespace semg;
using semg::testing::random_matrix;

namespace {

ModelConfig toy(const ModelConfig& base) {
  ModelConfig c = base;
  c.timesteps = 6;
  c.channels = 4;
  c.num_classes = 3;
  c.expanded_channels = 5;
  c.dropout = 0.0;
  return c;
}

// Forward-only mean focal loss, as reported by backward().
double batch_loss(const Model& model, const std::vector<Matrix>& xs, const std::vector<int>& ys) {
  const Matrix probs = model.forward(xs, false).probs;
  double sum = 0.0;
  for (Index i = 0; i < probs.rows(); ++i) sum += focal_loss(probs.row(i), ys[static_cast<std::size_t>(i)], 2.0).loss;
  return sum / static_cast<double>(probs.rows());
}

}  // namespace

TEST_CASE("default parameter count is about 1.44 million") {
  const auto model = Model::build(ModelConfig{}, 1);
  CHECK(model.parameter_count() == 1434931);
  CHECK(std::abs(static_cast<double>(model.parameter_count()) - 1.44e6) < 0.03 * 1.44e6);
}

TEST_CASE("per-channel attention parameter counts") {
  ModelConfig c;
  c.attention_layout = AttentionLayout::PerChannel;
  CHECK(Model::build(c, 1).parameter_count() == 1438351);
  CHECK(Model::build(ablation_config("no-classifier", c), 1).parameter_count() == 14263);
  CHECK(Model::build(ablation_config("no-layernorm", c), 1).parameter_count() == 1432095);
  CHECK(Model::build(ablation_config("no-classifier", ModelConfig{}), 1).parameter_count() == 10843);
}

TEST_CASE("all ablation variants build and predict") {
  const auto suite = ablation_suite(ModelConfig{});
  REQUIRE(suite.size() == 10);
  Rng rng = make_rng(4);
  const Matrix x = random_matrix(38, 16, rng);
  for (const auto& e : suite) {
    CAPTURE(e.name);
    const auto model = Model::build(e.config, 2);
    const RowVec p = model.predict(x);
    CHECK(p.size() == 54);
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(model.trainable_parameter_count() <= model.parameter_count());
  }
  CHECK_THROWS_AS(ablation_config("bogus", ModelConfig{}), ConfigError);
}

TEST_CASE("forward-only loss agrees with backward") {
  auto model = Model::build(toy(ModelConfig{}), 1);
  Rng rng = make_rng(1);
  std::vector<Matrix> xs{random_matrix(6, 4, rng), random_matrix(6, 4, rng)};
  const std::vector<int> ys{0, 2};
  CHECK(model.backward(model.forward(xs, false), ys, {}).loss == doctest::Approx(batch_loss(model, xs, ys)).epsilon(1e-14));
}

TEST_CASE("full-model gradients for every variant") {
  double worst = 0.0;
  for (const auto& e : ablation_suite(toy(ModelConfig{}))) {
    CAPTURE(e.name);
    for (int seed = 0; seed < 20; ++seed) {
      auto model = Model::build(e.config, static_cast<std::uint64_t>(seed));
      Rng rng = make_rng(seed, 99);
      for (auto& p : model.parameters()) p.value += 0.05 * random_matrix(p.value.rows(), p.value.cols(), rng);
      std::vector<Matrix> xs;
      std::vector<int> ys;
      for (int i = 0; i < 3; ++i) {
        xs.push_back(random_matrix(6, 4, rng));
        ys.push_back(i);
      }
      model.backward(model.forward(xs, false), ys, {});
      for (auto& p : model.parameters()) {
        if (!p.trainable) continue;
        const Matrix analytic = p.grad;
        const auto r = semg::testing::check_gradient(
            p.value, analytic, [&] { return batch_loss(model, xs, ys); }, 1e-3, rng, 8);
        CHECK_MESSAGE(r.failures == 0, p.name, " ", r.first_failure);
        worst = std::max(worst, r.worst);
      }
    }
  }
  MESSAGE("largest share of the gradient tolerance used " << worst);
}

TEST_CASE("frozen expansion gets no gradient") {
  auto model = Model::build(toy(ablation_config("frozen", ModelConfig{})), 1);
  Rng rng = make_rng(1);
  std::vector<Matrix> xs{random_matrix(6, 4, rng), random_matrix(6, 4, rng)};
  model.backward(model.forward(xs, false), std::vector<int>{0, 2}, {});
  const auto& w = model.parameter("expansion.weight");
  CHECK_FALSE(w.trainable);
  CHECK(w.grad.isZero(0.0));
  CHECK_FALSE(model.parameter("output.weight").grad.isZero(0.0));
}

TEST_CASE("attention map shapes") {
  Rng rng = make_rng(6);
  const Matrix x = random_matrix(38, 16, rng);
  ModelConfig small;
  small.expanded_channels = 8;
  small.classifier = ClassifierKind::None;
  const auto shape = [&](const ModelConfig& c) {
    const Matrix a = Model::build(c, 1).attention_map(x);
    return std::pair{a.rows(), a.cols()};
  };
  CHECK(shape(small) == std::pair<Index, Index>{8, 38});
  CHECK(shape(ablation_config("raffel", small)) == std::pair<Index, Index>{1, 38});
  CHECK(shape(ablation_config("temporal-sum", small)) == std::pair<Index, Index>{1, 38});
  CHECK(shape(ablation_config("no-expansion", small)) == std::pair<Index, Index>{16, 38});
  const Matrix a = Model::build(small, 1).attention_map(x);
  CHECK((a.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("shape and numeric errors") {
  const auto model = Model::build(toy(ModelConfig{}), 1);
  CHECK_THROWS_AS(model.predict(Matrix(Matrix::Ones(5, 4))), DimensionError);
  Matrix bad = Matrix::Ones(6, 4);
  bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(model.predict(bad), NumericError);
  CHECK_THROWS_AS(model.parameter("nope"), ConfigError);

  ModelConfig c;
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.expansion = ExpansionKind::Conv1d;
  c.conv_kernel = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  ModelConfig with_dropout = toy(ModelConfig{});
  with_dropout.dropout = 0.36;
  const auto m2 = Model::build(with_dropout, 1);
  std::vector<Matrix> xs{Matrix::Ones(6, 4)};
  CHECK_THROWS_AS(m2.forward(xs, true), ConfigError);
}

TEST_CASE("inference ignores dropout and is deterministic") {
  ModelConfig c = toy(ModelConfig{});
  c.dropout = 0.36;
  const auto a = Model::build(c, 9), b = Model::build(c, 9);
  Rng rng = make_rng(2);
  const Matrix x = random_matrix(6, 4, rng);
  CHECK(a.predict(x) == b.predict(x));
  CHECK(a.predict(x) == a.predict(x));
  CHECK_FALSE(Model::build(c, 10).predict(x) == a.predict(x));
}
