#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semg/augment.hpp"

#include <cmath>
#include <map>

using namespace semg;

namespace {

Matrix noisy_signal(Index rows, Index cols, Rng& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng) + 0.3 * scale;
  return m;
}

}  // namespace

TEST_CASE("signal power in dB") {
  Matrix s(4, 2);
  s << 1, 0, -1, 0, 1, 0, -1, 0;
  const RowVec p = signal_power_db(s);
  CHECK(p(0) == doctest::Approx(0.0));
  CHECK(std::isinf(p(1)));
  Matrix t = Matrix::Constant(10, 1, 10.0);
  CHECK(signal_power_db(t)(0) == doctest::Approx(20.0));
}

TEST_CASE("noise sigma for both sign conventions") {
  // corrected: noise 20 dB below a 10 dB signal -> -10 dB -> sigma sqrt(0.1)
  CHECK(noise_sigma(10.0, 20.0, SnrMode::Corrected) == doctest::Approx(std::sqrt(0.1)));
  // verbatim: P_n = SNR - P_s = 10 dB
  CHECK(noise_sigma(10.0, 20.0, SnrMode::Verbatim) == doctest::Approx(std::sqrt(10.0)));
}

TEST_CASE("SNR sampling weights are proportional to the SNR") {
  SnrSampler sampler(1, 30);
  CHECK(sampler.probability(30) == doctest::Approx(2.0 * sampler.probability(15)));
  CHECK(sampler.probability(1) == doctest::Approx(1.0 / 465.0));
  CHECK(sampler.probability(0) == 0.0);
  CHECK(sampler.probability(31) == 0.0);
  Rng rng = make_rng(1);
  for (int i = 0; i < 1000; ++i) {
    const int v = sampler(rng);
    CHECK((v >= 1 && v <= 30));
  }
}

TEST_CASE("SNR draws pass a chi-square goodness-of-fit test") {
  constexpr int kDraws = 100000;
  constexpr double kCritical = 49.58788447289881;  // chi2(29) at 0.01
  SnrSampler sampler(1, 30);
  Rng rng = make_rng(2024);
  std::map<int, int> counts;
  for (int i = 0; i < kDraws; ++i) ++counts[sampler(rng)];
  double chi2 = 0.0;
  for (int v = 1; v <= 30; ++v) {
    const double expected = kDraws * v / 465.0;
    chi2 += std::pow(counts[v] - expected, 2) / expected;
  }
  CHECK(chi2 < kCritical);
  // 30 dB about twice as frequent as 15 dB
  CHECK(static_cast<double>(counts[30]) / counts[15] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("corrected mode reaches the target SNR") {
  Rng rng = make_rng(7);
  AugmentConfig cfg;
  cfg.mode = SnrMode::Corrected;
  SnrSampler sampler(cfg.snr_min_db, cfg.snr_max_db);
  double sum_err = 0.0;
  int within = 0;
  constexpr int kWindows = 1000;
  for (int i = 0; i < kWindows; ++i) {
    const Matrix s = noisy_signal(38, 16, rng, 0.5 + i % 7);
    const int target = sampler(rng);
    const Matrix y = add_snr_noise(s, target, cfg.mode, rng);
    const RowVec ps = signal_power_db(s), pn = signal_power_db(y - s);
    const double err = (ps - pn).mean() - target;
    sum_err += err;
    within += std::abs(err) <= 0.5;
  }
  CHECK(std::abs(sum_err / kWindows) < 0.5);
  CHECK(within > kWindows * 9 / 10);
}

TEST_CASE("rest windows come back bit for bit") {
  Rng rng = make_rng(3);
  Window w{noisy_signal(38, 16, rng, 1.0), 0, 0, 0};
  AugmentConfig cfg;
  Rng before = rng;
  const Window out = augment_window(w, cfg, rng);
  CHECK(out.data == w.data);
  CHECK(rng == before);  // no draw for rest
  w.label = 2;
  CHECK(augment_window(w, cfg, rng).data != w.data);
}

TEST_CASE("IMU columns untouched unless requested") {
  Rng rng = make_rng(5);
  Window w{noisy_signal(38, 19, rng, 1.0), 1, 0, 0};
  AugmentConfig cfg;
  cfg.mode = SnrMode::Corrected;
  cfg.imu_channels = 3;
  const Window out = augment_window(w, cfg, rng);
  CHECK(out.data.rightCols(3) == w.data.rightCols(3));
  CHECK(out.data.leftCols(16) != w.data.leftCols(16));
  cfg.augment_imu = true;
  CHECK(augment_window(w, cfg, rng).data.rightCols(3) != w.data.rightCols(3));
}

TEST_CASE("silent channels stay silent") {
  Rng rng = make_rng(9);
  Matrix s = noisy_signal(38, 4, rng, 1.0);
  s.col(2).setZero();
  const Matrix y = add_snr_noise(s, 10.0, SnrMode::Corrected, rng);
  CHECK(y.col(2).isZero(0.0));
  CHECK(y.allFinite());
}

TEST_CASE("augmentation is deterministic per seed") {
  Rng a = make_rng(11), b = make_rng(11);
  Rng g = make_rng(1);
  const Window w{noisy_signal(38, 16, g, 1.0), 3, 0, 0};
  CHECK(augment_window(w, {}, a).data == augment_window(w, {}, b).data);
}

TEST_CASE("config validation") {
  AugmentConfig cfg;
  cfg.snr_min_db = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.snr_max_db = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(SnrSampler(5, 5), ConfigError);
}
