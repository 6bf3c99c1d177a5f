#include "semg/augment.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace semg {

void AugmentConfig::validate() const {
  if (!(snr_min_db < snr_max_db)) throw ConfigError("snr_min_db must be below snr_max_db");
  if (snr_min_db < 1) throw ConfigError("snr_min_db must be >= 1 (SNR weights are the SNR values)");
  if (imu_channels < 0) throw ConfigError("imu_channels must be non-negative");
}

RowVec signal_power_db(const Eigen::Ref<const Matrix>& s) {
  if (s.rows() < 1) throw SizeError("signal_power_db needs at least one timestep");
  const RowVec mean_square = s.array().square().colwise().sum() / static_cast<double>(s.rows());
  return (10.0 * mean_square.array().log10()).matrix();
}

double noise_sigma(double signal_power_db, double snr_db, SnrMode mode) {
  const double noise_db = mode == SnrMode::Verbatim ? snr_db - signal_power_db : signal_power_db - snr_db;
  return std::sqrt(std::pow(10.0, noise_db / 10.0));
}

SnrSampler::SnrSampler(int snr_min_db, int snr_max_db) : min_(snr_min_db) {
  if (!(snr_min_db < snr_max_db) || snr_min_db < 1) throw ConfigError("invalid SNR range");
  std::vector<double> weights(static_cast<std::size_t>(snr_max_db - snr_min_db + 1));
  std::iota(weights.begin(), weights.end(), static_cast<double>(snr_min_db));
  dist_ = std::discrete_distribution<int>(weights.begin(), weights.end());
}

double SnrSampler::probability(int snr_db) const {
  const auto p = dist_.probabilities();
  const int i = snr_db - min_;
  if (i < 0 || i >= static_cast<int>(p.size())) return 0.0;
  return p[static_cast<std::size_t>(i)];
}

Matrix add_snr_noise(const Eigen::Ref<const Matrix>& s, double snr_db, SnrMode mode, Rng& rng,
                     Index columns) {
  const Index n = columns < 0 ? s.cols() : std::min(columns, s.cols());
  Matrix out = s;
  if (n == 0 || s.rows() == 0) return out;
  const RowVec power = signal_power_db(s.leftCols(n));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 0; c < n; ++c) {
    if (!std::isfinite(power(c))) continue;  // silent channel: nothing to scale against
    const double sigma = noise_sigma(power(c), snr_db, mode);
    for (Index t = 0; t < s.rows(); ++t) out(t, c) += sigma * normal(rng);
  }
  return out;
}

Window augment_window(const Window& w, const AugmentConfig& cfg, SnrSampler& sampler, Rng& rng) {
  if (w.label == cfg.rest_label) return w;
  const int snr = sampler(rng);
  const Index columns = cfg.augment_imu ? w.data.cols() : w.data.cols() - cfg.imu_channels;
  Window out = w;
  out.data = add_snr_noise(w.data, snr, cfg.mode, rng, columns);
  return out;
}

Window augment_window(const Window& w, const AugmentConfig& cfg, Rng& rng) {
  SnrSampler sampler(cfg.snr_min_db, cfg.snr_max_db);
  return augment_window(w, cfg, sampler, rng);
}

}  // namespace semg
