#pragma once

#include "semg/core.hpp"
#include "semg/windowing.hpp"

#include <random>

namespace semg {

/// Sign convention for the noise power.
///   Verbatim:  P_n = SNR - P_s  (as printed in the method's appendix)
///   Corrected: P_n = P_s - SNR  (so the output really has the target SNR)
enum class SnrMode { Verbatim, Corrected };

struct AugmentConfig {
  int snr_min_db = 1;
  int snr_max_db = 30;
  int rest_label = 0;
  SnrMode mode = SnrMode::Verbatim;
  int imu_channels = 0;  // trailing columns treated as IMU
  bool augment_imu = false;

  void validate() const;
};

/// Per-column power in dB: 10 log10(sum_t s_t^2 / T). An all-zero column
/// gives -inf.
RowVec signal_power_db(const Eigen::Ref<const Matrix>& s);

double noise_sigma(double signal_power_db, double snr_db, SnrMode mode);

/// Integer SNR in [min, max] with P(v) proportional to v.
class SnrSampler {
 public:
  SnrSampler(int snr_min_db, int snr_max_db);
  int operator()(Rng& rng) { return min_ + dist_(rng); }
  double probability(int snr_db) const;

 private:
  int min_;
  std::discrete_distribution<int> dist_;
};

/// Adds N(0, sigma_c^2) noise to each of the first `columns` columns, with
/// sigma_c set from that column's own power. Columns whose power is -inf
/// are left alone.
Matrix add_snr_noise(const Eigen::Ref<const Matrix>& s, double snr_db, SnrMode mode, Rng& rng,
                     Index columns = -1);

/// Draws an SNR and adds the matching noise. Rest windows come back as is.
Window augment_window(const Window& w, const AugmentConfig& cfg, Rng& rng);

/// Same as above with a caller-owned sampler (avoids rebuilding the table).
Window augment_window(const Window& w, const AugmentConfig& cfg, SnrSampler& sampler, Rng& rng);

}  // namespace semg
