#pragma once

#include "semg/core.hpp"

#include <complex>
#include <span>
#include <vector>

namespace semg {

struct FilterSpec {
  double cutoff_hz = 20.0;
  int order = 4;
};

struct SmootherSpec {
  int kernel_len = 15;
};

struct PreprocessConfig {
  FilterSpec filter;
  SmootherSpec smoother;
};

/// Default smoothing kernel:
/// 15 at 200 Hz (52 -> 38) and 140 at 2 kHz (520 -> 381). Other rates scale
/// the 200 Hz kernel (75 ms).
int default_kernel_len(double sample_rate_hz);

/// One second-order section, a0 normalized to 1:
///   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// High-pass Butterworth as cascaded sections via the prewarped bilinear
/// transform. Odd orders end with a first-order section (b2 = a2 = 0).
std::vector<Biquad> design_butterworth_highpass(const FilterSpec& spec, double sample_rate_hz);

std::complex<double> frequency_response(std::span<const Biquad> sections, double freq_hz,
                                        double sample_rate_hz);

template <typename Derived>
Tensor2<typename Derived::Scalar> rectify(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseAbs();
}

/// Causal, zero-state filtering of each column.
Matrix butterworth_highpass(const Eigen::Ref<const Matrix>& x, const FilterSpec& spec,
                            double sample_rate_hz);

/// Valid-mode moving average: T rows in, T - kernel_len + 1 rows out.
Matrix moving_average(const Eigen::Ref<const Matrix>& x, const SmootherSpec& spec);

/// rectify -> high-pass -> moving average, in that order.
Matrix preprocess(const Eigen::Ref<const Matrix>& x, double sample_rate_hz,
                  const PreprocessConfig& cfg);

}  // namespace semg
