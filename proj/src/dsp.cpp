#include "semg/dsp.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace semg {

int default_kernel_len(double sample_rate_hz) {
  if (sample_rate_hz == 200.0) return 15;
  if (sample_rate_hz == 2000.0) return 140;
  return std::max(1, static_cast<int>(std::floor(0.075 * sample_rate_hz + 0.5)));
}

std::vector<Biquad> design_butterworth_highpass(const FilterSpec& spec, double sample_rate_hz) {
  if (spec.order < 1) throw DesignError("filter order must be >= 1");
  if (!(spec.cutoff_hz > 0.0)) throw DesignError("cutoff must be positive");
  if (!(spec.cutoff_hz < sample_rate_hz / 2.0))
    throw DesignError("cutoff " + std::to_string(spec.cutoff_hz) + " Hz is not below Nyquist");

  const double k = 2.0 * sample_rate_hz;
  const double wc = k * std::tan(std::numbers::pi * spec.cutoff_hz / sample_rate_hz);
  const int n = spec.order;

  std::vector<Biquad> sections;
  // Prototype poles come in conjugate pairs p = -sin(theta) +- j cos(theta);
  // each pair gives s^2 / (s^2 + 2 sin(theta) wc s + wc^2) after s -> wc / s.
  for (int i = 0; i < n / 2; ++i) {
    const double theta = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * n);
    const double damping = 2.0 * std::sin(theta);
    const double d = k * k + damping * wc * k + wc * wc;
    Biquad s;
    s.b0 = k * k / d;
    s.b1 = -2.0 * k * k / d;
    s.b2 = k * k / d;
    s.a1 = (2.0 * wc * wc - 2.0 * k * k) / d;
    s.a2 = (k * k - damping * wc * k + wc * wc) / d;
    sections.push_back(s);
  }
  if (n % 2 == 1) {
    // Real pole at -1: s / (s + wc).
    Biquad s;
    s.b0 = k / (k + wc);
    s.b1 = -k / (k + wc);
    s.a1 = (wc - k) / (k + wc);
    sections.push_back(s);
  }
  return sections;
}

std::complex<double> frequency_response(std::span<const Biquad> sections, double freq_hz,
                                        double sample_rate_hz) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

Matrix butterworth_highpass(const Eigen::Ref<const Matrix>& x, const FilterSpec& spec,
                            double sample_rate_hz) {
  const auto sections = design_butterworth_highpass(spec, sample_rate_hz);
  if (x.rows() < spec.order + 1)
    throw SizeError("butterworth_highpass needs at least order + 1 samples");

  Matrix y = x;
  for (const auto& s : sections) {
    // Transposed direct form II, zero initial state, one state pair per column.
    RowVec z1 = RowVec::Zero(y.cols());
    RowVec z2 = RowVec::Zero(y.cols());
    for (Index t = 0; t < y.rows(); ++t) {
      const RowVec in = y.row(t);
      const RowVec out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      y.row(t) = out;
    }
  }
  return y;
}

Matrix moving_average(const Eigen::Ref<const Matrix>& x, const SmootherSpec& spec) {
  if (spec.kernel_len < 1) throw SizeError("kernel_len must be >= 1");
  if (spec.kernel_len > x.rows())
    throw SizeError("kernel_len " + std::to_string(spec.kernel_len) + " exceeds input length " +
                    std::to_string(x.rows()));
  const Index k = spec.kernel_len;
  const Index out_rows = x.rows() - k + 1;
  Matrix y(out_rows, x.cols());
  // Each row is summed directly; no running sum, so no drift on long streams.
  for (Index i = 0; i < out_rows; ++i) y.row(i) = x.middleRows(i, k).colwise().sum() / static_cast<double>(k);
  return y;
}

Matrix preprocess(const Eigen::Ref<const Matrix>& x, double sample_rate_hz,
                  const PreprocessConfig& cfg) {
  return moving_average(butterworth_highpass(rectify(x), cfg.filter, sample_rate_hz), cfg.smoother);
}

}  // namespace semg
