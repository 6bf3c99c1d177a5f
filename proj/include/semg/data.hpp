#pragma once

#include "semg/core.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <tuple>
#include <vector>

namespace semg {

/// Milliseconds to whole samples, rounding half up (260 ms at 200 Hz -> 52).
int ms_to_samples(double ms, double sample_rate_hz);

struct DatasetSpec {
  int num_classes = 54;  // 53 gestures + rest
  int channels = 16;
  double sample_rate_hz = 200.0;
  double window_ms = 260.0;
  double overlap_ms = 235.0;
  int max_repetition = 6;

  int window_samples() const { return ms_to_samples(window_ms, sample_rate_hz); }
  int stride_samples() const { return ms_to_samples(window_ms - overlap_ms, sample_rate_hz); }
  void validate() const;

  static DatasetSpec db5();  // double MYO, 16 ch at 200 Hz
  static DatasetSpec db4();  // 12 ch at 2 kHz
};

struct Recording {
  Matrix samples;  // timesteps x channels
  double sample_rate_hz = 200.0;
  std::vector<int> gesture;     // 0 = rest
  std::vector<int> repetition;  // 0 = rest buffer
  std::optional<Matrix> imu;    // rows aligned with samples
  /// Rows that do not follow the previous row in time (set when a split
  /// joins separate stretches). Windows never cross them.
  std::vector<Index> breaks;

  Index timesteps() const { return samples.rows(); }
  Index channels() const { return samples.cols(); }
  Index imu_channels() const { return imu ? imu->cols() : 0; }

  /// sEMG columns followed by IMU columns; this is what the pipeline consumes.
  Matrix features() const;

  /// Throws ValidationError when any invariant is broken.
  void validate(int num_classes, int max_repetition) const;

  /// Rows [begin, end) as a new recording.
  Recording slice(Index begin, Index end) const;
};

bool operator==(const Recording& a, const Recording& b);

/// Reads the CSV exchange format. `spec.channels` <= 0 accepts any sEMG
/// channel count; otherwise the header must carry exactly that many.
Recording load_csv(const std::filesystem::path& path, const DatasetSpec& spec);
Recording read_csv(std::istream& in, const DatasetSpec& spec);

/// Inverse of load_csv. Values are written in shortest round-trip form so a
/// reload is bit-exact.
void write_csv(const std::filesystem::path& path, const Recording& rec);
void write_csv(std::ostream& out, const Recording& rec);

struct SynthOptions {
  double gesture_s = 3.0;
  double rest_s = 2.0;
  double amplitude_min = 5.0;  // per-class channel amplitude, raw sensor units
  double amplitude_max = 50.0;
  double noise_floor = 1.0;
  double rep_jitter = 0.1;  // relative amplitude spread between repetitions
};

/// Deterministic synthetic session: gestures 1..num_gestures, each performed
/// `reps` times, every repetition followed by a rest segment.
Recording synth_recording(const DatasetSpec& spec, int num_gestures, int reps, std::uint64_t seed,
                          const SynthOptions& opts = {});

struct RepetitionSplit {
  Recording train;
  Recording val;
  Recording test;
};

/// Partitions rows by repetition. Rest rows go with the preceding repetition;
/// rest before the first repetition goes with the first one.
RepetitionSplit split_by_repetition(const Recording& rec, int test_rep, int val_rep);

}  // namespace semg
