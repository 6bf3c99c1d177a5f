#pragma once

#include "semg/core.hpp"
#include "semg/data.hpp"
#include "semg/dsp.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace semg {

struct Window {
  Matrix data;  // timesteps x channels
  int label = 0;
  int source_id = 0;
  Index start = 0;  // first row in the source recording
};

struct WindowSet {
  std::vector<Window> windows;
  std::vector<std::size_t> class_counts;  // one bin per class
  bool too_short = false;                 // source shorter than one window

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  int num_classes() const { return static_cast<int>(class_counts.size()); }
};

std::vector<std::size_t> class_histogram(const WindowSet& ws, int num_classes);

/// Overlapping fixed-length windows over `rec.features()`, sorted by start.
/// A window is labelled with the gesture of its first sample and dropped
/// when it touches two different (non-zero) repetitions. A tail shorter
/// than one window is dropped.
WindowSet slice_windows(const Recording& rec, int num_classes, double window_ms = 260.0,
                        double overlap_ms = 235.0, int source_id = 0);

/// Applies `preprocess` to every window independently.
WindowSet preprocess_windows(const WindowSet& ws, double sample_rate_hz, const PreprocessConfig& cfg);

/// Slice raw windows then preprocess each one (52 -> 38 samples for DB5).
WindowSet make_windows(const Recording& rec, const DatasetSpec& spec, const PreprocessConfig& cfg,
                       int source_id = 0);

/// Length-prefixed binary records, little-endian, float32 payload.
/// See docs/formats.md for the byte layout.
void write_windows(std::ostream& out, const WindowSet& ws);
void write_windows(const std::filesystem::path& path, const WindowSet& ws);
WindowSet read_windows(std::istream& in);
WindowSet read_windows(const std::filesystem::path& path);

}  // namespace semg
