#include "semg/windowing.hpp"

#include "binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace semg {

std::vector<std::size_t> class_histogram(const WindowSet& ws, int num_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(0, num_classes)), 0);
  for (const auto& w : ws.windows) {
    if (w.label < 0 || w.label >= num_classes)
      throw ValidationError("window label " + std::to_string(w.label) + " out of range");
    ++counts[static_cast<std::size_t>(w.label)];
  }
  return counts;
}

WindowSet slice_windows(const Recording& rec, int num_classes, double window_ms, double overlap_ms,
                        int source_id) {
  DatasetSpec spec;
  spec.num_classes = num_classes;
  spec.sample_rate_hz = rec.sample_rate_hz;
  spec.window_ms = window_ms;
  spec.overlap_ms = overlap_ms;
  spec.validate();
  const Index width = spec.window_samples();
  const Index stride = spec.stride_samples();

  WindowSet ws;
  ws.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  if (rec.timesteps() < width) {
    ws.too_short = true;
    return ws;
  }
  const Matrix features = rec.features();
  auto next_break = rec.breaks.begin();
  for (Index start = 0; start + width <= rec.timesteps(); start += stride) {
    while (next_break != rec.breaks.end() && *next_break <= start) ++next_break;
    if (next_break != rec.breaks.end() && *next_break < start + width) continue;
    int rep = 0;
    bool mixed = false;
    for (Index t = start; t < start + width && !mixed; ++t) {
      const int r = rec.repetition[static_cast<std::size_t>(t)];
      if (r == 0) continue;
      if (rep == 0) rep = r;
      else if (r != rep) mixed = true;
    }
    if (mixed) continue;
    Window w;
    w.data = features.middleRows(start, width);
    w.label = rec.gesture[static_cast<std::size_t>(start)];
    w.source_id = source_id;
    w.start = start;
    if (w.label < 0 || w.label >= num_classes)
      throw ValidationError("gesture label " + std::to_string(w.label) + " out of range");
    ++ws.class_counts[static_cast<std::size_t>(w.label)];
    ws.windows.push_back(std::move(w));
  }
  return ws;
}

WindowSet preprocess_windows(const WindowSet& ws, double sample_rate_hz, const PreprocessConfig& cfg) {
  WindowSet out = ws;
  for (auto& w : out.windows) w.data = preprocess(w.data, sample_rate_hz, cfg);
  return out;
}

WindowSet make_windows(const Recording& rec, const DatasetSpec& spec, const PreprocessConfig& cfg,
                       int source_id) {
  return preprocess_windows(
      slice_windows(rec, spec.num_classes, spec.window_ms, spec.overlap_ms, source_id),
      rec.sample_rate_hz, cfg);
}

namespace {

constexpr std::array<char, 8> kMagic{'S', 'E', 'M', 'G', 'W', 'I', 'N', '\0'};
constexpr std::uint32_t kVersion = 1;

using detail::put_le;

template <typename T>
T get_le(std::istream& in) { return detail::get_le<T>(in, "window file"); }

constexpr std::uint32_t kRecordHeaderBytes = 5 * sizeof(std::uint32_t);

}  // namespace

void write_windows(std::ostream& out, const WindowSet& ws) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ws.class_counts.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ws.windows.size()));
  for (const auto& w : ws.windows) {
    const auto rows = static_cast<std::uint32_t>(w.data.rows());
    const auto cols = static_cast<std::uint32_t>(w.data.cols());
    put_le<std::uint32_t>(out, kRecordHeaderBytes + rows * cols * 4);
    put_le<std::uint32_t>(out, rows);
    put_le<std::uint32_t>(out, cols);
    put_le<std::int32_t>(out, w.label);
    put_le<std::int32_t>(out, w.source_id);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.start));
    for (Index r = 0; r < w.data.rows(); ++r)
      for (Index c = 0; c < w.data.cols(); ++c) put_le<float>(out, static_cast<float>(w.data(r, c)));
  }
}

void write_windows(const std::filesystem::path& path, const WindowSet& ws) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_windows(out, ws);
}

WindowSet read_windows(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("not a window file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion) throw FormatError("unsupported window file version " + std::to_string(version));
  const auto num_classes = get_le<std::uint32_t>(in);
  const auto count = get_le<std::uint32_t>(in);
  WindowSet ws;
  ws.class_counts.assign(num_classes, 0);
  ws.windows.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto length = get_le<std::uint32_t>(in);
    Window w;
    const auto rows = get_le<std::uint32_t>(in);
    const auto cols = get_le<std::uint32_t>(in);
    if (length != kRecordHeaderBytes + rows * cols * 4) throw FormatError("window record length mismatch");
    w.label = get_le<std::int32_t>(in);
    w.source_id = get_le<std::int32_t>(in);
    w.start = get_le<std::uint32_t>(in);
    if (w.label < 0 || static_cast<std::uint32_t>(w.label) >= num_classes)
      throw ValidationError("window label out of range in record " + std::to_string(i));
    w.data.resize(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) w.data(r, c) = get_le<float>(in);
    ++ws.class_counts[static_cast<std::size_t>(w.label)];
    ws.windows.push_back(std::move(w));
  }
  return ws;
}

WindowSet read_windows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_windows(in);
}

}  // namespace semg
