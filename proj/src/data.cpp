#include "semg/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

namespace semg {

int ms_to_samples(double ms, double sample_rate_hz) {
  return static_cast<int>(std::floor(ms * sample_rate_hz / 1000.0 + 0.5));
}

void DatasetSpec::validate() const {
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
  if (sample_rate_hz <= 0.0) throw ValidationError("sample_rate_hz must be positive");
  if (!(overlap_ms < window_ms)) throw ValidationError("overlap_ms must be smaller than window_ms");
  if (overlap_ms < 0.0) throw ValidationError("overlap_ms must be non-negative");
  if (window_samples() < 1) throw ValidationError("window shorter than one sample");
  if (stride_samples() < 1) throw ValidationError("window stride rounds to zero samples");
}

DatasetSpec DatasetSpec::db5() { return DatasetSpec{}; }

DatasetSpec DatasetSpec::db4() {
  DatasetSpec s;
  s.channels = 12;
  s.sample_rate_hz = 2000.0;
  return s;
}

Matrix Recording::features() const {
  if (!imu) return samples;
  Matrix out(samples.rows(), samples.cols() + imu->cols());
  out << samples, *imu;
  return out;
}

void Recording::validate(int num_classes, int max_repetition) const {
  const auto n = static_cast<std::size_t>(samples.rows());
  if (gesture.size() != n || repetition.size() != n)
    throw ValidationError("label columns do not match sample row count");
  if (imu && static_cast<std::size_t>(imu->rows()) != n)
    throw ValidationError("imu row count does not match sample row count");
  if (!(sample_rate_hz > 0.0)) throw ValidationError("sample_rate_hz must be positive");
  if (samples.cols() < 1) throw ValidationError("recording has no channels");
  for (std::size_t i = 0; i < n; ++i) {
    if (gesture[i] < 0 || gesture[i] >= num_classes)
      throw ValidationError("gesture label " + std::to_string(gesture[i]) + " out of range at row " +
                            std::to_string(i));
    if (repetition[i] < 0 || repetition[i] > max_repetition)
      throw ValidationError("repetition label " + std::to_string(repetition[i]) +
                            " out of range at row " + std::to_string(i));
  }
}

Recording Recording::slice(Index begin, Index end) const {
  Recording r;
  r.sample_rate_hz = sample_rate_hz;
  r.samples = samples.middleRows(begin, end - begin);
  r.gesture.assign(gesture.begin() + begin, gesture.begin() + end);
  r.repetition.assign(repetition.begin() + begin, repetition.begin() + end);
  if (imu) r.imu = imu->middleRows(begin, end - begin);
  for (Index b : breaks)
    if (b > begin && b < end) r.breaks.push_back(b - begin);
  return r;
}

bool operator==(const Recording& a, const Recording& b) {
  if (a.sample_rate_hz != b.sample_rate_hz) return false;
  if (a.samples.rows() != b.samples.rows() || a.samples.cols() != b.samples.cols()) return false;
  if (a.samples != b.samples) return false;
  if (a.gesture != b.gesture || a.repetition != b.repetition || a.breaks != b.breaks) return false;
  if (a.imu.has_value() != b.imu.has_value()) return false;
  if (a.imu) {
    if (a.imu->rows() != b.imu->rows() || a.imu->cols() != b.imu->cols()) return false;
    if (*a.imu != *b.imu) return false;
  }
  return true;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Returns the index N in "<prefix>N", or -1.
int column_index(std::string_view name, std::string_view prefix) {
  if (name.substr(0, prefix.size()) != prefix) return -1;
  const auto digits = name.substr(prefix.size());
  if (digits.empty()) return -1;
  int idx = -1;
  const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
  if (ec != std::errc() || p != digits.data() + digits.size()) return -1;
  return idx;
}

struct Header {
  int channels = 0;
  int imu = 0;
};

Header parse_header(std::string_view line) {
  const auto fields = split_fields(line);
  if (fields.size() < 3) throw FormatError("header needs ch0..chN, gesture, repetition");
  if (fields[fields.size() - 2] != "gesture" || fields.back() != "repetition")
    throw FormatError("header must end with gesture,repetition");
  Header h;
  std::size_t i = 0;
  for (; i + 2 < fields.size() && column_index(fields[i], "ch") == static_cast<int>(i); ++i)
    ++h.channels;
  for (; i + 2 < fields.size() && column_index(fields[i], "imu") == h.imu; ++i) ++h.imu;
  if (i + 2 != fields.size())
    throw FormatError("unexpected header column '" + std::string(fields[i]) + "'");
  if (h.channels == 0) throw FormatError("header has no ch0 column");
  return h;
}

double parse_real(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ParseError("non-numeric cell '" + std::string(s) + "' on line " + std::to_string(line_no),
                     line_no);
  return v;
}

int parse_label(std::string_view s, std::size_t line_no) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ParseError("non-integer label '" + std::string(s) + "' on line " + std::to_string(line_no),
                     line_no);
  return v;
}

void put_real(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.write(buf.data(), p - buf.data());
}

}  // namespace

Recording read_csv(std::istream& in, const DatasetSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const Header h = parse_header(line);
  if (spec.channels > 0 && h.channels != spec.channels)
    throw FormatError("header has " + std::to_string(h.channels) + " sEMG channels, expected " +
                      std::to_string(spec.channels));

  const std::size_t width = static_cast<std::size_t>(h.channels + h.imu + 2);
  std::vector<double> emg;
  std::vector<double> imu;
  Recording rec;
  rec.sample_rate_hz = spec.sample_rate_hz;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width)
      throw ParseError("expected " + std::to_string(width) + " cells on line " +
                           std::to_string(line_no) + ", got " + std::to_string(fields.size()),
                       line_no);
    for (int c = 0; c < h.channels; ++c) emg.push_back(parse_real(fields[c], line_no));
    for (int c = 0; c < h.imu; ++c) imu.push_back(parse_real(fields[h.channels + c], line_no));
    const int g = parse_label(fields[width - 2], line_no);
    const int r = parse_label(fields[width - 1], line_no);
    if (g < 0 || g >= spec.num_classes)
      throw ValidationError("gesture label " + std::to_string(g) + " out of range [0, " +
                            std::to_string(spec.num_classes) + ") on line " + std::to_string(line_no));
    if (r < 0 || r > spec.max_repetition)
      throw ValidationError("repetition label " + std::to_string(r) + " out of range [0, " +
                            std::to_string(spec.max_repetition) + "] on line " +
                            std::to_string(line_no));
    rec.gesture.push_back(g);
    rec.repetition.push_back(r);
  }
  const auto rows = static_cast<Index>(rec.gesture.size());
  rec.samples = Eigen::Map<const Matrix>(emg.data(), rows, h.channels);
  if (h.imu > 0) rec.imu = Eigen::Map<const Matrix>(imu.data(), rows, h.imu);
  rec.validate(spec.num_classes, spec.max_repetition);
  return rec;
}

Recording load_csv(const std::filesystem::path& path, const DatasetSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_csv(in, spec);
}

void write_csv(std::ostream& out, const Recording& rec) {
  for (Index c = 0; c < rec.channels(); ++c) out << (c ? "," : "") << "ch" << c;
  for (Index c = 0; c < rec.imu_channels(); ++c) out << ",imu" << c;
  out << ",gesture,repetition\n";
  for (Index t = 0; t < rec.timesteps(); ++t) {
    for (Index c = 0; c < rec.channels(); ++c) {
      if (c) out << ',';
      put_real(out, rec.samples(t, c));
    }
    for (Index c = 0; c < rec.imu_channels(); ++c) {
      out << ',';
      put_real(out, (*rec.imu)(t, c));
    }
    out << ',' << rec.gesture[t] << ',' << rec.repetition[t] << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Recording& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_csv(out, rec);
}

Recording synth_recording(const DatasetSpec& spec, int num_gestures, int reps, std::uint64_t seed,
                          const SynthOptions& opts) {
  if (num_gestures < 1) throw ValidationError("synth_recording needs at least one gesture");
  if (reps < 1) throw ValidationError("synth_recording needs at least one repetition");
  if (spec.channels < 1) throw ValidationError("synth_recording needs at least one channel");
  if (num_gestures >= spec.num_classes)
    throw ValidationError("num_gestures must be below num_classes (class 0 is rest)");

  const double fs = spec.sample_rate_hz;
  const int channels = spec.channels;
  const auto gesture_len = static_cast<Index>(std::lround(opts.gesture_s * fs));
  const auto rest_len = static_cast<Index>(std::lround(opts.rest_s * fs));
  const Index total = static_cast<Index>(num_gestures) * reps * (gesture_len + rest_len);

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Class signature: per-channel amplitude and spectral tilt of the noise
  // that stands in for motor-unit activity.
  Matrix amplitude(num_gestures, channels);
  Matrix tilt(num_gestures, channels);
  for (int g = 0; g < num_gestures; ++g)
    for (int c = 0; c < channels; ++c) {
      amplitude(g, c) = opts.amplitude_min + (opts.amplitude_max - opts.amplitude_min) * unit(rng);
      tilt(g, c) = 0.8 * unit(rng);
    }

  Recording rec;
  rec.sample_rate_hz = fs;
  rec.samples.resize(total, channels);
  rec.gesture.reserve(total);
  rec.repetition.reserve(total);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  Index row = 0;
  RowVec previous = RowVec::Zero(channels);
  for (int g = 0; g < num_gestures; ++g) {
    for (int r = 1; r <= reps; ++r) {
      const double scale = std::max(0.5, 1.0 + opts.rep_jitter * normal(rng));
      RowVec env_phase(channels);
      for (int c = 0; c < channels; ++c) env_phase(c) = two_pi * unit(rng);
      for (Index t = 0; t < gesture_len; ++t, ++row) {
        const double time = static_cast<double>(t) / fs;
        for (int c = 0; c < channels; ++c) {
          // x[t] = n[t] - a n[t-1], normalized to unit variance
          const double white = normal(rng);
          const double a = tilt(g, c);
          const double band = (white - a * previous(c)) / std::sqrt(1.0 + a * a);
          previous(c) = white;
          const double envelope = 1.0 + 0.3 * std::sin(two_pi * 0.5 * time + env_phase(c));
          rec.samples(row, c) = scale * amplitude(g, c) * envelope * band + opts.noise_floor * normal(rng);
        }
        rec.gesture.push_back(g + 1);
        rec.repetition.push_back(r);
      }
      for (Index t = 0; t < rest_len; ++t, ++row) {
        for (int c = 0; c < channels; ++c) rec.samples(row, c) = opts.noise_floor * normal(rng);
        rec.gesture.push_back(0);
        rec.repetition.push_back(0);
      }
    }
  }
  return rec;
}

RepetitionSplit split_by_repetition(const Recording& rec, int test_rep, int val_rep) {
  if (test_rep == val_rep) throw ValidationError("test and validation repetitions must differ");
  const auto& reps = rec.repetition;
  const bool has_test = std::find(reps.begin(), reps.end(), test_rep) != reps.end();
  const bool has_val = std::find(reps.begin(), reps.end(), val_rep) != reps.end();
  if (test_rep <= 0 || !has_test)
    throw ValidationError("repetition " + std::to_string(test_rep) + " not present");
  if (val_rep <= 0 || !has_val)
    throw ValidationError("repetition " + std::to_string(val_rep) + " not present");

  const auto first = std::find_if(reps.begin(), reps.end(), [](int r) { return r > 0; });
  int owner = first == reps.end() ? 0 : *first;

  std::vector<Index> rows[3];
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i] > 0) owner = reps[i];
    const int bucket = owner == test_rep ? 2 : owner == val_rep ? 1 : 0;
    rows[bucket].push_back(static_cast<Index>(i));
  }

  const auto gather = [&](const std::vector<Index>& idx) {
    Recording out;
    out.sample_rate_hz = rec.sample_rate_hz;
    out.samples.resize(static_cast<Index>(idx.size()), rec.channels());
    if (rec.imu) out.imu = Matrix(static_cast<Index>(idx.size()), rec.imu_channels());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto i = idx[k];
      out.samples.row(static_cast<Index>(k)) = rec.samples.row(i);
      if (rec.imu) out.imu->row(static_cast<Index>(k)) = rec.imu->row(i);
      out.gesture.push_back(rec.gesture[i]);
      out.repetition.push_back(rec.repetition[i]);
      if (k > 0 && i != idx[k - 1] + 1) out.breaks.push_back(static_cast<Index>(k));
    }
    return out;
  };
  return {gather(rows[0]), gather(rows[1]), gather(rows[2])};
}

}  // namespace semg
