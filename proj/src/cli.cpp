#include "semg/cli.hpp"

#include "semg/checkpoint.hpp"
#include "semg/data.hpp"
#include "semg/json.hpp"
#include "semg/train.hpp"
#include "semg/windowing.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iterator>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef SEMG_VERSION
#define SEMG_VERSION "0.0.0"
#endif

namespace semg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kSplits[] = {"train", "val", "test"};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

bool same_path(const fs::path& a, const fs::path& b) {
  return fs::weakly_canonical(a) == fs::weakly_canonical(b);
}

void require_distinct(const fs::path& in, const fs::path& out) {
  if (same_path(in, out)) throw ValidationError("output " + out.string() + " would overwrite input");
}

/// Everything a run needs to be replayed, written beside its outputs.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started = utc_now();

  void write(const fs::path& path) const {
    json j{{"command", command},
           {"argv", argv},
           {"config", config},
           {"seed", seed ? json(*seed) : json(nullptr)},
           {"inputs", inputs},
           {"outputs", outputs},
           {"version", SEMG_VERSION},
           {"started", started},
           {"finished", utc_now()}};
    write_text(path, j.dump(2) + "\n");
  }
};

fs::path manifest_beside(const fs::path& file) { return fs::path(file.string() + ".manifest.json"); }

Recording load_any_csv(const fs::path& path, double fs_hz) {
  DatasetSpec spec;
  spec.channels = 0;
  spec.num_classes = 1 << 20;
  spec.max_repetition = 1 << 20;
  spec.sample_rate_hz = fs_hz;
  try {
    auto rec = load_csv(path, spec);
    rec.sample_rate_hz = fs_hz;
    return rec;
  } catch (const Error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

int max_gesture(const Recording& rec) {
  return rec.gesture.empty() ? 0 : *std::max_element(rec.gesture.begin(), rec.gesture.end());
}

WindowSet load_split(const fs::path& dir, const std::string& split) {
  const fs::path path = dir / (split + ".win");
  try {
    return read_windows(path);
  } catch (const Error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct PreprocessOpts {
  double cutoff = 20.0;
  int order = 4;
  std::string kernel = "auto";

  void add(CLI::App* app) {
    app->add_option("--cutoff", cutoff, "High-pass cutoff in Hz")->capture_default_str();
    app->add_option("--order", order, "Butterworth order")->capture_default_str();
    app->add_option("--kernel", kernel, "Moving-average length in samples, or 'auto'")->capture_default_str();
  }
  PreprocessConfig resolve(double fs_hz) const {
    PreprocessConfig cfg;
    cfg.filter = {cutoff, order};
    if (kernel == "auto") {
      cfg.smoother.kernel_len = default_kernel_len(fs_hz);
    } else {
      try {
        std::size_t used = 0;
        cfg.smoother.kernel_len = std::stoi(kernel, &used);
        if (used != kernel.size()) throw std::invalid_argument(kernel);
      } catch (const std::exception&) {
        throw ConfigError("--kernel must be an integer or 'auto', got '" + kernel + "'");
      }
    }
    return cfg;
  }
  json to_json(double fs_hz) const {
    const auto cfg = resolve(fs_hz);
    return {{"cutoff_hz", cfg.filter.cutoff_hz}, {"order", cfg.filter.order}, {"kernel", cfg.smoother.kernel_len}};
  }
};

struct TrainOpts {
  std::uint64_t seed = 0;
  TrainConfig train;
  AugmentConfig augment;
  int expanded_channels = 128;
  double dropout = 0.36;
  std::string layout = "shared-temporal";
  bool per_timestep_bias = false;
  bool no_augment = false;
  bool corrected_snr = false;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "Seed for initialization, shuffling, dropout and noise")->required();
    app->add_option("--epochs", train.epochs)->capture_default_str();
    app->add_option("--batch-size", train.batch_size)->capture_default_str();
    app->add_option("--lr-start", train.lr_start)->capture_default_str();
    app->add_option("--lr-end", train.lr_end)->capture_default_str();
    app->add_option("--warm-epochs", train.warm_epochs, "Epochs held at --lr-start")->capture_default_str();
    app->add_option("--gamma", train.focal_gamma, "Focal loss exponent")->capture_default_str();
    app->add_option("--lookahead-k", train.lookahead.k)->capture_default_str();
    app->add_option("--lookahead-alpha", train.lookahead.alpha)->capture_default_str();
    app->add_option("--expanded-channels", expanded_channels)->capture_default_str();
    app->add_option("--dropout", dropout)->capture_default_str();
    app->add_option("--attention-layout", layout, "shared-temporal or per-channel")->capture_default_str();
    app->add_flag("--per-timestep-bias", per_timestep_bias, "One attention bias per timestep");
    app->add_flag("--no-augment", no_augment, "Train on clean windows only");
    app->add_option("--snr-min", augment.snr_min_db)->capture_default_str();
    app->add_option("--snr-max", augment.snr_max_db)->capture_default_str();
    app->add_flag("--corrected-snr", corrected_snr, "Noise power = signal power - SNR");
    app->add_option("--rest-label", augment.rest_label)->capture_default_str();
    app->add_option("--imu-channels", augment.imu_channels, "Trailing input columns that are IMU")
        ->capture_default_str();
    app->add_flag("--augment-imu", augment.augment_imu, "Add noise to IMU columns too");
  }

  void finish() {
    train.seed = seed;
    train.augment = !no_augment;
    augment.mode = corrected_snr ? SnrMode::Corrected : SnrMode::Verbatim;
    if (train.warm_epochs >= train.epochs) train.warm_epochs = train.epochs - 1;
    train.validate();
    augment.validate();
  }

  ModelConfig base_model(const WindowSet& train_set) const {
    if (train_set.empty()) throw ValidationError("training split is empty");
    ModelConfig c;
    c.num_classes = train_set.num_classes();
    c.timesteps = static_cast<int>(train_set.windows.front().data.rows());
    c.channels = static_cast<int>(train_set.windows.front().data.cols());
    c.expanded_channels = expanded_channels;
    c.dropout = dropout;
    c.attention_layout = parse_attention_layout(layout);
    c.per_timestep_bias = per_timestep_bias;
    return c;
  }

  json to_json() const { return {{"train", train}, {"augment", augment}}; }
};

ModelConfig arch_config(const std::string& arch, const ModelConfig& base) {
  if (arch == "full") return base;
  constexpr std::string_view prefix = "ablation-";
  if (arch.starts_with(prefix)) return ablation_config(arch.substr(prefix.size()), base);
  throw ConfigError("--arch must be 'full' or 'ablation-NAME', got '" + arch + "'");
}

// ---------------------------------------------------------------------------

int run_synth(int gestures, int reps, std::uint64_t seed, const fs::path& out, int channels, double fs_hz,
              Manifest& m, std::ostream& os) {
  DatasetSpec spec;
  spec.channels = channels;
  spec.sample_rate_hz = fs_hz;
  spec.num_classes = gestures + 1;
  spec.max_repetition = std::max(reps, 1);
  const auto rec = synth_recording(spec, gestures, reps, seed);
  write_csv(out, rec);
  m.config = {{"gestures", gestures}, {"reps", reps}, {"channels", channels}, {"sample_rate_hz", fs_hz}};
  m.seed = seed;
  m.outputs = {out.string()};
  m.write(manifest_beside(out));
  os << "wrote " << rec.timesteps() << " rows x " << rec.channels() << " channels to " << out.string() << '\n';
  return kExitOk;
}

int run_validate(const fs::path& file, double fs_hz, int num_classes, int max_rep, std::ostream& os) {
  DatasetSpec spec;
  spec.channels = 0;
  spec.sample_rate_hz = fs_hz;
  spec.num_classes = num_classes;
  spec.max_repetition = max_rep;
  Recording rec;
  try {
    rec = load_csv(file, spec);
    rec.sample_rate_hz = fs_hz;
    rec.validate(num_classes, max_rep);
  } catch (const Error& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  os << file.string() << ": ok, " << rec.timesteps() << " rows, " << rec.channels() << " sEMG + "
     << rec.imu_channels() << " IMU channels, gestures up to " << max_gesture(rec) << '\n';
  return kExitOk;
}

int run_preprocess(const fs::path& in, const fs::path& out, double fs_hz, const PreprocessOpts& opts, Manifest& m,
                   std::ostream& os) {
  require_distinct(in, out);
  const auto rec = load_any_csv(in, fs_hz);
  const auto cfg = opts.resolve(fs_hz);
  const Matrix y = preprocess(rec.features(), fs_hz, cfg);
  // Output row i summarizes input rows [i, i + kernel) and keeps row i's labels.
  Recording res;
  res.sample_rate_hz = fs_hz;
  res.samples = y.leftCols(rec.channels());
  if (rec.imu) res.imu = y.rightCols(rec.imu_channels());
  res.gesture.assign(rec.gesture.begin(), rec.gesture.begin() + y.rows());
  res.repetition.assign(rec.repetition.begin(), rec.repetition.begin() + y.rows());
  write_csv(out, res);
  m.config = opts.to_json(fs_hz);
  m.config["sample_rate_hz"] = fs_hz;
  m.inputs = {in.string()};
  m.outputs = {out.string()};
  m.write(manifest_beside(out));
  os << "wrote " << res.timesteps() << " rows to " << out.string() << '\n';
  return kExitOk;
}

int run_window(const std::vector<std::string>& inputs, const fs::path& out, double fs_hz, double window_ms,
               double overlap_ms, int test_rep, int val_rep, int num_classes, const PreprocessOpts& opts,
               Manifest& m, std::ostream& os) {
  // Each input (one subject, say) is split and windowed on its own so that
  // no window spans two files.
  std::vector<Recording> recs;
  int largest = 0;
  for (const auto& in : inputs) {
    recs.push_back(load_any_csv(in, fs_hz));
    const auto& r = recs.back();
    if (r.channels() != recs.front().channels() || r.imu_channels() != recs.front().imu_channels())
      throw ValidationError(in + ": column layout differs from " + inputs.front());
    largest = std::max(largest, max_gesture(r));
  }
  DatasetSpec spec;
  spec.channels = static_cast<int>(recs.front().channels());
  spec.sample_rate_hz = fs_hz;
  spec.window_ms = window_ms;
  spec.overlap_ms = overlap_ms;
  spec.num_classes = num_classes > 0 ? num_classes : largest + 1;
  spec.validate();
  const auto cfg = opts.resolve(fs_hz);

  WindowSet sets[3];
  for (auto& ws : sets) ws.class_counts.assign(static_cast<std::size_t>(spec.num_classes), 0);
  for (std::size_t f = 0; f < recs.size(); ++f) {
    auto split = split_by_repetition(recs[f], test_rep, val_rep);
    const Recording* parts[] = {&split.train, &split.val, &split.test};
    for (int i = 0; i < 3; ++i) {
      auto ws = make_windows(*parts[i], spec, cfg, static_cast<int>(f));
      for (std::size_t k = 0; k < ws.class_counts.size(); ++k) sets[i].class_counts[k] += ws.class_counts[k];
      std::move(ws.windows.begin(), ws.windows.end(), std::back_inserter(sets[i].windows));
    }
  }

  fs::create_directories(out);
  json counts = json::object();
  for (int i = 0; i < 3; ++i) {
    if (sets[i].empty()) throw ValidationError(std::string(kSplits[i]) + " split is shorter than one window");
    const fs::path path = out / (std::string(kSplits[i]) + ".win");
    for (const auto& in : inputs) require_distinct(in, path);
    write_windows(path, sets[i]);
    counts[kSplits[i]] = sets[i].class_counts;
    m.outputs.push_back(path.string());
    os << kSplits[i] << ": " << sets[i].size() << " windows\n";
  }
  m.config = opts.to_json(fs_hz);
  m.config.update({{"sample_rate_hz", fs_hz},
                   {"window_ms", window_ms},
                   {"overlap_ms", overlap_ms},
                   {"window_samples", spec.window_samples()},
                   {"stride_samples", spec.stride_samples()},
                   {"test_rep", test_rep},
                   {"val_rep", val_rep},
                   {"num_classes", spec.num_classes},
                   {"class_counts", counts}});
  m.inputs = inputs;
  write_text(out / "metadata.json", m.config.dump(2) + "\n");
  m.outputs.push_back((out / "metadata.json").string());
  m.write(out / "manifest.json");
  return kExitOk;
}

int run_augment(const fs::path& in, const fs::path& out, std::uint64_t seed, AugmentConfig cfg, bool corrected,
                Manifest& m, std::ostream& os) {
  require_distinct(in, out);
  cfg.mode = corrected ? SnrMode::Corrected : SnrMode::Verbatim;
  cfg.validate();
  fs::create_directories(out);
  SnrSampler sampler(cfg.snr_min_db, cfg.snr_max_db);
  for (int i = 0; i < 3; ++i) {
    auto ws = load_split(in, kSplits[i]);
    m.inputs.push_back((in / (std::string(kSplits[i]) + ".win")).string());
    if (i == 0) {
      Rng rng = make_rng(seed);
      for (auto& w : ws.windows) w = augment_window(w, cfg, sampler, rng);
    }
    const fs::path path = out / (std::string(kSplits[i]) + ".win");
    write_windows(path, ws);
    m.outputs.push_back(path.string());
  }
  if (fs::exists(in / "metadata.json")) {
    fs::copy_file(in / "metadata.json", out / "metadata.json", fs::copy_options::overwrite_existing);
    m.outputs.push_back((out / "metadata.json").string());
  }
  m.config = cfg;
  m.seed = seed;
  m.write(out / "manifest.json");
  os << "augmented train split written to " << out.string() << '\n';
  return kExitOk;
}

int run_train(const fs::path& data, const fs::path& out, const std::string& arch, TrainOpts opts,
              const std::string& resume, int stop_epoch, Manifest& m, std::ostream& os) {
  opts.finish();
  const auto train = load_split(data, "train");
  const auto val = load_split(data, "val");
  m.inputs = {(data / "train.win").string(), (data / "val.win").string()};

  Model model;
  OptState state;
  int start = 0;
  if (!resume.empty()) {
    auto ck = load_checkpoint(resume);
    if (!ck.optimizer) throw ValidationError(resume + ": checkpoint has no optimizer state to resume from");
    model = std::move(ck.model);
    state = std::move(*ck.optimizer);
    start = ck.next_epoch;
    m.inputs.push_back(resume);
  } else {
    model = Model::build(arch_config(arch, opts.base_model(train)), opts.seed);
    state = OptState::for_parameters(model.parameters());
  }
  if (train.num_classes() != model.config().num_classes)
    throw ValidationError("window files have " + std::to_string(train.num_classes()) + " classes, model has " +
                          std::to_string(model.config().num_classes));

  const int end = stop_epoch > 0 ? std::min(stop_epoch, opts.train.epochs) : opts.train.epochs;
  const auto result = train_loop(model, train, val, opts.train, opts.augment, &state, start, end);
  for (const auto& w : result.warnings) os << "warning: " << w << '\n';

  fs::create_directories(out);
  save_checkpoint(out / "model.ckpt", model, &state, end);
  {
    std::ofstream h(out / "history.csv");
    write_history_csv(h, result.history);
  }
  m.config = opts.to_json();
  m.config["arch"] = arch;
  m.config["model"] = model.config();
  m.config["start_epoch"] = start;
  m.config["end_epoch"] = end;
  m.config["parameters"] = model.parameter_count();
  m.seed = opts.seed;
  m.outputs = {(out / "model.ckpt").string(), (out / "history.csv").string()};
  m.write(out / "manifest.json");
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    os << "epoch " << last.epoch << ": train_loss " << last.train_loss << ", val_acc " << last.val_acc
       << ", val_mcc " << last.val_mcc << '\n';
  }
  os << "checkpoint: " << (out / "model.ckpt").string() << " (" << model.parameter_count() << " parameters)\n";
  return kExitOk;
}

void write_confusion_csv(const fs::path& path, const ConfusionMatrix& cm) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "true\\pred";
  for (int k = 0; k < cm.num_classes(); ++k) out << ',' << k;
  out << '\n';
  for (Index i = 0; i < cm.counts.rows(); ++i) {
    out << i;
    for (Index k = 0; k < cm.counts.cols(); ++k) out << ',' << cm.counts(i, k);
    out << '\n';
  }
}

void write_attention_csv(const fs::path& path, const Matrix& alpha) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "row";
  for (Index t = 0; t < alpha.cols(); ++t) out << ",t" << t;
  out << '\n';
  for (Index r = 0; r < alpha.rows(); ++r) {
    out << r;
    for (Index t = 0; t < alpha.cols(); ++t) out << ',' << alpha(r, t);
    out << '\n';
  }
}

int run_eval(const fs::path& ckpt, const fs::path& data, const std::string& split, const std::string& report_path,
             const std::string& confusion_path, const std::string& attention_path, std::size_t attention_index,
             Manifest& m, std::ostream& os) {
  const auto ck = load_checkpoint(ckpt);
  const auto ws = load_split(data, split);
  m.inputs = {ckpt.string(), (data / (split + ".win")).string()};
  if (ws.num_classes() != ck.model.config().num_classes)
    throw ValidationError("window file has " + std::to_string(ws.num_classes()) + " classes, model has " +
                          std::to_string(ck.model.config().num_classes));
  const auto report = evaluate_model(ck.model, ws);
  json j = report;
  j["split"] = split;
  j["windows"] = ws.size();

  fs::path manifest_anchor;
  if (!report_path.empty()) {
    write_text(report_path, j.dump(2) + "\n");
    m.outputs.push_back(report_path);
    manifest_anchor = report_path;
  }
  if (!confusion_path.empty()) {
    write_confusion_csv(confusion_path, report.confusion);
    m.outputs.push_back(confusion_path);
    if (manifest_anchor.empty()) manifest_anchor = confusion_path;
  }
  if (!attention_path.empty()) {
    if (attention_index >= ws.size())
      throw ValidationError("--window " + std::to_string(attention_index) + " out of range (" +
                            std::to_string(ws.size()) + " windows)");
    write_attention_csv(attention_path, ck.model.attention_map(ws.windows[attention_index].data));
    m.outputs.push_back(attention_path);
    if (manifest_anchor.empty()) manifest_anchor = attention_path;
  }
  m.config = {{"split", split}, {"model", ck.model.config()}, {"attention_window", attention_index}};
  if (!manifest_anchor.empty()) m.write(manifest_beside(manifest_anchor));
  os << "accuracy " << report.accuracy << ", balanced_accuracy " << report.balanced_accuracy << ", mcc "
     << report.mcc << " over " << ws.size() << " windows\n";
  return kExitOk;
}

int run_ablate(const fs::path& data, const fs::path& out, TrainOpts opts, const std::string& split, Manifest& m,
               std::ostream& os) {
  opts.finish();
  const auto train = load_split(data, "train");
  const auto val = load_split(data, "val");
  const auto holdout = load_split(data, split);
  m.inputs = {(data / "train.win").string(), (data / "val.win").string(), (data / (split + ".win")).string()};
  fs::create_directories(out);

  json rows = json::array();
  std::ofstream csv(out / "ablation.csv");
  csv.precision(17);
  csv << "name,label,parameters,accuracy,balanced_accuracy,mcc\n";
  for (const auto& entry : ablation_suite(opts.base_model(train))) {
    auto model = Model::build(entry.config, opts.seed);
    train_loop(model, train, val, opts.train, opts.augment);
    const auto r = evaluate_model(model, holdout);
    rows.push_back({{"name", entry.name},
                    {"label", entry.label},
                    {"parameters", model.parameter_count()},
                    {"accuracy", r.accuracy},
                    {"balanced_accuracy", r.balanced_accuracy},
                    {"mcc", r.mcc},
                    {"model", entry.config}});
    csv << entry.name << ",\"" << entry.label << "\"," << model.parameter_count() << ',' << r.accuracy << ','
        << r.balanced_accuracy << ',' << r.mcc << '\n';
    os << std::left << std::setw(32) << entry.label << std::right << std::setw(10) << model.parameter_count()
       << "  acc " << std::fixed << std::setprecision(4) << r.accuracy << "  bal " << r.balanced_accuracy
       << "  mcc " << r.mcc << std::defaultfloat << '\n';
  }
  write_text(out / "ablation.json", json{{"suite", "table3"}, {"split", split}, {"rows", rows}}.dump(2) + "\n");
  m.config = opts.to_json();
  m.config["suite"] = "table3";
  m.config["split"] = split;
  m.seed = opts.seed;
  m.outputs = {(out / "ablation.json").string(), (out / "ablation.csv").string()};
  m.write(out / "manifest.json");
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sEMG gesture classification toolchain", "semg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SEMG_VERSION);

  Manifest manifest;
  manifest.argv = args;
  double fs_hz = 200.0;
  PreprocessOpts pre;

  auto* synth = app.add_subcommand("synth", "Write a synthetic recording as CSV");
  int gestures = 4, reps = 6, channels = 16;
  std::uint64_t seed = 0;
  std::string out_path, in_path;
  synth->add_option("--classes", gestures, "Number of gestures (rest comes on top)")->required();
  synth->add_option("--reps", reps)->required();
  synth->add_option("--seed", seed)->required();
  synth->add_option("--out", out_path)->required();
  synth->add_option("--channels", channels)->capture_default_str();
  synth->add_option("--fs", fs_hz, "Sample rate in Hz")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check a CSV recording");
  std::string validate_path;
  int num_classes = 54, max_rep = 6;
  validate->add_option("file", validate_path)->required();
  validate->add_option("--num-classes", num_classes, "Labels must lie in [0, N)")->capture_default_str();
  validate->add_option("--max-rep", max_rep)->capture_default_str();
  validate->add_option("--fs", fs_hz)->capture_default_str();

  auto* prep = app.add_subcommand("preprocess", "Rectify, high-pass and smooth a CSV recording");
  prep->add_option("--in", in_path)->required();
  prep->add_option("--out", out_path)->required();
  prep->add_option("--fs", fs_hz)->capture_default_str();
  pre.add(prep);

  auto* window = app.add_subcommand("window", "Split by repetition and cut preprocessed windows");
  double window_ms = 260.0, overlap_ms = 235.0;
  int test_rep = 5, val_rep = 3, window_classes = 0;
  std::vector<std::string> window_inputs;
  window->add_option("--in", window_inputs, "Recording CSV; repeat for several subjects")->required();
  window->add_option("--out", out_path, "Output directory")->required();
  window->add_option("--window-ms", window_ms)->capture_default_str();
  window->add_option("--overlap-ms", overlap_ms)->capture_default_str();
  window->add_option("--test-rep", test_rep)->capture_default_str();
  window->add_option("--val-rep", val_rep)->capture_default_str();
  window->add_option("--num-classes", window_classes, "Default: largest gesture label + 1");
  window->add_option("--fs", fs_hz)->capture_default_str();
  pre.add(window);

  auto* augment = app.add_subcommand("augment", "Add SNR-calibrated noise to the training windows");
  AugmentConfig aug;
  bool corrected = false;
  augment->add_option("--in", in_path, "Window directory")->required();
  augment->add_option("--out", out_path, "Output directory")->required();
  augment->add_option("--seed", seed)->required();
  augment->add_option("--snr-min", aug.snr_min_db)->capture_default_str();
  augment->add_option("--snr-max", aug.snr_max_db)->capture_default_str();
  augment->add_flag("--corrected-snr", corrected, "Noise power = signal power - SNR");
  augment->add_option("--rest-label", aug.rest_label)->capture_default_str();
  augment->add_option("--imu-channels", aug.imu_channels)->capture_default_str();
  augment->add_flag("--augment-imu", aug.augment_imu);

  auto* train = app.add_subcommand("train", "Train a model on a window directory");
  TrainOpts train_opts;
  std::string data_dir, arch = "full", resume;
  int stop_epoch = 0;
  train->add_option("--data", data_dir)->required();
  train->add_option("--out", out_path, "Output directory")->required();
  train->add_option("--arch", arch, "full or ablation-NAME")->capture_default_str();
  train->add_option("--resume", resume, "Continue from a checkpoint written by train");
  train->add_option("--stop-epoch", stop_epoch, "Stop before this epoch and checkpoint");
  train_opts.add(train);

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on one split");
  std::string ckpt, split = "test", report_path, confusion_path, attention_path;
  std::size_t attention_index = 0;
  eval->add_option("--ckpt", ckpt)->required();
  eval->add_option("--data", data_dir)->required();
  eval->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  eval->add_option("--report", report_path, "Metrics JSON");
  eval->add_option("--confusion", confusion_path, "Confusion matrix CSV");
  eval->add_option("--dump-attention", attention_path, "Attention heatmap CSV for one window");
  eval->add_option("--window", attention_index, "Window index for --dump-attention")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Train and score every layer ablation");
  TrainOpts ablate_opts;
  std::string suite;
  ablate->add_option("--suite", suite)->required()->check(CLI::IsMember({"table3"}));
  ablate->add_option("--data", data_dir)->required();
  ablate->add_option("--out", out_path, "Output directory")->required();
  ablate->add_option("--split", split)->check(CLI::IsMember({"val", "test"}))->capture_default_str();
  ablate_opts.add(ablate);

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    manifest.command = sub->get_name();
    if (sub == synth) return run_synth(gestures, reps, seed, out_path, channels, fs_hz, manifest, out);
    if (sub == validate) return run_validate(validate_path, fs_hz, num_classes, max_rep, out);
    if (sub == prep) return run_preprocess(in_path, out_path, fs_hz, pre, manifest, out);
    if (sub == window)
      return run_window(window_inputs, out_path, fs_hz, window_ms, overlap_ms, test_rep, val_rep, window_classes, pre,
                        manifest, out);
    if (sub == augment) return run_augment(in_path, out_path, seed, aug, corrected, manifest, out);
    if (sub == train) return run_train(data_dir, out_path, arch, train_opts, resume, stop_epoch, manifest, out);
    if (sub == eval)
      return run_eval(ckpt, data_dir, split, report_path, confusion_path, attention_path, attention_index,
                      manifest, out);
    if (sub == ablate) return run_ablate(data_dir, out_path, ablate_opts, split, manifest, out);
    if (sub == replay) {
      const auto j = read_json(manifest_path);
      const auto argv = j.at("argv").get<std::vector<std::string>>();
      if (!argv.empty() && argv.front() == "replay") throw ValidationError("manifest records a replay");
      return dispatch(argv, out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace semg::cli
