#include "semg/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

namespace semg {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_end < lr_start)) throw ConfigError("lr_end must be below lr_start");
  if (warm_epochs < 0 || warm_epochs >= epochs) throw ConfigError("warm_epochs must be in [0, epochs)");
  if (focal_gamma < 0.0) throw ConfigError("focal_gamma must be non-negative");
  if (lookahead.k < 1) throw ConfigError("lookahead k must be >= 1");
  if (!(lookahead.alpha >= 0.0 && lookahead.alpha <= 1.0)) throw ConfigError("lookahead alpha must be in [0, 1]");
}

OptState OptState::for_parameters(std::span<const Parameter> params) {
  OptState s;
  for (const auto& p : params) {
    s.first_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    s.second_moment.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    s.slow.push_back(p.value);
  }
  return s;
}

void OptState::check(std::span<const Parameter> params) const {
  if (first_moment.size() != params.size() || second_moment.size() != params.size() ||
      slow.size() != params.size())
    throw DimensionError("optimizer state does not match parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto r = params[i].value.rows();
    const auto c = params[i].value.cols();
    for (const auto* m : {&first_moment[i], &second_moment[i], &slow[i]})
      if (m->rows() != r || m->cols() != c)
        throw DimensionError("optimizer state shape mismatch for " + params[i].name);
  }
}

double radam_rho_inf(double beta2) { return 2.0 / (1.0 - beta2) - 1.0; }

double radam_rho(std::int64_t t, double beta2) {
  const double bt = std::pow(beta2, static_cast<double>(t));
  return radam_rho_inf(beta2) - 2.0 * static_cast<double>(t) * bt / (1.0 - bt);
}

void radam_step(std::span<Parameter> params, OptState& state, double lr, const RAdamConfig& cfg) {
  state.check(params);
  const std::int64_t t = ++state.step;
  const double td = static_cast<double>(t);
  const double bias1 = 1.0 - std::pow(cfg.beta1, td);
  const double bias2 = 1.0 - std::pow(cfg.beta2, td);
  const double rho_inf = radam_rho_inf(cfg.beta2);
  const double rho = radam_rho(t, cfg.beta2);
  const bool adaptive = rho > kRAdamRhoThreshold;
  const double rect =
      adaptive ? std::sqrt((rho - 4.0) * (rho - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho)) : 0.0;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * p.grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    if (adaptive) {
      const auto scale = std::sqrt(bias2) / (v.array().sqrt() + cfg.eps);
      p.value.array() -= (lr * rect / bias1) * m.array() * scale;
    } else {
      p.value -= (lr / bias1) * m;
    }
  }
}

bool lookahead_sync(std::span<Matrix> fast, std::span<Matrix> slow, int k, double alpha, std::int64_t step) {
  if (fast.size() != slow.size()) throw DimensionError("lookahead: fast/slow count mismatch");
  if (k < 1 || step <= 0 || step % k != 0) return false;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    slow[i] += alpha * (fast[i] - slow[i]);
    fast[i] = slow[i];
  }
  return true;
}

bool lookahead_sync(std::span<Parameter> params, OptState& state, const LookaheadConfig& cfg) {
  state.check(params);
  if (cfg.k < 1 || state.step <= 0 || state.step % cfg.k != 0) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    state.slow[i] += cfg.alpha * (params[i].value - state.slow[i]);
    params[i].value = state.slow[i];
  }
  return true;
}

double lr_schedule(double epoch, const TrainConfig& cfg) {
  if (epoch < cfg.warm_epochs) return cfg.lr_start;
  const double span = static_cast<double>(cfg.epochs - 1 - cfg.warm_epochs);
  const double progress = span <= 0.0 ? 1.0 : std::clamp((epoch - cfg.warm_epochs) / span, 0.0, 1.0);
  return cfg.lr_end + 0.5 * (cfg.lr_start - cfg.lr_end) * (1.0 + std::cos(std::numbers::pi * progress));
}

bool operator==(const EpochRecord& a, const EpochRecord& b) {
  return a.epoch == b.epoch && a.lr == b.lr && a.train_loss == b.train_loss && a.val_loss == b.val_loss &&
         a.val_acc == b.val_acc && a.val_balacc == b.val_balacc && a.val_mcc == b.val_mcc;
}

Matrix predict_windows(const Model& model, const WindowSet& windows) {
  constexpr std::size_t kChunk = 256;
  Matrix probs(static_cast<Index>(windows.size()), model.config().num_classes);
  std::vector<Matrix> batch;
  for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
    const std::size_t end = std::min(windows.size(), begin + kChunk);
    batch.clear();
    for (std::size_t i = begin; i < end; ++i) batch.push_back(windows.windows[i].data);
    probs.middleRows(static_cast<Index>(begin), static_cast<Index>(end - begin)) = model.predict(batch);
  }
  return probs;
}

EvalReport evaluate_model(const Model& model, const WindowSet& windows) {
  const auto predicted = argmax_rows(predict_windows(model, windows));
  std::vector<int> truth;
  truth.reserve(windows.size());
  for (const auto& w : windows.windows) truth.push_back(w.label);
  return evaluate(predicted, truth, model.config().num_classes);
}

TrainResult train_loop(Model& model, const WindowSet& train, const WindowSet& val, const TrainConfig& cfg,
                       const AugmentConfig& augment, OptState* state, int start_epoch, int end_epoch) {
  cfg.validate();
  augment.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  const int last = end_epoch < 0 ? cfg.epochs : std::min(end_epoch, cfg.epochs);

  TrainResult result;
  const int num_classes = model.config().num_classes;
  const auto counts = class_histogram(train, num_classes);
  for (int k = 0; k < num_classes; ++k)
    if (counts[static_cast<std::size_t>(k)] == 0)
      result.warnings.push_back("class " + std::to_string(k) + " has no training windows");

  OptState local;
  if (!state) {
    local = OptState::for_parameters(model.parameters());
    state = &local;
  }
  state->check(model.parameters());

  SnrSampler sampler(augment.snr_min_db, augment.snr_max_db);
  const LossConfig loss{cfg.focal_gamma};
  std::vector<std::size_t> order(train.size());
  std::vector<Matrix> batch;
  std::vector<int> targets;

  for (int epoch = start_epoch; epoch < last; ++epoch) {
    Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(epoch) + 1);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = lr_schedule(epoch, cfg);
    double loss_sum = 0.0;

    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      targets.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const Window& w = train.windows[order[i]];
        if (cfg.augment)
          batch.push_back(augment_window(w, augment, sampler, rng).data);
        else
          batch.push_back(w.data);
        targets.push_back(w.label);
      }
      const auto pass = model.forward(batch, true, &rng);
      const auto stats = model.backward(pass, targets, loss);
      loss_sum += stats.loss * static_cast<double>(end - begin);
      result.clamped_probabilities += stats.clamped;
      radam_step(model.parameters(), *state, lr, cfg.radam);
      lookahead_sync(model.parameters(), *state, cfg.lookahead);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    if (!val.empty()) {
      const Matrix probs = predict_windows(model, val);
      std::vector<int> truth;
      truth.reserve(val.size());
      double val_loss = 0.0;
      for (std::size_t i = 0; i < val.size(); ++i) {
        truth.push_back(val.windows[i].label);
        val_loss += focal_loss(probs.row(static_cast<Index>(i)), truth.back(), cfg.focal_gamma).loss;
      }
      rec.val_loss = val_loss / static_cast<double>(val.size());
      const auto report = evaluate(argmax_rows(probs), truth, num_classes);
      rec.val_acc = report.accuracy;
      rec.val_balacc = report.balanced_accuracy;
      rec.val_mcc = report.mcc;
    }
    result.history.push_back(rec);
  }
  return result;
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,lr,train_loss,val_loss,val_acc,val_balacc,val_mcc\n";
  const auto precision = out.precision(17);
  for (const auto& r : history)
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << ','
        << r.val_balacc << ',' << r.val_mcc << '\n';
  out.precision(precision);
}

}  // namespace semg
