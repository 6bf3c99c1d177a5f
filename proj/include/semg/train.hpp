#pragma once

#include "semg/augment.hpp"
#include "semg/core.hpp"
#include "semg/metrics.hpp"
#include "semg/model.hpp"
#include "semg/windowing.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace semg {

struct RAdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct LookaheadConfig {
  int k = 6;
  double alpha = 0.5;
};

struct TrainConfig {
  int epochs = 55;
  int batch_size = 128;
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  int warm_epochs = 5;
  double focal_gamma = 2.0;
  RAdamConfig radam;
  LookaheadConfig lookahead;
  std::uint64_t seed = 0;
  bool augment = true;

  void validate() const;
};

/// Optimizer state, one entry per model parameter (in model order).
struct OptState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::vector<Matrix> slow;  // Lookahead slow weights
  std::int64_t step = 0;

  static OptState for_parameters(std::span<const Parameter> params);
  /// Throws DimensionError unless every buffer matches its parameter.
  void check(std::span<const Parameter> params) const;
};

/// rho_inf = 2 / (1 - beta2) - 1
double radam_rho_inf(double beta2);
/// rho_t = rho_inf - 2 t beta2^t / (1 - beta2^t)
double radam_rho(std::int64_t t, double beta2);
/// Steps with rho_t above this use the variance-rectified adaptive update.
inline constexpr double kRAdamRhoThreshold = 4.0;

/// One RAdam update of every trainable parameter from its `grad`; increments
/// state.step first.
void radam_step(std::span<Parameter> params, OptState& state, double lr, const RAdamConfig& cfg);

/// Every k-th step: slow += alpha (fast - slow); fast = slow. Returns true
/// when a sync happened.
bool lookahead_sync(std::span<Matrix> fast, std::span<Matrix> slow, int k, double alpha, std::int64_t step);
bool lookahead_sync(std::span<Parameter> params, OptState& state, const LookaheadConfig& cfg);

/// Flat lr_start for epoch < warm_epochs, then cosine from lr_start down to
/// lr_end at the final epoch. Fractional epochs are accepted.
double lr_schedule(double epoch, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double val_balacc = 0.0;
  double val_mcc = 0.0;
};

bool operator==(const EpochRecord& a, const EpochRecord& b);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t clamped_probabilities = 0;
  std::vector<std::string> warnings;
};

/// Trains epochs [start_epoch, end_epoch) (end_epoch < 0 means cfg.epochs).
/// Each epoch draws from its own stream (seed, epoch), so a run resumed from
/// a checkpoint follows the same trajectory as an uninterrupted one.
TrainResult train_loop(Model& model, const WindowSet& train, const WindowSet& val, const TrainConfig& cfg,
                       const AugmentConfig& augment, OptState* state = nullptr, int start_epoch = 0,
                       int end_epoch = -1);

/// Inference over a window set in fixed-size chunks.
Matrix predict_windows(const Model& model, const WindowSet& windows);
EvalReport evaluate_model(const Model& model, const WindowSet& windows);

/// epoch,lr,train_loss,val_loss,val_acc,val_balacc,val_mcc
void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace semg
