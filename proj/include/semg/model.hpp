#pragma once

#include "semg/attention.hpp"
#include "semg/core.hpp"
#include "semg/loss.hpp"
#include "semg/nn.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semg {

enum class ExpansionKind { Dense, Conv1d, FrozenDense, None };
enum class AttentionKind { Paper, Raffel, TemporalSum };
enum class ClassifierKind { Full, Small, None };

struct ModelConfig {
  ExpansionKind expansion = ExpansionKind::Dense;
  AttentionKind attention = AttentionKind::Paper;
  ClassifierKind classifier = ClassifierKind::Full;
  bool layernorm = true;
  nn::Activation activation = nn::Activation::Mish;
  int expanded_channels = 128;
  int num_classes = 54;
  int timesteps = 38;
  int channels = 16;
  double dropout = 0.36;
  AttentionLayout attention_layout = AttentionLayout::SharedTemporal;
  bool per_timestep_bias = false;
  int conv_kernel = 3;

  /// Widths of the hidden classifier layers: {500, 500, 2000}, {500} or {}.
  std::vector<int> hidden_sizes() const;
  /// Channel count seen by the attention layer.
  int attention_channels() const;
  void validate() const;
};

std::string to_string(ExpansionKind k);
std::string to_string(AttentionKind k);
std::string to_string(ClassifierKind k);
std::string to_string(nn::Activation a);
std::string to_string(AttentionLayout l);

/// Enum parsers for CLI flags and config files; throw ConfigError.
ExpansionKind parse_expansion(std::string_view s);
AttentionKind parse_attention(std::string_view s);
ClassifierKind parse_classifier(std::string_view s);
nn::Activation parse_activation(std::string_view s);
AttentionLayout parse_attention_layout(std::string_view s);

struct AblationEntry {
  std::string name;   // CLI name, e.g. "conv1d"
  std::string label;  // row label of the layer-by-layer study
  ModelConfig config;
};

/// The ten layer-by-layer ablation rows, derived from `base`.
std::vector<AblationEntry> ablation_suite(const ModelConfig& base);

/// One suite entry by name ("full", "conv1d", "frozen", "no-expansion",
/// "raffel", "temporal-sum", "small-classifier", "no-classifier",
/// "no-layernorm", "relu"). Throws ConfigError for unknown names.
ModelConfig ablation_config(std::string_view name, const ModelConfig& base);

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
};

struct LossStats {
  double loss = 0.0;
  std::size_t clamped = 0;
};

class Model {
 public:
  /// Per-window intermediates kept for the backward pass.
  struct WindowTrace {
    Matrix input;
    Matrix pre_activation;
    nn::LayerNormCache<double> norm;
    Matrix attention_input;
    Matrix alpha;
  };
  struct HiddenTrace {
    Matrix input;
    Matrix pre_activation;
    nn::LayerNormCache<double> norm;
    Matrix mask;
  };
  struct Pass {
    std::vector<WindowTrace> windows;
    std::vector<HiddenTrace> hidden;
    Matrix head_input;
    Matrix probs;  // N x num_classes
  };

  /// Fan-in scaled uniform weights, zero biases, unit layer-norm gains.
  static Model build(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(std::string_view name);
  const Parameter& parameter(std::string_view name) const;

  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;

  /// Dropout is drawn from `rng` only when `training` is set.
  Pass forward(std::span<const Matrix> windows, bool training, Rng* rng = nullptr) const;

  /// Class probabilities for one window (inference mode).
  RowVec predict(const Matrix& window) const;
  Matrix predict(std::span<const Matrix> windows) const;

  /// Mean focal loss over the batch; overwrites every parameter gradient.
  /// Non-trainable parameters keep a zero gradient.
  LossStats backward(const Pass& pass, std::span<const int> targets, const LossConfig& loss);

  void zero_grad();

  /// Attention matrix for one window: C x T (paper), 1 x T (Raffel), or a
  /// uniform 1 x T row for the temporal sum.
  Matrix attention_map(const Matrix& window) const;

 private:
  struct Slots {
    int exp_weight = -1, exp_bias = -1, exp_gain = -1, exp_shift = -1;
    int att_weight = -1, att_bias = -1;
    struct Hidden {
      int weight = -1, bias = -1, gain = -1, shift = -1;
    };
    std::vector<Hidden> hidden;
    int out_weight = -1, out_bias = -1;
  };

  int add(std::string name, Index rows, Index cols, bool trainable);
  const Matrix& value(int slot) const { return params_[static_cast<std::size_t>(slot)].value; }
  RowVec row(int slot) const { return params_[static_cast<std::size_t>(slot)].value; }
  Matrix& grad(int slot) { return params_[static_cast<std::size_t>(slot)].grad; }

  ModelConfig config_;
  std::vector<Parameter> params_;
  Slots slots_;
};

}  // namespace semg
