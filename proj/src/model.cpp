#include "semg/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace semg {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
  for (const auto& [name, value] : table)
    if (name == s) return value;
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, ExpansionKind>, 4> kExpansions{{
    {"dense", ExpansionKind::Dense},
    {"conv1d-k3", ExpansionKind::Conv1d},
    {"frozen-dense", ExpansionKind::FrozenDense},
    {"none", ExpansionKind::None},
}};
constexpr std::array<std::pair<std::string_view, AttentionKind>, 3> kAttentions{{
    {"paper", AttentionKind::Paper},
    {"raffel", AttentionKind::Raffel},
    {"temporal-sum", AttentionKind::TemporalSum},
}};
constexpr std::array<std::pair<std::string_view, ClassifierKind>, 3> kClassifiers{{
    {"full", ClassifierKind::Full},
    {"small", ClassifierKind::Small},
    {"none", ClassifierKind::None},
}};
constexpr std::array<std::pair<std::string_view, nn::Activation>, 2> kActivations{{
    {"mish", nn::Activation::Mish},
    {"relu", nn::Activation::Relu},
}};
constexpr std::array<std::pair<std::string_view, AttentionLayout>, 2> kLayouts{{
    {"shared-temporal", AttentionLayout::SharedTemporal},
    {"per-channel", AttentionLayout::PerChannel},
}};

template <typename Enum, std::size_t N>
std::string enum_name(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [name, value] : table)
    if (value == v) return std::string(name);
  return "?";
}

}  // namespace

std::string to_string(ExpansionKind k) { return enum_name(k, kExpansions); }
std::string to_string(AttentionKind k) { return enum_name(k, kAttentions); }
std::string to_string(ClassifierKind k) { return enum_name(k, kClassifiers); }
std::string to_string(nn::Activation a) { return enum_name(a, kActivations); }
std::string to_string(AttentionLayout l) { return enum_name(l, kLayouts); }

ExpansionKind parse_expansion(std::string_view s) { return parse_enum(s, kExpansions, "expansion"); }
AttentionKind parse_attention(std::string_view s) { return parse_enum(s, kAttentions, "attention"); }
ClassifierKind parse_classifier(std::string_view s) { return parse_enum(s, kClassifiers, "classifier"); }
nn::Activation parse_activation(std::string_view s) { return parse_enum(s, kActivations, "activation"); }
AttentionLayout parse_attention_layout(std::string_view s) {
  return parse_enum(s, kLayouts, "attention layout");
}

std::vector<int> ModelConfig::hidden_sizes() const {
  switch (classifier) {
    case ClassifierKind::Full: return {500, 500, 2000};
    case ClassifierKind::Small: return {500};
    case ClassifierKind::None: return {};
  }
  return {};
}

int ModelConfig::attention_channels() const {
  return expansion == ExpansionKind::None ? channels : expanded_channels;
}

void ModelConfig::validate() const {
  if (expanded_channels < 1) throw ConfigError("expanded_channels must be >= 1");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (timesteps < 1) throw ConfigError("timesteps must be >= 1");
  if (channels < 1) throw ConfigError("channels must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (expansion == ExpansionKind::Conv1d && (conv_kernel < 1 || conv_kernel % 2 == 0))
    throw ConfigError("conv1d expansion needs an odd kernel size");
  if (attention != AttentionKind::Paper &&
      (attention_layout != AttentionLayout::SharedTemporal || per_timestep_bias))
    throw ConfigError("attention layout options only apply to the paper attention");
  if (layernorm && expansion != ExpansionKind::None && attention_channels() < 2)
    throw ConfigError("layer normalization needs at least two expanded channels");
}

std::vector<AblationEntry> ablation_suite(const ModelConfig& base) {
  std::vector<AblationEntry> suite;
  const auto with = [&](std::string name, std::string label, auto&& edit) {
    ModelConfig c = base;
    edit(c);
    suite.push_back({std::move(name), std::move(label), c});
  };
  with("full", "Fully connected", [](ModelConfig&) {});
  with("conv1d", "Conv1D", [](ModelConfig& c) { c.expansion = ExpansionKind::Conv1d; });
  with("frozen", "Frozen fully connected layer",
       [](ModelConfig& c) { c.expansion = ExpansionKind::FrozenDense; });
  with("no-expansion", "No expansion", [](ModelConfig& c) { c.expansion = ExpansionKind::None; });
  with("raffel", "Raffel attention", [](ModelConfig& c) {
    c.attention = AttentionKind::Raffel;
    c.attention_layout = AttentionLayout::SharedTemporal;
    c.per_timestep_bias = false;
  });
  with("temporal-sum", "Temporal sum", [](ModelConfig& c) {
    c.attention = AttentionKind::TemporalSum;
    c.attention_layout = AttentionLayout::SharedTemporal;
    c.per_timestep_bias = false;
  });
  with("small-classifier", "Small classifier net",
       [](ModelConfig& c) { c.classifier = ClassifierKind::Small; });
  with("no-classifier", "No classifier net", [](ModelConfig& c) { c.classifier = ClassifierKind::None; });
  with("no-layernorm", "No layer normalization", [](ModelConfig& c) { c.layernorm = false; });
  with("relu", "Relu instead of Mish", [](ModelConfig& c) { c.activation = nn::Activation::Relu; });
  return suite;
}

ModelConfig ablation_config(std::string_view name, const ModelConfig& base) {
  for (auto& e : ablation_suite(base))
    if (e.name == name) return e.config;
  throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

int Model::add(std::string name, Index rows, Index cols, bool trainable) {
  params_.push_back({std::move(name), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols), trainable});
  return static_cast<int>(params_.size() - 1);
}

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config_ = config;
  auto& s = m.slots_;
  Rng rng = make_rng(seed);

  const auto init_uniform = [&](int slot, double fan_in) {
    const double limit = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> u(-limit, limit);
    auto& v = m.params_[static_cast<std::size_t>(slot)].value;
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = u(rng);
  };
  const auto init_ones = [&](int slot) { m.params_[static_cast<std::size_t>(slot)].value.setOnes(); };

  const Index c_in = config.channels;
  const Index width = config.expanded_channels;
  const Index t = config.timesteps;

  switch (config.expansion) {
    case ExpansionKind::Dense:
    case ExpansionKind::FrozenDense: {
      const bool trainable = config.expansion == ExpansionKind::Dense;
      s.exp_weight = m.add("expansion.weight", c_in, width, trainable);
      s.exp_bias = m.add("expansion.bias", 1, width, trainable);
      init_uniform(s.exp_weight, static_cast<double>(c_in));
      break;
    }
    case ExpansionKind::Conv1d:
      s.exp_weight = m.add("expansion.weight", config.conv_kernel * c_in, width, true);
      s.exp_bias = m.add("expansion.bias", 1, width, true);
      init_uniform(s.exp_weight, static_cast<double>(config.conv_kernel * c_in));
      break;
    case ExpansionKind::None:
      break;
  }
  if (config.expansion != ExpansionKind::None && config.layernorm) {
    s.exp_gain = m.add("expansion.norm.gain", 1, width, true);
    s.exp_shift = m.add("expansion.norm.shift", 1, width, true);
    init_ones(s.exp_gain);
  }

  const Index att_c = config.attention_channels();
  switch (config.attention) {
    case AttentionKind::Paper:
      if (config.attention_layout == AttentionLayout::SharedTemporal)
        s.att_weight = m.add("attention.weight", t, t, true);
      else
        s.att_weight = m.add("attention.weight", att_c, t, true);
      s.att_bias = m.add("attention.bias", 1, config.per_timestep_bias ? t : 1, true);
      init_uniform(s.att_weight, static_cast<double>(t));
      break;
    case AttentionKind::Raffel:
      s.att_weight = m.add("attention.weight", 1, att_c, true);
      s.att_bias = m.add("attention.bias", 1, 1, true);
      init_uniform(s.att_weight, static_cast<double>(att_c));
      break;
    case AttentionKind::TemporalSum:
      break;
  }

  Index in = att_c;
  int layer = 0;
  for (const int h : config.hidden_sizes()) {
    Slots::Hidden hs;
    const std::string prefix = "classifier." + std::to_string(layer++);
    hs.weight = m.add(prefix + ".weight", in, h, true);
    hs.bias = m.add(prefix + ".bias", 1, h, true);
    init_uniform(hs.weight, static_cast<double>(in));
    if (config.layernorm) {
      hs.gain = m.add(prefix + ".norm.gain", 1, h, true);
      hs.shift = m.add(prefix + ".norm.shift", 1, h, true);
      init_ones(hs.gain);
    }
    s.hidden.push_back(hs);
    in = h;
  }
  s.out_weight = m.add("output.weight", in, config.num_classes, true);
  s.out_bias = m.add("output.bias", 1, config.num_classes, true);
  init_uniform(s.out_weight, static_cast<double>(in));
  return m;
}

Parameter& Model::parameter(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

const Parameter& Model::parameter(std::string_view name) const {
  return const_cast<Model*>(this)->parameter(name);
}

std::size_t Model::parameter_count() const {
  return std::accumulate(params_.begin(), params_.end(), std::size_t{0},
                         [](std::size_t n, const Parameter& p) { return n + static_cast<std::size_t>(p.value.size()); });
}

std::size_t Model::trainable_parameter_count() const {
  return std::accumulate(params_.begin(), params_.end(), std::size_t{0}, [](std::size_t n, const Parameter& p) {
    return n + (p.trainable ? static_cast<std::size_t>(p.value.size()) : 0);
  });
}

void Model::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

Model::Pass Model::forward(std::span<const Matrix> windows, bool training, Rng* rng) const {
  const auto& c = config_;
  if (training && c.dropout > 0.0 && rng == nullptr && !slots_.hidden.empty())
    throw ConfigError("training forward pass needs an rng for dropout");
  const std::size_t n = windows.size();
  Pass pass;
  pass.windows.resize(n);

  AttentionParams<double> att;
  RaffelParams<double> raffel;
  if (c.attention == AttentionKind::Paper) {
    att.weight = value(slots_.att_weight);
    att.bias = row(slots_.att_bias);
    att.layout = c.attention_layout;
  } else if (c.attention == AttentionKind::Raffel) {
    raffel.weight = row(slots_.att_weight);
    raffel.bias = row(slots_.att_bias);
  }

  Matrix contexts(static_cast<Index>(n), c.attention_channels());
  parallel_for(n, [&](std::size_t i) {
    const Matrix& x = windows[i];
    if (x.rows() != c.timesteps || x.cols() != c.channels)
      throw DimensionError("window " + std::to_string(i) + " is " + nn::detail::shape(x.rows(), x.cols()) +
                           ", model expects " + nn::detail::shape(c.timesteps, c.channels));
    auto& tr = pass.windows[i];
    tr.input = x;
    if (c.expansion == ExpansionKind::None) {
      tr.attention_input = x;
    } else {
      const Matrix& w = value(slots_.exp_weight);
      const RowVec b = row(slots_.exp_bias);
      tr.pre_activation = c.expansion == ExpansionKind::Conv1d ? nn::conv1d_forward(x, w, b)
                                                              : nn::dense_forward(x, w, b);
      Matrix a = nn::activate(c.activation, tr.pre_activation);
      if (c.layernorm)
        a = nn::layernorm_forward<double>(a, row(slots_.exp_gain), row(slots_.exp_shift), nn::kLayerNormEps,
                                          &tr.norm);
      tr.attention_input = std::move(a);
      require_finite(tr.attention_input, "expansion");
    }
    RowVec ctx;
    switch (c.attention) {
      case AttentionKind::Paper: ctx = attend(tr.attention_input, att, &tr.alpha); break;
      case AttentionKind::Raffel: {
        RowVec alpha;
        ctx = attend_raffel(tr.attention_input, raffel, &alpha);
        tr.alpha = alpha;
        break;
      }
      case AttentionKind::TemporalSum: ctx = attend_sum(tr.attention_input); break;
    }
    require_finite(ctx, "attention");
    contexts.row(static_cast<Index>(i)) = ctx;
  });

  Matrix h = std::move(contexts);
  for (std::size_t l = 0; l < slots_.hidden.size(); ++l) {
    const auto& hs = slots_.hidden[l];
    HiddenTrace tr;
    tr.input = h;
    tr.pre_activation = nn::dense_forward(h, value(hs.weight), row(hs.bias));
    Matrix a = nn::activate(c.activation, tr.pre_activation);
    if (c.layernorm)
      a = nn::layernorm_forward<double>(a, row(hs.gain), row(hs.shift), nn::kLayerNormEps, &tr.norm);
    Rng dummy;
    h = nn::dropout(a, c.dropout, rng ? *rng : dummy, training, &tr.mask);
    require_finite(h, "classifier." + std::to_string(l));
    pass.hidden.push_back(std::move(tr));
  }
  pass.head_input = h;
  pass.probs = nn::softmax_rows(nn::dense_forward(h, value(slots_.out_weight), row(slots_.out_bias)));
  require_finite(pass.probs, "output");
  return pass;
}

Matrix Model::predict(std::span<const Matrix> windows) const { return forward(windows, false).probs; }

RowVec Model::predict(const Matrix& window) const {
  return forward(std::span<const Matrix>(&window, 1), false).probs.row(0);
}

LossStats Model::backward(const Pass& pass, std::span<const int> targets, const LossConfig& loss) {
  const auto& c = config_;
  const auto n = static_cast<Index>(pass.windows.size());
  if (static_cast<Index>(targets.size()) != n) throw DimensionError("backward: target count mismatch");
  zero_grad();

  LossStats stats;
  Matrix dlogits(n, c.num_classes);
  for (Index i = 0; i < n; ++i) {
    const auto fl = focal_loss(pass.probs.row(i), targets[static_cast<std::size_t>(i)], loss.focal_gamma);
    stats.loss += fl.loss;
    stats.clamped += fl.clamped ? 1 : 0;
    dlogits.row(i) = fl.dlogits / static_cast<double>(n);
  }
  stats.loss /= static_cast<double>(n);

  auto out = nn::dense_backward(pass.head_input, value(slots_.out_weight), dlogits);
  grad(slots_.out_weight) = std::move(out.dW);
  grad(slots_.out_bias) = std::move(out.db);
  Matrix dh = std::move(out.dx);

  for (std::size_t l = slots_.hidden.size(); l-- > 0;) {
    const auto& hs = slots_.hidden[l];
    const auto& tr = pass.hidden[l];
    Matrix da = dh.cwiseProduct(tr.mask);
    if (c.layernorm) {
      auto g = nn::layernorm_backward<double>(tr.norm, row(hs.gain), da);
      grad(hs.gain) = std::move(g.dgain);
      grad(hs.shift) = std::move(g.dshift);
      da = std::move(g.dx);
    }
    const Matrix dz = nn::activate_backward(c.activation, tr.pre_activation, da);
    auto g = nn::dense_backward(tr.input, value(hs.weight), dz);
    grad(hs.weight) = std::move(g.dW);
    grad(hs.bias) = std::move(g.db);
    dh = std::move(g.dx);
  }

  // Per-window gradients land in their own slot and are summed in window
  // order afterwards, so the result does not depend on the worker count.
  struct WindowGrad {
    Matrix att_weight, att_bias, exp_weight, exp_bias, exp_gain, exp_shift;
  };
  std::vector<WindowGrad> per_window(static_cast<std::size_t>(n));

  AttentionParams<double> att;
  RaffelParams<double> raffel;
  if (c.attention == AttentionKind::Paper) {
    att.weight = value(slots_.att_weight);
    att.bias = row(slots_.att_bias);
    att.layout = c.attention_layout;
  } else if (c.attention == AttentionKind::Raffel) {
    raffel.weight = row(slots_.att_weight);
    raffel.bias = row(slots_.att_bias);
  }
  const bool expansion_trainable = c.expansion == ExpansionKind::Dense || c.expansion == ExpansionKind::Conv1d;

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const auto& tr = pass.windows[i];
    auto& wg = per_window[i];
    const RowVec dctx = dh.row(static_cast<Index>(i));
    Matrix dinput;
    switch (c.attention) {
      case AttentionKind::Paper: {
        auto g = attend_backward(tr.attention_input, att, tr.alpha, dctx);
        wg.att_weight = std::move(g.dweight);
        wg.att_bias = std::move(g.dbias);
        dinput = std::move(g.dh);
        break;
      }
      case AttentionKind::Raffel: {
        const RowVec alpha = tr.alpha;
        auto g = attend_raffel_backward(tr.attention_input, raffel, alpha, dctx);
        wg.att_weight = std::move(g.dweight);
        wg.att_bias = std::move(g.dbias);
        dinput = std::move(g.dh);
        break;
      }
      case AttentionKind::TemporalSum: dinput = attend_sum_backward(tr.attention_input.rows(), dctx); break;
    }
    if (c.expansion == ExpansionKind::None) return;
    if (c.layernorm) {
      auto g = nn::layernorm_backward<double>(tr.norm, row(slots_.exp_gain), dinput);
      wg.exp_gain = std::move(g.dgain);
      wg.exp_shift = std::move(g.dshift);
      dinput = std::move(g.dx);
    }
    if (!expansion_trainable) return;
    const Matrix dz = nn::activate_backward(c.activation, tr.pre_activation, dinput);
    if (c.expansion == ExpansionKind::Conv1d) {
      auto g = nn::conv1d_backward(tr.input, value(slots_.exp_weight), dz);
      wg.exp_weight = std::move(g.dK);
      wg.exp_bias = std::move(g.db);
    } else {
      auto g = nn::dense_backward(tr.input, value(slots_.exp_weight), dz);
      wg.exp_weight = std::move(g.dW);
      wg.exp_bias = std::move(g.db);
    }
  });

  const auto reduce = [&](int slot, Matrix WindowGrad::*field) {
    if (slot < 0 || !params_[static_cast<std::size_t>(slot)].trainable) return;
    for (const auto& wg : per_window)
      if ((wg.*field).size() > 0) grad(slot) += wg.*field;
  };
  reduce(slots_.att_weight, &WindowGrad::att_weight);
  reduce(slots_.att_bias, &WindowGrad::att_bias);
  reduce(slots_.exp_weight, &WindowGrad::exp_weight);
  reduce(slots_.exp_bias, &WindowGrad::exp_bias);
  reduce(slots_.exp_gain, &WindowGrad::exp_gain);
  reduce(slots_.exp_shift, &WindowGrad::exp_shift);
  return stats;
}

Matrix Model::attention_map(const Matrix& window) const {
  const auto pass = forward(std::span<const Matrix>(&window, 1), false);
  if (config_.attention == AttentionKind::TemporalSum)
    return Matrix::Constant(1, config_.timesteps, 1.0 / config_.timesteps);
  return pass.windows.front().alpha;
}

}  // namespace semg
