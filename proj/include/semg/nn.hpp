#pragma once

// Differentiable building blocks. Every forward op has a matching *_backward
// that maps the upstream gradient to gradients of its inputs and parameters.
// Ops are free functions over Tensor2<Scalar>; the model owns all state.

#include "semg/core.hpp"

#include <cmath>
#include <concepts>
#include <random>
#include <string>

namespace semg::nn {

inline constexpr double kLayerNormEps = 1e-8;

namespace detail {

inline std::string shape(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Dense: out = x W + b, with b broadcast over rows.

template <typename Scalar>
struct DenseGrad {
  Tensor2<Scalar> dx;
  Tensor2<Scalar> dW;
  RowVector<Scalar> db;
};

template <typename Scalar>
Tensor2<Scalar> dense_forward(const Tensor2<Scalar>& x, const Tensor2<Scalar>& W,
                              const RowVector<Scalar>& b) {
  if (x.cols() != W.rows() || W.cols() != b.cols())
    throw DimensionError("dense: x " + detail::shape(x.rows(), x.cols()) + ", W " +
                         detail::shape(W.rows(), W.cols()) + ", b " + std::to_string(b.cols()));
  Tensor2<Scalar> out = x * W;
  out.rowwise() += b;
  return out;
}

template <typename Scalar>
DenseGrad<Scalar> dense_backward(const Tensor2<Scalar>& x, const Tensor2<Scalar>& W,
                                 const Tensor2<Scalar>& dout) {
  return {dout * W.transpose(), x.transpose() * dout, dout.colwise().sum()};
}

// ---------------------------------------------------------------------------
// 1-D convolution over time with same padding.
//
// The kernel is stored flattened as (k * C_in) x C_out, row index
// tap * C_in + input_channel, so the forward pass is im2col(x) * K + b.

template <typename Scalar>
Tensor2<Scalar> im2col(const Tensor2<Scalar>& x, Index k) {
  const Index half = k / 2;
  const Index c = x.cols();
  Tensor2<Scalar> cols = Tensor2<Scalar>::Zero(x.rows(), k * c);
  for (Index t = 0; t < x.rows(); ++t)
    for (Index j = 0; j < k; ++j) {
      const Index src = t + j - half;
      if (src >= 0 && src < x.rows()) cols.block(t, j * c, 1, c) = x.row(src);
    }
  return cols;
}

inline Index conv_taps(Index kernel_rows, Index in_channels) {
  if (in_channels == 0 || kernel_rows % in_channels != 0)
    throw DimensionError("conv1d: kernel rows " + std::to_string(kernel_rows) +
                         " not a multiple of input channels " + std::to_string(in_channels));
  const Index k = kernel_rows / in_channels;
  if (k % 2 == 0) throw DimensionError("conv1d: kernel size must be odd");
  return k;
}

template <typename Scalar>
Tensor2<Scalar> conv1d_forward(const Tensor2<Scalar>& x, const Tensor2<Scalar>& K,
                               const RowVector<Scalar>& b) {
  const Index k = conv_taps(K.rows(), x.cols());
  if (K.cols() != b.cols()) throw DimensionError("conv1d: bias length does not match C_out");
  Tensor2<Scalar> out = im2col(x, k) * K;
  out.rowwise() += b;
  return out;
}

template <typename Scalar>
struct ConvGrad {
  Tensor2<Scalar> dx;
  Tensor2<Scalar> dK;
  RowVector<Scalar> db;
};

template <typename Scalar>
ConvGrad<Scalar> conv1d_backward(const Tensor2<Scalar>& x, const Tensor2<Scalar>& K,
                                 const Tensor2<Scalar>& dout) {
  const Index k = conv_taps(K.rows(), x.cols());
  const Index half = k / 2;
  const Index c = x.cols();
  const Tensor2<Scalar> cols = im2col(x, k);
  const Tensor2<Scalar> dcols = dout * K.transpose();
  Tensor2<Scalar> dx = Tensor2<Scalar>::Zero(x.rows(), c);
  for (Index t = 0; t < x.rows(); ++t)
    for (Index j = 0; j < k; ++j) {
      const Index src = t + j - half;
      if (src >= 0 && src < x.rows()) dx.row(src) += dcols.block(t, j * c, 1, c);
    }
  return {std::move(dx), cols.transpose() * dout, dout.colwise().sum()};
}

// ---------------------------------------------------------------------------
// Layer normalization over each row.

template <typename Scalar>
struct LayerNormCache {
  Tensor2<Scalar> normalized;  // before gain/shift
  Vector<Scalar> inv_std;
};

template <typename Scalar>
Tensor2<Scalar> layernorm_forward(const Tensor2<Scalar>& x, const RowVector<Scalar>& gain,
                                  const RowVector<Scalar>& shift, Scalar eps = Scalar(kLayerNormEps),
                                  LayerNormCache<Scalar>* cache = nullptr) {
  if (gain.cols() != x.cols() || shift.cols() != x.cols())
    throw DimensionError("layernorm: gain/shift length does not match row length");
  const Index n = x.cols();
  const Vector<Scalar> mean = x.rowwise().mean();
  Tensor2<Scalar> centered = x.colwise() - mean;
  const Vector<Scalar> var = centered.array().square().rowwise().sum() / Scalar(n);
  const Vector<Scalar> inv_std = (var.array() + eps).rsqrt();
  Tensor2<Scalar> normalized = centered.array().colwise() * inv_std.array();
  Tensor2<Scalar> out = normalized.array().rowwise() * gain.array();
  out.rowwise() += shift;
  if (cache) *cache = {std::move(normalized), inv_std};
  return out;
}

template <typename Scalar>
struct LayerNormGrad {
  Tensor2<Scalar> dx;
  RowVector<Scalar> dgain;
  RowVector<Scalar> dshift;
};

template <typename Scalar>
LayerNormGrad<Scalar> layernorm_backward(const LayerNormCache<Scalar>& cache,
                                         const RowVector<Scalar>& gain, const Tensor2<Scalar>& dout) {
  const auto& xhat = cache.normalized;
  const Scalar n = Scalar(xhat.cols());
  const Tensor2<Scalar> dxhat = dout.array().rowwise() * gain.array();
  const Vector<Scalar> sum_d = dxhat.rowwise().sum();
  const Vector<Scalar> sum_dx = (dxhat.array() * xhat.array()).rowwise().sum();
  Tensor2<Scalar> dx = (n * dxhat.array()).colwise() - sum_d.array();
  dx.array() -= xhat.array().colwise() * sum_dx.array();
  dx.array().colwise() *= cache.inv_std.array() / n;
  return {std::move(dx), (dout.array() * xhat.array()).colwise().sum(), dout.colwise().sum()};
}

// ---------------------------------------------------------------------------
// Activations.

template <std::floating_point Scalar>
Scalar softplus(Scalar x) {
  using std::abs, std::exp, std::log1p, std::max;
  return log1p(exp(-abs(x))) + max(x, Scalar(0));
}

template <std::floating_point Scalar>
Scalar mish(Scalar x) {
  using std::tanh;
  return x * tanh(softplus(x));
}

/// d/dx [x tanh(softplus(x))] = tanh(sp) + x sech^2(sp) sigmoid(x)
template <std::floating_point Scalar>
Scalar mish_derivative(Scalar x) {
  using std::exp, std::tanh;
  const Scalar t = tanh(softplus(x));
  const Scalar sigmoid = Scalar(1) / (Scalar(1) + exp(-x));
  return t + x * (Scalar(1) - t * t) * sigmoid;
}

template <typename Derived>
Tensor2<typename Derived::Scalar> mish(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.unaryExpr([](S v) { return mish(v); });
}

template <typename Scalar>
Tensor2<Scalar> mish_backward(const Tensor2<Scalar>& x, const Tensor2<Scalar>& dout) {
  return dout.cwiseProduct(x.unaryExpr([](Scalar v) { return mish_derivative(v); }));
}

template <typename Derived>
Tensor2<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

template <typename Scalar>
Tensor2<Scalar> relu_backward(const Tensor2<Scalar>& x, const Tensor2<Scalar>& dout) {
  return (x.array() > Scalar(0)).select(dout, Scalar(0));
}

template <typename Derived>
Tensor2<typename Derived::Scalar> tanh(const Eigen::MatrixBase<Derived>& x) {
  return x.array().tanh();
}

/// Takes the forward output y = tanh(x).
template <typename Scalar>
Tensor2<Scalar> tanh_backward(const Tensor2<Scalar>& y, const Tensor2<Scalar>& dout) {
  return dout.array() * (Scalar(1) - y.array().square());
}

template <typename Scalar>
Tensor2<Scalar> softmax_rows(const Tensor2<Scalar>& x) {
  Tensor2<Scalar> y = x.colwise() - x.rowwise().maxCoeff();
  y = y.array().exp();
  y.array().colwise() /= y.rowwise().sum().array();
  return y;
}

/// Takes the forward output y = softmax_rows(x).
template <typename Scalar>
Tensor2<Scalar> softmax_rows_backward(const Tensor2<Scalar>& y, const Tensor2<Scalar>& dout) {
  const Vector<Scalar> dot = (y.array() * dout.array()).rowwise().sum();
  return y.array() * (dout.array().colwise() - dot.array());
}

enum class Activation { Mish, Relu };

template <typename Scalar>
Tensor2<Scalar> activate(Activation a, const Tensor2<Scalar>& x) {
  return a == Activation::Mish ? mish(x) : relu(x);
}

template <typename Scalar>
Tensor2<Scalar> activate_backward(Activation a, const Tensor2<Scalar>& x, const Tensor2<Scalar>& dout) {
  return a == Activation::Mish ? mish_backward(x, dout) : relu_backward(x, dout);
}

// ---------------------------------------------------------------------------
// Inverted dropout: kept entries are scaled by 1 / (1 - rate).

template <typename Scalar>
Tensor2<Scalar> dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
  Tensor2<Scalar> mask(rows, cols);
  if (rate == 0.0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const Scalar scale = Scalar(1.0 / (1.0 - rate));
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : Scalar(0);
  return mask;
}

template <typename Scalar>
Tensor2<Scalar> dropout(const Tensor2<Scalar>& x, double rate, Rng& rng, bool training,
                        Tensor2<Scalar>* mask_out = nullptr) {
  if (!training || rate == 0.0) {
    if (mask_out) *mask_out = Tensor2<Scalar>::Ones(x.rows(), x.cols());
    return x;
  }
  Tensor2<Scalar> mask = dropout_mask<Scalar>(x.rows(), x.cols(), rate, rng);
  Tensor2<Scalar> out = x.cwiseProduct(mask);
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

}  // namespace semg::nn
