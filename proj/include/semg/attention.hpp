#pragma once

// Feed-forward temporal attention over an input h of shape T x C.
//
// attend():        alpha = softmax_time(scores(h)) (C x T, one temporal mask
//                  per channel), g = alpha^T o h, c = sum_t g  -> 1 x C
// attend_raffel(): one scalar score per timestep, tanh(h_t . w + b),
//                  softmax over time, c = sum_t alpha_t h_t
// attend_sum():    c = sum_t h_t

#include "semg/core.hpp"
#include "semg/nn.hpp"

#include <string>

namespace semg {

/// How the temporal score map is parameterized.
///   SharedTemporal: weight is T x T and maps every channel's time series to
///                   T scores: scores = (W h)^T. Same map for all channels.
///   PerChannel:     weight is C x T and scales elementwise:
///                   scores = W o h^T.
enum class AttentionLayout { SharedTemporal, PerChannel };

template <typename Scalar>
struct AttentionParams {
  Tensor2<Scalar> weight;
  RowVector<Scalar> bias;  // length 1 (shared scalar) or T (per timestep)
  AttentionLayout layout = AttentionLayout::SharedTemporal;
};

template <typename Scalar>
struct RaffelParams {
  RowVector<Scalar> weight;  // 1 x C
  RowVector<Scalar> bias;    // length 1
};

namespace detail {

template <typename Scalar>
void check_attention_shapes(const Tensor2<Scalar>& h, const AttentionParams<Scalar>& p) {
  const Index t = h.rows();
  const Index c = h.cols();
  const bool weight_ok = p.layout == AttentionLayout::SharedTemporal
                             ? (p.weight.rows() == t && p.weight.cols() == t)
                             : (p.weight.rows() == c && p.weight.cols() == t);
  if (!weight_ok)
    throw DimensionError("attention: weight " + nn::detail::shape(p.weight.rows(), p.weight.cols()) +
                         " does not fit input " + nn::detail::shape(t, c));
  if (p.bias.cols() != 1 && p.bias.cols() != t)
    throw DimensionError("attention: bias must have length 1 or T");
}

}  // namespace detail

/// Pre-softmax scores, C x T.
template <typename Scalar>
Tensor2<Scalar> attention_scores(const Tensor2<Scalar>& h, const AttentionParams<Scalar>& p) {
  detail::check_attention_shapes(h, p);
  Tensor2<Scalar> scores = p.layout == AttentionLayout::SharedTemporal
                               ? Tensor2<Scalar>((p.weight * h).transpose())
                               : Tensor2<Scalar>(p.weight.cwiseProduct(h.transpose()));
  if (p.bias.cols() == 1)
    scores.array() += p.bias(0);
  else
    scores.rowwise() += p.bias;
  return scores;
}

/// Attention matrix alpha, C x T; row i is channel i's mask over time.
template <typename Scalar>
Tensor2<Scalar> attention_weights(const Tensor2<Scalar>& h, const AttentionParams<Scalar>& p) {
  return nn::softmax_rows(attention_scores(h, p));
}

template <typename Scalar>
RowVector<Scalar> attend(const Tensor2<Scalar>& h, const AttentionParams<Scalar>& p,
                         Tensor2<Scalar>* alpha_out = nullptr) {
  Tensor2<Scalar> alpha = attention_weights(h, p);
  RowVector<Scalar> context = alpha.transpose().cwiseProduct(h).colwise().sum();
  if (alpha_out) *alpha_out = std::move(alpha);
  return context;
}

template <typename Scalar>
struct AttendGrad {
  Tensor2<Scalar> dh;
  Tensor2<Scalar> dweight;
  RowVector<Scalar> dbias;
};

template <typename Scalar>
AttendGrad<Scalar> attend_backward(const Tensor2<Scalar>& h, const AttentionParams<Scalar>& p,
                                   const Tensor2<Scalar>& alpha, const RowVector<Scalar>& dcontext) {
  // c_j = sum_t alpha(j, t) h(t, j)
  const Tensor2<Scalar> dalpha = (h.array().rowwise() * dcontext.array()).matrix().transpose();
  Tensor2<Scalar> dh = alpha.transpose().array().rowwise() * dcontext.array();
  const Tensor2<Scalar> dscores = nn::softmax_rows_backward(alpha, dalpha);

  AttendGrad<Scalar> g;
  if (p.layout == AttentionLayout::SharedTemporal) {
    const Tensor2<Scalar> dz = dscores.transpose();  // T x C, gradient of W h
    g.dweight = dz * h.transpose();
    dh += p.weight.transpose() * dz;
  } else {
    g.dweight = dscores.cwiseProduct(h.transpose());
    dh += dscores.cwiseProduct(p.weight).transpose();
  }
  if (p.bias.cols() == 1) {
    g.dbias = RowVector<Scalar>::Constant(1, dscores.sum());
  } else {
    g.dbias = dscores.colwise().sum();
  }
  g.dh = std::move(dh);
  return g;
}

/// Scores per timestep, T x 1 column, before softmax: tanh(h w^T + b).
template <typename Scalar>
Vector<Scalar> raffel_scores(const Tensor2<Scalar>& h, const RaffelParams<Scalar>& p) {
  if (p.weight.cols() != h.cols() || p.bias.cols() != 1)
    throw DimensionError("raffel attention: weight must be 1 x C and bias a scalar");
  return ((h * p.weight.transpose()).array() + p.bias(0)).tanh();
}

/// Raffel weights as a row (1 x T).
template <typename Scalar>
RowVector<Scalar> raffel_weights(const Tensor2<Scalar>& h, const RaffelParams<Scalar>& p) {
  return nn::softmax_rows(Tensor2<Scalar>(raffel_scores(h, p).transpose()));
}

template <typename Scalar>
RowVector<Scalar> attend_raffel(const Tensor2<Scalar>& h, const RaffelParams<Scalar>& p,
                                RowVector<Scalar>* alpha_out = nullptr) {
  RowVector<Scalar> alpha = raffel_weights(h, p);
  RowVector<Scalar> context = alpha * h;
  if (alpha_out) *alpha_out = std::move(alpha);
  return context;
}

template <typename Scalar>
struct RaffelGrad {
  Tensor2<Scalar> dh;
  RowVector<Scalar> dweight;
  RowVector<Scalar> dbias;
};

template <typename Scalar>
RaffelGrad<Scalar> attend_raffel_backward(const Tensor2<Scalar>& h, const RaffelParams<Scalar>& p,
                                          const RowVector<Scalar>& alpha,
                                          const RowVector<Scalar>& dcontext) {
  const Vector<Scalar> e = raffel_scores(h, p);
  const RowVector<Scalar> dalpha = (h * dcontext.transpose()).transpose();
  Tensor2<Scalar> dh = alpha.transpose() * dcontext;
  const Scalar dot = alpha.dot(dalpha);
  const RowVector<Scalar> de = alpha.array() * (dalpha.array() - dot);
  const Vector<Scalar> dpre = de.transpose().array() * (Scalar(1) - e.array().square());
  dh += dpre * p.weight;
  return {std::move(dh), dpre.transpose() * h, RowVector<Scalar>::Constant(1, dpre.sum())};
}

template <typename Scalar>
RowVector<Scalar> attend_sum(const Tensor2<Scalar>& h) {
  return h.colwise().sum();
}

template <typename Scalar>
Tensor2<Scalar> attend_sum_backward(Index timesteps, const RowVector<Scalar>& dcontext) {
  return dcontext.replicate(timesteps, 1);
}

}  // namespace semg
