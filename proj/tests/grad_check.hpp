#pragma once

#include "semg/core.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace semg::testing {

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

struct GradCheck {
  double worst = 0.0;  // largest share of the tolerance used; >= 1 fails
  int failures = 0;
  std::string first_failure;
};

/// Central differences of `loss` with respect to the entries of `x`,
/// compared against `analytic`. `samples` > 0 checks that many random
/// entries instead of all of them. Passes when
/// |a - n| <= rtol * max(|a|, |n|) + atol.
inline GradCheck check_gradient(Matrix& x, const Matrix& analytic, const std::function<double()>& loss,
                                double rtol, Rng& rng, int samples = 0, double h = 1e-6, double atol = 1e-8) {
  GradCheck r;
  const auto visit = [&](Index i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = loss();
    x.data()[i] = saved - h;
    const double down = loss();
    x.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.data()[i];
    const double err = std::abs(a - numeric);
    const double scale = std::max(std::abs(a), std::abs(numeric));
    r.worst = std::max(r.worst, err / (rtol * scale + atol));
    if (err > rtol * scale + atol) {
      if (r.failures++ == 0)
        r.first_failure = "entry " + std::to_string(i) + ": analytic " + std::to_string(a) + " numeric " +
                          std::to_string(numeric);
    }
  };
  if (samples <= 0 || samples >= x.size()) {
    for (Index i = 0; i < x.size(); ++i) visit(i);
  } else {
    std::uniform_int_distribution<Index> pick(0, x.size() - 1);
    for (int s = 0; s < samples; ++s) visit(pick(rng));
  }
  return r;
}

}  // namespace semg::testing
