// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "t2seg/tensor.hpp"

namespace t2seg {

/// max over coordinates of |analytic - numeric| / max(1, |analytic|).
template <typename Scalar>
double max_relative_error(const Matrix<Scalar>& analytic, const Matrix<Scalar>& numeric) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw DimensionError("max_relative_error: " + shape_string(analytic.rows(), analytic.cols()) +
                         " vs " + shape_string(numeric.rows(), numeric.cols()));
  }
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double a = static_cast<double>(analytic.data()[i]);
    const double d = static_cast<double>(numeric.data()[i]);
    worst = std::max(worst, std::abs(a - d) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

/// Central differences of `eval` with respect to every entry of `storage`,
/// perturbed in place and restored afterwards.
template <typename Scalar>
Matrix<Scalar> numeric_gradient(const std::function<Scalar()>& eval, Matrix<Scalar>& storage,
                                Scalar h) {
  Matrix<Scalar> g(storage.rows(), storage.cols());
  for (Index i = 0; i < storage.size(); ++i) {
    const Scalar saved = storage.data()[i];
    storage.data()[i] = saved + h;
    const Scalar up = eval();
    storage.data()[i] = saved - h;
    const Scalar down = eval();
    storage.data()[i] = saved;
    g.data()[i] = (up - down) / (Scalar(2) * h);
  }
  return g;
}

/// Compares a supplied gradient of scalar-valued `f` at `x` against central
/// differences with step `h`.
template <typename Scalar, typename F>
double check_gradient(const Matrix<Scalar>& analytic, F&& f, const Tensor<Scalar>& x, Scalar h) {
  Tensor<Scalar> probe(x.value(), false);
  auto eval = [&]() -> Scalar {
    Tensor<Scalar> y = f(probe);
    if (y.size() != 1) throw ContractError("finite_diff_check: function is not scalar-valued");
    return y.item();
  };
  return max_relative_error<Scalar>(analytic, numeric_gradient<Scalar>(eval, probe.mutable_value(), h));
}

/// Reverse-mode gradient of scalar-valued `f` at `x` versus central
/// differences; returns the max relative error.
template <typename Scalar, typename F>
double finite_diff_check(F&& f, const Tensor<Scalar>& x, Scalar h = Scalar(1e-5)) {
  if (!(h > 0)) throw ContractError("finite_diff_check: step must be positive");
  Tensor<Scalar> leaf(x.value(), true);
  Graph<Scalar> graph;
  {
    Recording<Scalar> rec(graph);
    Tensor<Scalar> y = f(leaf);
    if (y.size() != 1) throw ContractError("finite_diff_check: function is not scalar-valued");
    graph.backward(y);
  }
  return check_gradient<Scalar>(leaf.grad(), f, x, h);
}

}  // namespace t2seg
