// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "t2seg/tensor.hpp"

namespace t2seg {

namespace detail {

inline void require_same_shape(const char* op, Index ar, Index ac, Index br, Index bc) {
  if (ar != br || ac != bc) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(ar, ac) + " vs " +
                         shape_string(br, bc));
  }
}

}  // namespace detail

template <typename Scalar>
Tensor<Scalar> matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + a.shape_str() + " * " +
                         b.shape_str());
  }
  Matrix<Scalar> out = a.value() * b.value();
  return detail::make_result<Scalar>(std::move(out), {&a, &b}, [a, b](detail::Node<Scalar>& n) {
    detail::accumulate(*a.node(), n.grad * b.value().transpose());
    detail::accumulate(*b.node(), a.value().transpose() * n.grad);
  });
}

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape("add", a.rows(), a.cols(), b.rows(), b.cols());
  Matrix<Scalar> out = a.value() + b.value();
  return detail::make_result<Scalar>(std::move(out), {&a, &b}, [a, b](detail::Node<Scalar>& n) {
    detail::accumulate(*a.node(), n.grad);
    detail::accumulate(*b.node(), n.grad);
  });
}

template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape("sub", a.rows(), a.cols(), b.rows(), b.cols());
  Matrix<Scalar> out = a.value() - b.value();
  return detail::make_result<Scalar>(std::move(out), {&a, &b}, [a, b](detail::Node<Scalar>& n) {
    detail::accumulate(*a.node(), n.grad);
    detail::accumulate(*b.node(), -n.grad);
  });
}

/// Elementwise product.
template <typename Scalar>
Tensor<Scalar> hadamard(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape("hadamard", a.rows(), a.cols(), b.rows(), b.cols());
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return detail::make_result<Scalar>(std::move(out), {&a, &b}, [a, b](detail::Node<Scalar>& n) {
    detail::accumulate(*a.node(), n.grad.cwiseProduct(b.value()));
    detail::accumulate(*b.node(), n.grad.cwiseProduct(a.value()));
  });
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& a, Scalar s) {
  Matrix<Scalar> out = a.value() * s;
  return detail::make_result<Scalar>(std::move(out), {&a}, [a, s](detail::Node<Scalar>& n) {
    detail::accumulate(*a.node(), n.grad * s);
  });
}

template <typename Scalar>
Tensor<Scalar> operator*(Scalar s, const Tensor<Scalar>& a) {
  return scale(a, s);
}

/// x + bias broadcast over rows; bias is 1 x d.
template <typename Scalar>
Tensor<Scalar> add_bias(const Tensor<Scalar>& x, const Tensor<Scalar>& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_bias: bias " + bias.shape_str() + " does not fit " + x.shape_str());
  }
  Matrix<Scalar> out = x.value().rowwise() + bias.value().row(0);
  return detail::make_result<Scalar>(std::move(out), {&x, &bias},
                                     [x, bias](detail::Node<Scalar>& n) {
                                       detail::accumulate(*x.node(), n.grad);
                                       detail::accumulate(*bias.node(), n.grad.colwise().sum());
                                     });
}

/// x * weight + bias.
template <typename Scalar>
Tensor<Scalar> linear(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias) {
  return add_bias(matmul(x, weight), bias);
}

template <typename Scalar>
Tensor<Scalar> sum(const Tensor<Scalar>& x) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value().sum();
  return detail::make_result<Scalar>(std::move(out), {&x}, [x](detail::Node<Scalar>& n) {
    detail::accumulate(*x.node(), Matrix<Scalar>::Constant(x.rows(), x.cols(), n.grad(0, 0)));
  });
}

template <typename Scalar>
Tensor<Scalar> mean(const Tensor<Scalar>& x) {
  return scale(sum(x), Scalar(1) / static_cast<Scalar>(x.size()));
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x) {
  Matrix<Scalar> out = x.value().unaryExpr([](Scalar v) {
    // Split on sign so exp never overflows.
    if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  });
  Matrix<Scalar> y = out;
  return detail::make_result<Scalar>(std::move(out), {&x}, [x, y](detail::Node<Scalar>& n) {
    detail::accumulate(*x.node(),
                       n.grad.cwiseProduct(y.cwiseProduct((Scalar(1) - y.array()).matrix())));
  });
}

/// GELU, tanh approximation.
template <typename Scalar>
Tensor<Scalar> gelu(const Tensor<Scalar>& x) {
  constexpr Scalar c = static_cast<Scalar>(0.7978845608028654);  // sqrt(2/pi)
  constexpr Scalar a = static_cast<Scalar>(0.044715);
  Matrix<Scalar> out = x.value().unaryExpr([&](Scalar v) {
    return Scalar(0.5) * v * (Scalar(1) + std::tanh(c * (v + a * v * v * v)));
  });
  return detail::make_result<Scalar>(std::move(out), {&x}, [x](detail::Node<Scalar>& n) {
    Matrix<Scalar> d = x.value().unaryExpr([](Scalar v) {
      const Scalar t = std::tanh(c * (v + a * v * v * v));
      return Scalar(0.5) * (Scalar(1) + t) +
             Scalar(0.5) * v * (Scalar(1) - t * t) * c * (Scalar(1) + Scalar(3) * a * v * v);
    });
    detail::accumulate(*x.node(), n.grad.cwiseProduct(d));
  });
}

/// Row-wise softmax with max subtraction.
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& x) {
  Matrix<Scalar> out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.value().row(r).maxCoeff();
    out.row(r) = (x.value().row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  Matrix<Scalar> y = out;
  return detail::make_result<Scalar>(std::move(out), {&x}, [x, y](detail::Node<Scalar>& n) {
    Matrix<Scalar> gy = n.grad.cwiseProduct(y);
    Vector<Scalar> dots = gy.rowwise().sum();
    Matrix<Scalar> dx = gy - (y.array().colwise() * dots.array()).matrix();
    detail::accumulate(*x.node(), dx);
  });
}

/// Per-row normalization to zero mean and unit variance, then gain and bias.
template <typename Scalar>
Tensor<Scalar> layer_norm(const Tensor<Scalar>& x, const Tensor<Scalar>& gain,
                          const Tensor<Scalar>& bias, Scalar eps = Scalar(1e-5)) {
  const Index d = x.cols();
  if (d < 2) throw ContractError("layer_norm: row width must be at least 2");
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw DimensionError("layer_norm: gain " + gain.shape_str() + " / bias " + bias.shape_str() +
                         " do not fit " + x.shape_str());
  }
  Matrix<Scalar> xhat(x.rows(), d);
  Vector<Scalar> inv_std(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar mu = x.value().row(r).mean();
    const auto centered = (x.value().row(r).array() - mu).eval();
    const Scalar var = centered.square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = (centered * inv_std(r)).matrix();
  }
  Matrix<Scalar> out =
      (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  return detail::make_result<Scalar>(
      std::move(out), {&x, &gain, &bias}, [x, gain, bias, xhat, inv_std](detail::Node<Scalar>& n) {
        const Matrix<Scalar>& g = n.grad;
        detail::accumulate(*gain.node(), g.cwiseProduct(xhat).colwise().sum());
        detail::accumulate(*bias.node(), g.colwise().sum());
        if (!x.requires_grad()) return;
        Matrix<Scalar> dxhat = (g.array().rowwise() * gain.value().row(0).array()).matrix();
        Matrix<Scalar> dx(g.rows(), g.cols());
        for (Index r = 0; r < g.rows(); ++r) {
          const Scalar m1 = dxhat.row(r).mean();
          const Scalar m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
          dx.row(r) = ((dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r)).matrix();
        }
        detail::accumulate(*x.node(), dx);
      });
}

/// Inverted dropout: in train mode each element is kept with probability
/// 1 - rate and scaled by 1 / (1 - rate). Identity otherwise.
template <typename Scalar, typename Rng>
Tensor<Scalar> dropout(const Tensor<Scalar>& x, double rate, Rng& rng, bool train) {
  if (!train || rate <= 0.0) return x;
  if (rate >= 1.0) throw ContractError("dropout: rate must be below 1");
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix<Scalar> mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? keep_scale : Scalar(0);
  Matrix<Scalar> out = x.value().cwiseProduct(mask);
  return detail::make_result<Scalar>(std::move(out), {&x}, [x, mask](detail::Node<Scalar>& n) {
    detail::accumulate(*x.node(), n.grad.cwiseProduct(mask));
  });
}

/// Contiguous run of rows belonging to one sequence inside a stacked batch.
struct SequenceBlock {
  Index offset = 0;
  Index length = 0;
};

/// Row layout of a stacked batch: one block per sequence plus a pad flag per
/// row. Pad rows are never attended to.
struct BatchLayout {
  std::vector<SequenceBlock> blocks;
  std::vector<bool> pad;

  Index rows() const { return static_cast<Index>(pad.size()); }

  static BatchLayout single(Index n) {
    BatchLayout l;
    l.blocks.push_back({0, n});
    l.pad.assign(static_cast<std::size_t>(n), false);
    return l;
  }
};

/// Bidirectional scaled dot-product attention over each block, split into
/// `num_heads` column groups. q, k, v are rows x d_model. When `weights` is
/// given it receives the attention matrices in (block, head) order.
template <typename Scalar>
Tensor<Scalar> attention(const Tensor<Scalar>& q, const Tensor<Scalar>& k, const Tensor<Scalar>& v,
                         int num_heads, const BatchLayout& layout,
                         std::vector<Matrix<Scalar>>* weights = nullptr) {
  detail::require_same_shape("attention(q,k)", q.rows(), q.cols(), k.rows(), k.cols());
  detail::require_same_shape("attention(q,v)", q.rows(), q.cols(), v.rows(), v.cols());
  if (num_heads < 1 || q.cols() % num_heads != 0) {
    throw DimensionError("attention: width " + std::to_string(q.cols()) +
                         " not divisible by heads " + std::to_string(num_heads));
  }
  if (layout.rows() != q.rows()) {
    throw DimensionError("attention: layout covers " + std::to_string(layout.rows()) +
                         " rows, input has " + std::to_string(q.rows()));
  }
  const Index dh = q.cols() / num_heads;
  const Scalar sc = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  auto probs = std::make_shared<std::vector<Matrix<Scalar>>>();
  probs->reserve(layout.blocks.size() * static_cast<std::size_t>(num_heads));
  Matrix<Scalar> out = Matrix<Scalar>::Zero(q.rows(), q.cols());
  for (const auto& b : layout.blocks) {
    std::vector<Index> valid;
    for (Index j = 0; j < b.length; ++j) {
      if (!layout.pad[static_cast<std::size_t>(b.offset + j)]) valid.push_back(j);
    }
    if (valid.empty()) throw ContractError("attention: sequence has no unmasked keys");
    for (int h = 0; h < num_heads; ++h) {
      const auto qb = q.value().block(b.offset, h * dh, b.length, dh);
      const auto kb = k.value().block(b.offset, h * dh, b.length, dh);
      const auto vb = v.value().block(b.offset, h * dh, b.length, dh);
      Matrix<Scalar> s = (qb * kb.transpose()) * sc;
      Matrix<Scalar> p = Matrix<Scalar>::Zero(b.length, b.length);
      for (Index i = 0; i < b.length; ++i) {
        Scalar m = s(i, valid.front());
        for (Index j : valid) m = std::max(m, s(i, j));
        Scalar z = 0;
        for (Index j : valid) {
          p(i, j) = std::exp(s(i, j) - m);
          z += p(i, j);
        }
        p.row(i) /= z;
      }
      out.block(b.offset, h * dh, b.length, dh).noalias() = p * vb;
      probs->push_back(std::move(p));
    }
  }
  if (weights != nullptr) *weights = *probs;
  return detail::make_result<Scalar>(
      std::move(out), {&q, &k, &v},
      [q, k, v, num_heads, dh, sc, probs, blocks = layout.blocks](detail::Node<Scalar>& n) {
        Matrix<Scalar> dq = Matrix<Scalar>::Zero(q.rows(), q.cols());
        Matrix<Scalar> dk = Matrix<Scalar>::Zero(q.rows(), q.cols());
        Matrix<Scalar> dv = Matrix<Scalar>::Zero(q.rows(), q.cols());
        std::size_t idx = 0;
        for (const auto& b : blocks) {
          for (int h = 0; h < num_heads; ++h, ++idx) {
            const Matrix<Scalar>& p = (*probs)[idx];
            const auto g = n.grad.block(b.offset, h * dh, b.length, dh);
            const auto qb = q.value().block(b.offset, h * dh, b.length, dh);
            const auto kb = k.value().block(b.offset, h * dh, b.length, dh);
            const auto vb = v.value().block(b.offset, h * dh, b.length, dh);
            dv.block(b.offset, h * dh, b.length, dh).noalias() = p.transpose() * g;
            Matrix<Scalar> dp = g * vb.transpose();
            Vector<Scalar> dots = dp.cwiseProduct(p).rowwise().sum();
            Matrix<Scalar> ds = (p.array() * (dp.array().colwise() - dots.array())).matrix() * sc;
            dq.block(b.offset, h * dh, b.length, dh).noalias() = ds * kb;
            dk.block(b.offset, h * dh, b.length, dh).noalias() = ds.transpose() * qb;
          }
        }
        detail::accumulate(*q.node(), dq);
        detail::accumulate(*k.node(), dk);
        detail::accumulate(*v.node(), dv);
      });
}

namespace detail {

template <typename Scalar>
constexpr Scalar kProbFloor = static_cast<Scalar>(1e-7);

template <typename Scalar>
Scalar clamp_prob(Scalar p) {
  return std::clamp(p, kProbFloor<Scalar>, Scalar(1) - kProbFloor<Scalar>);
}

template <typename Scalar>
bool inside_clamp(Scalar p) {
  return p > kProbFloor<Scalar> && p < Scalar(1) - kProbFloor<Scalar>;
}

}  // namespace detail

/// Mean binary cross-entropy of `prob` (rows x 1) over rows where `include`
/// is set. Probabilities are clamped to [1e-7, 1 - 1e-7] before the log.
template <typename Scalar>
Tensor<Scalar> binary_cross_entropy(const Tensor<Scalar>& prob, std::span<const int> target,
                                    const std::vector<bool>& include) {
  if (prob.cols() != 1 || static_cast<std::size_t>(prob.rows()) != target.size() ||
      target.size() != include.size()) {
    throw DimensionError("binary_cross_entropy: probabilities " + prob.shape_str() + ", " +
                         std::to_string(target.size()) + " targets, " +
                         std::to_string(include.size()) + " mask entries");
  }
  const auto m = std::count(include.begin(), include.end(), true);
  if (m == 0) throw ContractError("binary_cross_entropy: empty loss mask");
  Scalar total = 0;
  for (Index i = 0; i < prob.rows(); ++i) {
    if (!include[static_cast<std::size_t>(i)]) continue;
    const Scalar p = detail::clamp_prob(prob.value()(i, 0));
    total -= target[static_cast<std::size_t>(i)] ? std::log(p) : std::log(Scalar(1) - p);
  }
  const Scalar inv_m = Scalar(1) / static_cast<Scalar>(m);
  Matrix<Scalar> out(1, 1);
  out(0, 0) = total * inv_m;
  std::vector<int> y(target.begin(), target.end());
  return detail::make_result<Scalar>(
      std::move(out), {&prob}, [prob, y, include, inv_m](detail::Node<Scalar>& n) {
        Matrix<Scalar> d = Matrix<Scalar>::Zero(prob.rows(), 1);
        for (Index i = 0; i < prob.rows(); ++i) {
          const Scalar p = prob.value()(i, 0);
          if (!include[static_cast<std::size_t>(i)] || !detail::inside_clamp(p)) continue;
          d(i, 0) = y[static_cast<std::size_t>(i)] ? -Scalar(1) / p : Scalar(1) / (Scalar(1) - p);
        }
        detail::accumulate(*prob.node(), d * (n.grad(0, 0) * inv_m));
      });
}

/// Mean categorical cross-entropy of row distributions `prob` (rows x K)
/// against integer labels over rows where `include` is set.
template <typename Scalar>
Tensor<Scalar> categorical_cross_entropy(const Tensor<Scalar>& prob, std::span<const int> label,
                                         const std::vector<bool>& include) {
  if (static_cast<std::size_t>(prob.rows()) != label.size() || label.size() != include.size()) {
    throw DimensionError("categorical_cross_entropy: probabilities " + prob.shape_str() + ", " +
                         std::to_string(label.size()) + " labels, " +
                         std::to_string(include.size()) + " mask entries");
  }
  Index m = 0;
  Scalar total = 0;
  for (Index i = 0; i < prob.rows(); ++i) {
    if (!include[static_cast<std::size_t>(i)]) continue;
    const int c = label[static_cast<std::size_t>(i)];
    if (c < 0 || c >= prob.cols()) {
      throw ContractError("categorical_cross_entropy: label " + std::to_string(c) +
                          " outside [0," + std::to_string(prob.cols()) + ")");
    }
    total -= std::log(detail::clamp_prob(prob.value()(i, c)));
    ++m;
  }
  if (m == 0) throw ContractError("categorical_cross_entropy: empty mask");
  const Scalar inv_m = Scalar(1) / static_cast<Scalar>(m);
  Matrix<Scalar> out(1, 1);
  out(0, 0) = total * inv_m;
  std::vector<int> y(label.begin(), label.end());
  return detail::make_result<Scalar>(
      std::move(out), {&prob}, [prob, y, include, inv_m](detail::Node<Scalar>& n) {
        Matrix<Scalar> d = Matrix<Scalar>::Zero(prob.rows(), prob.cols());
        for (Index i = 0; i < prob.rows(); ++i) {
          if (!include[static_cast<std::size_t>(i)]) continue;
          const int c = y[static_cast<std::size_t>(i)];
          const Scalar p = prob.value()(i, c);
          if (detail::inside_clamp(p)) d(i, c) = -Scalar(1) / p;
        }
        detail::accumulate(*prob.node(), d * (n.grad(0, 0) * inv_m));
      });
}

}  // namespace t2seg
