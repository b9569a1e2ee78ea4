// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "t2seg/gradcheck.hpp"
#include "t2seg/model.hpp"
#include "test_util.hpp"

using namespace t2seg;
using t2seg::testing::mat;
using t2seg::testing::random_matrix;
using T = Tensor<double>;

namespace {

ModelConfig tiny_config(int d_in = 5, int k = 3) {
  ModelConfig c;
  c.d_in = d_in;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ffn = 12;
  c.max_len = 16;
  c.num_topics = k;
  c.dropout = 0.0;
  return c;
}

// Glorot init leaves biases at zero and gains at one; perturb every tensor so
// the oracle comparison exercises all of them.
ModelParams<double> perturbed_params(const ModelConfig& c, std::uint64_t seed) {
  auto p = init_params<double>(c, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> n(0.0, 0.2);
  for (auto& nt : p.named()) {
    if (!nt.tensor.requires_grad()) continue;
    auto& m = nt.tensor.mutable_value();
    for (Index i = 0; i < m.size(); ++i) m.data()[i] += n(rng);
  }
  return p;
}

// ---- straight-line reference implementation on nested vectors ----------

using Grid = std::vector<std::vector<double>>;

Grid to_grid(const Matrix<double>& m) {
  Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  }
  return g;
}

Grid affine(const Grid& x, const Grid& w, const Grid& b) {
  Grid y(x.size(), std::vector<double>(w[0].size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < w[0].size(); ++j) {
      double s = b[0][j];
      for (std::size_t k = 0; k < w.size(); ++k) s += x[i][k] * w[k][j];
      y[i][j] = s;
    }
  }
  return y;
}

Grid norm(const Grid& x, const Grid& g, const Grid& b, double eps) {
  Grid y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i].size());
    double mu = 0;
    for (double v : x[i]) mu += v;
    mu /= d;
    double var = 0;
    for (double v : x[i]) var += (v - mu) * (v - mu);
    var /= d;
    for (std::size_t j = 0; j < x[i].size(); ++j) y[i][j] = (x[i][j] - mu) / std::sqrt(var + eps) * g[0][j] + b[0][j];
  }
  return y;
}

Grid self_attention(const Grid& q, const Grid& k, const Grid& v, int heads, const std::vector<bool>& pad) {
  const std::size_t n = q.size(), d = q[0].size(), dh = d / static_cast<std::size_t>(heads);
  Grid out(n, std::vector<double>(d, 0.0));
  for (int h = 0; h < heads; ++h) {
    const std::size_t o = static_cast<std::size_t>(h) * dh;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n, -INFINITY);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        if (pad[j]) continue;
        double dot = 0;
        for (std::size_t t = 0; t < dh; ++t) dot += q[i][o + t] * k[j][o + t];
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (std::size_t j = 0; j < n; ++j) z += pad[j] ? 0.0 : std::exp(s[j] - mx);
      for (std::size_t j = 0; j < n; ++j) {
        if (pad[j]) continue;
        const double a = std::exp(s[j] - mx) / z;
        for (std::size_t t = 0; t < dh; ++t) out[i][o + t] += a * v[j][o + t];
      }
    }
  }
  return out;
}

struct OracleOut {
  std::vector<double> seg;
  Grid topic;
};

OracleOut oracle_forward(const Matrix<double>& input, const ModelParams<double>& p, const ModelConfig& c,
                         std::vector<bool> pad = {}) {
  const std::size_t n = static_cast<std::size_t>(input.rows());
  if (pad.empty()) pad.assign(n, false);
  Grid x = to_grid(input);
  for (auto& row : x)
    for (double& v : row) v *= 2.0 / std::sqrt(static_cast<double>(c.d_in));
  Grid h = affine(x, to_grid(p.input_weight.value()), to_grid(p.input_bias.value()));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < c.d_model; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (j / 2)) / c.d_model);
      h[i][j] += j % 2 == 0 ? std::sin(i * freq) : std::cos(i * freq);
    }
  }
  for (const auto& L : p.layers) {
    Grid a = norm(h, to_grid(L.ln1_gain.value()), to_grid(L.ln1_bias.value()), c.layer_norm_eps);
    Grid q = affine(a, to_grid(L.wq.value()), to_grid(L.bq.value()));
    Grid k = affine(a, to_grid(L.wk.value()), to_grid(L.bk.value()));
    Grid v = affine(a, to_grid(L.wv.value()), to_grid(L.bv.value()));
    a = affine(self_attention(q, k, v, c.n_heads, pad), to_grid(L.wo.value()), to_grid(L.bo.value()));
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < c.d_model; ++j) h[i][j] += a[i][j];
    Grid f = norm(h, to_grid(L.ln2_gain.value()), to_grid(L.ln2_bias.value()), c.layer_norm_eps);
    f = affine(f, to_grid(L.w1.value()), to_grid(L.b1.value()));
    for (auto& row : f) {
      for (double& x : row) {
        x = 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
      }
    }
    f = affine(f, to_grid(L.w2.value()), to_grid(L.b2.value()));
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < c.d_model; ++j) h[i][j] += f[i][j];
  }
  h = norm(h, to_grid(p.final_gain.value()), to_grid(p.final_bias.value()), c.layer_norm_eps);
  OracleOut out;
  const Grid seg = affine(h, to_grid(p.seg_weight.value()), to_grid(p.seg_bias.value()));
  for (const auto& row : seg) out.seg.push_back(1.0 / (1.0 + std::exp(-row[0])));
  out.topic = affine(h, to_grid(p.topic_weight.value()), to_grid(p.topic_bias.value()));
  for (auto& row : out.topic) {
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0;
    for (double& x : row) z += (x = std::exp(x - mx));
    for (double& x : row) x /= z;
  }
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.use_seg_loss = c.use_topic_loss = false;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.num_topics = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("init_params is deterministic with zero biases and unit gains") {
  const auto c = tiny_config();
  const auto a = init_params<double>(c, 42);
  const auto b = init_params<double>(c, 42);
  const auto other = init_params<double>(c, 43);
  const auto na = a.named(), nb = b.named(), no = other.named();
  REQUIRE(na.size() == nb.size());
  std::set<std::string> names;
  bool any_diff = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].name == nb[i].name);
    CHECK(na[i].tensor.value() == nb[i].tensor.value());
    CHECK(na[i].tensor.value().allFinite());
    names.insert(na[i].name);
    if (na[i].tensor.value() != no[i].tensor.value()) any_diff = true;
    const auto& n = na[i].name;
    if (n.size() > 5 && n.compare(n.size() - 5, 5, ".bias") == 0) CHECK(na[i].tensor.value().isZero());
    if (n.size() > 5 && n.compare(n.size() - 5, 5, ".gain") == 0) CHECK(na[i].tensor.value().isOnes());
  }
  CHECK(names.size() == na.size());
  CHECK(any_diff);
}

TEST_CASE("Glorot statistics on a 768x768 weight") {
  ModelConfig c;
  c.d_in = 768;
  c.n_layers = 1;
  c.num_topics = 2;
  const auto p = init_params<float>(c, 1);
  const auto& w = p.input_weight.value();
  REQUIRE(w.rows() == 768);
  REQUIRE(w.cols() == 768);
  const double target = std::sqrt(6.0 / 1536.0) / std::sqrt(3.0);
  const double mean = w.cast<double>().mean();
  const double var = (w.cast<double>().array() - mean).square().mean();
  CHECK(std::abs(std::sqrt(var) - target) < 0.2 * target);
}

TEST_CASE("attention of a single key returns its value projection") {
  const auto c = tiny_config();
  const auto p = perturbed_params(c, 3);
  std::mt19937_64 rng(4);
  const T x(random_matrix(1, 8, rng));
  const auto& L = p.layers[0];
  std::vector<Matrix<double>> w;
  const auto out = multi_head_attention(x, L, 2, BatchLayout::single(1), &w).value();
  const Matrix<double> want = (linear(linear(x, L.wv, L.bv), L.wo, L.bo)).value();
  CHECK((out - want).cwiseAbs().maxCoeff() < 1e-12);
  for (const auto& m : w) CHECK(m(0, 0) == 1.0);
}

TEST_CASE("masked keys do not influence outputs") {
  const auto c = tiny_config();
  const auto p = perturbed_params(c, 5);
  std::mt19937_64 rng(6);
  Matrix<double> x = random_matrix(4, 8, rng);
  BatchLayout layout = BatchLayout::single(4);
  layout.pad[2] = true;
  const auto& L = p.layers[0];
  const auto before = multi_head_attention(T(x), L, 2, layout).value();
  x.row(2) = random_matrix(1, 8, rng) * 10.0;
  const auto after = multi_head_attention(T(x), L, 2, layout).value();
  for (int r : {0, 1, 3}) CHECK((before.row(r) - after.row(r)).cwiseAbs().maxCoeff() < 1e-12);

  layout.pad.assign(4, true);
  CHECK_THROWS_AS(multi_head_attention(T(x), L, 2, layout), ContractError);
}

TEST_CASE("attention matches a straight-line oracle") {
  const auto c = tiny_config();
  const auto p = perturbed_params(c, 7);
  std::mt19937_64 rng(8);
  const Matrix<double> x = random_matrix(5, 8, rng);
  const auto& L = p.layers[0];
  for (int heads : {1, 2}) {
    std::vector<bool> pad(5, false);
    const Grid q = affine(to_grid(x), to_grid(L.wq.value()), to_grid(L.bq.value()));
    const Grid k = affine(to_grid(x), to_grid(L.wk.value()), to_grid(L.bk.value()));
    const Grid v = affine(to_grid(x), to_grid(L.wv.value()), to_grid(L.bv.value()));
    const Grid want = affine(self_attention(q, k, v, heads, pad), to_grid(L.wo.value()), to_grid(L.bo.value()));
    std::vector<Matrix<double>> weights;
    const auto got = multi_head_attention(T(x), L, heads, BatchLayout::single(5), &weights).value();
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 8; ++j) CHECK(std::abs(got(i, j) - want[i][j]) < 1e-10);
    for (const auto& w : weights)
      for (int i = 0; i < 5; ++i) CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-6);
  }
}

TEST_CASE("tiny model forward matches the straight-line oracle") {
  const auto c = tiny_config();
  const auto p = perturbed_params(c, 11);
  std::mt19937_64 rng(12);
  const Matrix<double> s = random_matrix(6, 5, rng);
  const auto out = forward<double>(s, p, c);
  const auto want = oracle_forward(s, p, c);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(out.seg_prob.value()(i, 0) - want.seg[i]) < 1e-10);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(out.topic_prob.value()(i, j) - want.topic[i][j]) < 1e-10);
  }
}

TEST_CASE("two-layer model with padding matches the oracle") {
  auto c = tiny_config();
  c.n_layers = 2;
  const auto p = perturbed_params(c, 13);
  std::mt19937_64 rng(14);
  const Matrix<double> s = random_matrix(6, 5, rng);
  const std::vector<bool> pad{false, false, true, false, false, true};
  const auto out = forward<double>(s, p, c, {}, pad);
  const auto want = oracle_forward(s, p, c, pad);
  for (int i = 0; i < 6; ++i) {
    if (pad[i]) continue;
    CHECK(std::abs(out.seg_prob.value()(i, 0) - want.seg[i]) < 1e-10);
  }
}

TEST_CASE("forward shapes and normalization") {
  const auto c = tiny_config();
  const auto p = init_params<double>(c, 1);
  const auto out = forward<double>(Matrix<double>::Ones(1, 5), p, c);
  CHECK(out.seg_prob.rows() == 1);
  CHECK(out.seg_prob.value()(0, 0) > 0.0);
  CHECK(out.seg_prob.value()(0, 0) < 1.0);
  CHECK(std::abs(out.topic_prob.value().row(0).sum() - 1.0) < 1e-6);

  CHECK_THROWS_AS(forward<double>(Matrix<double>::Ones(3, 4), p, c), DimensionError);
  CHECK_THROWS_AS(forward<double>(Matrix<double>::Ones(17, 5), p, c), ContractError);
}

TEST_CASE("appending pad rows leaves real rows unchanged in float") {
  ModelConfig c = tiny_config();
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 4;
  const auto p = init_params<float>(c, 3);
  std::mt19937_64 rng(4);
  const Matrix<float> s = random_matrix(5, 5, rng).cast<float>();
  Matrix<float> padded = Matrix<float>::Zero(8, 5);
  padded.topRows(5) = s;
  padded.bottomRows(3) = random_matrix(3, 5, rng).cast<float>();
  const auto a = forward<float>(s, p, c);
  const auto b = forward<float>(padded, p, c, {}, {false, false, false, false, false, true, true, true});
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(a.seg_prob.value()(i, 0) - b.seg_prob.value()(i, 0)) < 1e-5);
    CHECK((a.topic_prob.value().row(i) - b.topic_prob.value().row(i)).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("stacked blocks equal separate documents") {
  const auto c = tiny_config();
  const auto p = perturbed_params(c, 21);
  std::mt19937_64 rng(22);
  const Matrix<double> a = random_matrix(3, 5, rng);
  const Matrix<double> b = random_matrix(4, 5, rng);
  Matrix<double> stacked(7, 5);
  stacked << a, b;
  BatchLayout layout;
  layout.blocks = {{0, 3}, {3, 4}};
  layout.pad.assign(7, false);
  const auto both = forward<double>(T(stacked), layout, p, c);
  const auto oa = forward<double>(a, p, c);
  const auto ob = forward<double>(b, p, c);
  CHECK((both.seg_prob.value().topRows(3) - oa.seg_prob.value()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((both.seg_prob.value().bottomRows(4) - ob.seg_prob.value()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward is sensitive to sentence order") {
  const auto c = tiny_config();
  const auto p = perturbed_params(c, 31);
  std::mt19937_64 rng(32);
  const Matrix<double> s = random_matrix(6, 5, rng);
  Matrix<double> swapped = s;
  swapped.row(0).swap(swapped.row(4));
  const auto a = forward<double>(s, p, c);
  const auto b = forward<double>(swapped, p, c);
  // Row 0 of the permuted input is the old row 4; without positions these would agree.
  CHECK(std::abs(a.seg_prob.value()(4, 0) - b.seg_prob.value()(0, 0)) > 1e-6);
}

TEST_CASE("loss closed form and near-zero loss") {
  for (int k : {2, 3, 7}) {
    const int n = 5;
    ForwardOutput<double> out;
    out.seg_prob = T(Matrix<double>::Constant(n, 1, 0.5));
    out.topic_prob = T(Matrix<double>::Constant(n, k, 1.0 / k));
    out.layout = BatchLayout::single(n);
    auto c = tiny_config(5, k);
    const std::vector<int> ys{1, 0, 0, 1, 0}, yt{0, 0, 0, 1, 1};
    const std::vector<bool> mask{true, true, false, true, false};
    const double l = compute_loss<double>(out, ys, yt, mask, c).item();
    CHECK(std::abs(l - (std::log(2.0) + std::log(static_cast<double>(k)))) < 1e-9);

    Matrix<double> sp(n, 1), tp = Matrix<double>::Zero(n, k);
    for (int i = 0; i < n; ++i) {
      sp(i, 0) = ys[i];
      tp(i, yt[i]) = 1.0;
    }
    out.seg_prob = T(sp);
    out.topic_prob = T(tp);
    CHECK(compute_loss<double>(out, ys, yt, mask, c).item() < 1e-5);
  }
}

TEST_CASE("loss matches straight-line summation") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const int n = 5, k = 3;
  Matrix<double> sp(n, 1), tp(n, k);
  for (int i = 0; i < n; ++i) {
    sp(i, 0) = u(rng);
    double z = 0;
    for (int j = 0; j < k; ++j) z += (tp(i, j) = u(rng));
    tp.row(i) /= z;
  }
  ForwardOutput<double> out{T(sp), T(tp), BatchLayout::single(n)};
  out.layout.pad[4] = true;
  const std::vector<int> ys{1, 0, 1, 0, 0}, yt{2, 2, 0, 0, 1};
  const std::vector<bool> mask{true, false, true, true, false};
  double seg = 0, top = 0;
  int ms = 0, mt = 0;
  for (int i = 0; i < n; ++i) {
    if (mask[i]) {
      seg += ys[i] ? -std::log(sp(i, 0)) : -std::log(1.0 - sp(i, 0));
      ++ms;
    }
    if (!out.layout.pad[i]) {
      top += -std::log(tp(i, yt[i]));
      ++mt;
    }
  }
  const auto c = tiny_config(5, k);
  CHECK(std::abs(compute_loss<double>(out, ys, yt, mask, c).item() - (seg / ms + top / mt)) < 1e-10);

  auto seg_only = c;
  seg_only.use_topic_loss = false;
  CHECK(std::abs(compute_loss<double>(out, ys, yt, mask, seg_only).item() - seg / ms) < 1e-10);

  CHECK_THROWS_AS(compute_loss<double>(out, ys, yt, std::vector<bool>(n, false), c), ContractError);
  CHECK_THROWS_AS(compute_loss<double>(out, ys, yt, {true, false, false, false, true}, c), ContractError);
}

namespace {

struct TinyBatch {
  Matrix<double> s;
  std::vector<int> ys{1, 0, 0, 1, 0, 0};
  std::vector<int> yt{0, 0, 0, 2, 2, 2};
  std::vector<bool> mask{true, false, true, true, true, false};
};

double loss_value(const ModelParams<double>& p, const ModelConfig& c, const TinyBatch& b) {
  const auto out = forward<double>(b.s, p, c);
  return compute_loss<double>(out, b.ys, b.yt, b.mask, c).item();
}

}  // namespace

TEST_CASE("full tiny model gradients pass finite differences") {
  const auto c = tiny_config(5, 3);
  auto p = perturbed_params(c, 51);
  std::mt19937_64 rng(52);
  TinyBatch b;
  b.s = random_matrix(6, 5, rng);
  {
    Graph<double> g;
    Recording<double> rec(g);
    const auto out = forward<double>(b.s, p, c);
    g.backward(compute_loss<double>(out, b.ys, b.yt, b.mask, c));
  }
  for (auto& nt : p.named()) {
    if (!nt.tensor.requires_grad()) continue;
    CAPTURE(nt.name);
    const Matrix<double> analytic = nt.tensor.grad();
    auto eval = [&]() { return loss_value(p, c, b); };
    const auto numeric = numeric_gradient<double>(eval, nt.tensor.mutable_value(), 1e-5);
    CHECK(max_relative_error<double>(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("disabled heads receive exactly zero gradient") {
  for (bool seg_off : {true, false}) {
    auto c = tiny_config(5, 3);
    if (seg_off) c.use_seg_loss = false;
    else c.use_topic_loss = false;
    auto p = perturbed_params(c, 61);
    std::mt19937_64 rng(62);
    TinyBatch b;
    b.s = random_matrix(6, 5, rng);
    Graph<double> g;
    Recording<double> rec(g);
    const auto out = forward<double>(b.s, p, c);
    g.backward(compute_loss<double>(out, b.ys, b.yt, b.mask, c));
    const auto& w = seg_off ? p.seg_weight : p.topic_weight;
    const auto& bias = seg_off ? p.seg_bias : p.topic_bias;
    const auto& live = seg_off ? p.topic_weight : p.seg_weight;
    CHECK(w.grad().isZero(0.0));
    CHECK(bias.grad().isZero(0.0));
    CHECK_FALSE(live.grad().isZero(0.0));
  }
}

TEST_CASE("predict_boundaries") {
  CHECK(predict_boundaries(std::vector<double>{0.9, 0.1, 0.7}, 0.5) == std::vector<int>{1, 0, 1});
  CHECK(predict_boundaries(std::vector<double>{0.0, 0.0}, 0.3) == std::vector<int>{1, 0});
  CHECK(predict_boundaries(std::vector<double>{0.0, 0.2, 0.0}, 0.0) == std::vector<int>{1, 1, 1});
  CHECK(predict_boundaries(std::vector<double>{0.9, 1.0, 0.99}, 1.01) == std::vector<int>{1, 0, 0});
}

TEST_CASE("derive_boundaries_from_topics") {
  CHECK(derive_boundaries_from_topics(mat({{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.1, 0.9}})) ==
        std::vector<int>{1, 0, 1, 0});
  CHECK(derive_boundaries_from_topics(mat({{0.6, 0.4}, {0.7, 0.3}, {0.9, 0.1}})) == std::vector<int>{1, 0, 0});
  const auto ties = mat({{0.5, 0.5}, {0.5, 0.5}, {0.4, 0.6}});
  CHECK(argmax_rows(ties) == std::vector<int>{0, 0, 1});
  CHECK(derive_boundaries_from_topics(ties) == std::vector<int>{1, 0, 1});
}

TEST_CASE("predict decodes per document and switches decoder with the seg loss") {
  auto c = tiny_config(5, 3);
  const auto p = init_params<float>(c, 71);
  std::mt19937_64 rng(72);
  std::vector<Matrix<float>> docs{random_matrix(4, 5, rng).cast<float>(), random_matrix(7, 5, rng).cast<float>()};
  const auto preds = predict(p, c, std::span<const Matrix<float>>(docs));
  REQUIRE(preds.size() == 2);
  CHECK(preds[1].seg_prob.size() == 7);
  CHECK(preds[1].boundaries[0] == 1);
  CHECK(preds[1].boundaries == predict_boundaries(preds[1].seg_prob, 0.5));
  const auto alone = forward<float>(docs[1], p, c);
  for (int i = 0; i < 7; ++i) CHECK(std::abs(preds[1].seg_prob[i] - alone.seg_prob.value()(i, 0)) < 1e-6);

  c.use_seg_loss = false;
  const auto topic_only = predict(p, c, std::span<const Matrix<float>>(docs));
  CHECK(topic_only[0].boundaries == derive_boundaries_from_topics(topic_only[0].topic_prob));
}
