// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "otdr/adam.hpp"
#include "otdr/grad_check.hpp"
#include "otdr/ops.hpp"

using namespace otdr;
using namespace otdr::nn;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool rg = false) {
  Tensor t = Tensor::zeros(std::move(shape), rg);
  for (auto& v : t.vec()) v = rng.uniform(-1.0, 1.0);
  return t;
}

real dot(const Tensor& a, const Tensor& b) {
  real acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

}  // namespace

TEST_CASE("dense matches hand arithmetic") {
  Tensor x = Tensor::from({1, 2}, {1, 2});
  Tensor w = Tensor::from({2, 2}, {1, 1, 0, 1});
  Tensor b = Tensor::from({2}, {1, 0});
  Tensor y = dense(x, w, b);
  CHECK(y.data()[0] == doctest::Approx(4.0));
  CHECK(y.data()[1] == doctest::Approx(2.0));
}

TEST_CASE("dense identity passthrough and row independence") {
  Tensor x = Tensor::from({3, 2}, {1, 2, 1, 2, 1, 2});
  Tensor w = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor b = Tensor::zeros({2});
  Tensor y = dense(x, w, b);
  for (int r = 0; r < 3; ++r) {
    CHECK(y.data()[r * 2 + 0] == doctest::Approx(1.0));
    CHECK(y.data()[r * 2 + 1] == doctest::Approx(2.0));
  }
}

TEST_CASE("conv1d identity kernel and hand example") {
  // single-tap kernel [1] reproduces the input
  Tensor x = Tensor::from({1, 1, 5}, {1, 2, 3, 4, 5});
  Tensor w1 = Tensor::from({1, 1, 1}, {1});
  Tensor b = Tensor::zeros({1});
  Tensor y = conv1d(x, w1, b, 1);
  for (int i = 0; i < 5; ++i) CHECK(y.data()[i] == doctest::Approx(x.data()[i]));

  // x=[1,2,3], w=[1,1], stride 1, same padding (extra zero on the right)
  Tensor x3 = Tensor::from({1, 1, 3}, {1, 2, 3});
  Tensor w2 = Tensor::from({1, 1, 2}, {1, 1});
  Tensor y2 = conv1d(x3, w2, b, 1);
  REQUIRE(y2.dim(2) == 3);
  CHECK(y2.data()[0] == doctest::Approx(3.0));
  CHECK(y2.data()[1] == doctest::Approx(5.0));
  CHECK(y2.data()[2] == doctest::Approx(3.0));
}

TEST_CASE("conv1d stride-2 output length and brute-force oracle") {
  Rng rng(7);
  Tensor x = random_tensor({2, 3, 100}, rng);
  Tensor w = random_tensor({4, 3, 16}, rng);
  Tensor b = random_tensor({4}, rng);
  Tensor y = conv1d(x, w, b, 2);
  REQUIRE(y.shape() == Shape{2, 4, 50});

  // direct evaluation of the same cross-correlation with explicit zero padding
  const int L = 100, k = 16, s = 2, lo = 50;
  const int pad_total = (lo - 1) * s + k - L;
  const int pl = pad_total / 2;
  for (int bi = 0; bi < 2; ++bi)
    for (int oc = 0; oc < 4; ++oc)
      for (int t = 0; t < lo; ++t) {
        real acc = b.data()[oc];
        for (int ic = 0; ic < 3; ++ic)
          for (int j = 0; j < k; ++j) {
            int src = t * s + j - pl;
            if (src < 0 || src >= L) continue;
            acc += w.data()[(oc * 3 + ic) * k + j] * x.data()[(bi * 3 + ic) * L + src];
          }
        CHECK(y.data()[(bi * 4 + oc) * lo + t] == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("conv1d_transpose length contracts") {
  Rng rng(3);
  Tensor x = random_tensor({1, 2, 25}, rng);
  Tensor w = random_tensor({2, 3, 16}, rng);
  Tensor b = Tensor::zeros({3});
  CHECK(conv1d_transpose(x, w, b, 1).shape() == Shape{1, 3, 25});
  CHECK(conv1d_transpose(x, w, b, 2).shape() == Shape{1, 3, 50});

  // stride 1, identity kernel
  Tensor xi = Tensor::from({1, 1, 4}, {1, 2, 3, 4});
  Tensor wi = Tensor::from({1, 1, 1}, {1});
  Tensor bi = Tensor::zeros({1});
  Tensor yi = conv1d_transpose(xi, wi, bi, 1);
  for (int i = 0; i < 4; ++i) CHECK(yi.data()[i] == doctest::Approx(xi.data()[i]));
}

TEST_CASE("adjoint identity between conv1d and conv1d_transpose") {
  // <conv1d(x;w), y> == <x, conv1d_transpose(y;w)> on DCAE geometries
  struct Geometry {
    int ci, co, len, stride;
  };
  for (Geometry g : {Geometry{1, 64, 100, 2}, Geometry{64, 32, 50, 2}, Geometry{32, 16, 25, 1},
                     Geometry{16, 8, 16, 1}}) {
    Rng rng(static_cast<std::uint64_t>(g.ci * 131 + g.stride));
    Tensor x = random_tensor({2, g.ci, g.len}, rng);
    Tensor w = random_tensor({g.co, g.ci, 16}, rng);
    Tensor b0 = Tensor::zeros({g.co});
    Tensor b1 = Tensor::zeros({g.ci});
    Tensor cx = conv1d(x, w, b0, g.stride);
    Tensor y = random_tensor(cx.shape(), rng);
    Tensor cty = conv1d_transpose(y, w, b1, g.stride);
    REQUIRE(cty.shape() == x.shape());
    CHECK(std::abs(dot(cx, y) - dot(x, cty)) < 1e-10);
  }
}

TEST_CASE("activations: fixed points and closed-form values") {
  Tensor x = Tensor::from({5}, {0.0, -1.0, std::log(3.0), -30.0, 2.0});
  Tensor e = elu(x);
  CHECK(e.data()[0] == doctest::Approx(0.0));
  CHECK(e.data()[1] == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(e.data()[3] == doctest::Approx(-1.0).epsilon(1e-9));  // asymptote
  CHECK(e.data()[4] == doctest::Approx(2.0));
  Tensor s = sigmoid(x);
  CHECK(s.data()[0] == doctest::Approx(0.5));
  CHECK(s.data()[2] == doctest::Approx(0.75));
  Tensor t = tanh_act(x);
  CHECK(t.data()[0] == doctest::Approx(0.0));
}

TEST_CASE("losses: fixed values") {
  Tensor a = Tensor::from({2}, {0, 0});
  Tensor b = Tensor::from({2}, {1, 1});
  CHECK(mse_loss(a, a).item() == doctest::Approx(0.0));
  CHECK(mse_loss(a, b).item() == doctest::Approx(1.0));

  Tensor logits = Tensor::zeros({1, 4});
  CHECK(softmax_cross_entropy(logits, {2}).item() == doctest::Approx(std::log(4.0)));

  CHECK_THROWS_AS(mse_loss(Tensor::zeros({0}), Tensor::zeros({0})), invalid_argument_error);
}

TEST_CASE("backward: sum gives ones, accumulation doubles") {
  Parameter w("w", Tensor::from({4}, {1, 2, 3, 4}));
  Tensor loss = sum(w.value);
  loss.backward();
  for (int i = 0; i < 4; ++i) CHECK(w.value.grad()[i] == doctest::Approx(1.0));

  Tensor loss2 = sum(w.value);
  loss2.backward();
  for (int i = 0; i < 4; ++i) CHECK(w.value.grad()[i] == doctest::Approx(2.0));

  CHECK_THROWS_AS(Tensor::from({2}, {1, 2}).backward(), invalid_argument_error);
}

TEST_CASE("backward: dense+mse matches finite differences") {
  Rng rng(11);
  Parameter w("w", random_tensor({3, 4}, rng));
  Parameter b("b", random_tensor({3}, rng));
  Tensor x = random_tensor({5, 4}, rng);
  Tensor target = random_tensor({5, 3}, rng);
  auto loss_fn = [&] { return mse_loss(dense(x, w.value, b.value), target); };
  auto report = grad_check(loss_fn, {&w, &b}, 1e-6);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("grad_check: conv1d stride 2 within 1e-5") {
  Rng rng(13);
  Parameter w("w", random_tensor({4, 2, 5}, rng));
  Parameter b("b", random_tensor({4}, rng));
  Tensor x = random_tensor({2, 2, 12}, rng);
  Tensor target = random_tensor({2, 4, 6}, rng);
  auto loss_fn = [&] { return mse_loss(conv1d(x, w.value, b.value, 2), target); };
  auto report = grad_check(loss_fn, {&w, &b}, 1e-5);
  CHECK(report.passed);
}

TEST_CASE("grad_check: conv1d_transpose, batch norm, activations, input grads") {
  Rng rng(17);
  Parameter w("w", random_tensor({3, 2, 4}, rng));
  Parameter b("b", random_tensor({2}, rng));
  Parameter xin("x", random_tensor({2, 3, 10}, rng));
  BatchNorm1d bn("bn", 2);
  fill_uniform(bn.gamma.value, rng, 0.5, 1.5);
  fill_uniform(bn.beta.value, rng, -0.5, 0.5);
  Tensor target = random_tensor({2, 2, 20}, rng);
  auto loss_fn = [&] {
    Tensor h = conv1d_transpose(xin.value, w.value, b.value, 2);
    h = elu(h);
    // keep running stats frozen during the numeric probes
    BatchNorm1d bn_local = bn;
    h = bn_local.forward(h, true);
    return mse_loss(h, target);
  };
  auto report = grad_check(loss_fn, {&w, &b, &xin, &bn.gamma, &bn.beta}, 1e-5);
  CHECK(report.passed);
}

TEST_CASE("property: every primitive gradient matches finite differences over 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Parameter w("w", random_tensor({3, 5}, rng));
    Parameter b("b", random_tensor({3}, rng));
    Tensor x = random_tensor({4, 5}, rng);
    Tensor target = random_tensor({4, 3}, rng);
    auto loss_fn = [&] {
      Tensor h = dense(x, w.value, b.value);
      Tensor s = sigmoid(h);
      Tensor t = tanh_act(h);
      Tensor e = elu(h);
      return mse_loss(mul(add(s, t), e), target);
    };
    auto report = grad_check(loss_fn, {&w, &b}, 1e-4);
    CHECK_MESSAGE(report.passed, "seed ", seed, " max rel err ", report.max_rel_error);
  }
}

TEST_CASE("batch norm: normalization, affine contract, degenerate channel") {
  Rng rng(23);
  Tensor x = random_tensor({4, 3, 10}, rng);
  BatchNorm1d bn("bn", 3);
  Tensor y = bn.forward(x, true);
  for (int c = 0; c < 3; ++c) {
    real mu = 0.0;
    for (int bi = 0; bi < 4; ++bi)
      for (int t = 0; t < 10; ++t) mu += y.data()[(bi * 3 + c) * 10 + t];
    mu /= 40.0;
    CHECK(std::abs(mu) < 1e-7);
  }

  BatchNorm1d bn2("bn2", 1);
  bn2.gamma.value.data()[0] = 2.0;
  bn2.beta.value.data()[0] = 3.0;
  Tensor xs = random_tensor({8, 1, 16}, rng);
  Tensor y2 = bn2.forward(xs, true);
  real mu = 0.0, var = 0.0;
  for (std::int64_t i = 0; i < y2.numel(); ++i) mu += y2.data()[i];
  mu /= static_cast<real>(y2.numel());
  for (std::int64_t i = 0; i < y2.numel(); ++i) {
    real d = y2.data()[i] - mu;
    var += d * d;
  }
  var /= static_cast<real>(y2.numel());
  CHECK(mu == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(1e-4));

  // constant channel flattens to beta
  BatchNorm1d bn3("bn3", 1);
  bn3.beta.value.data()[0] = 0.7;
  Tensor xc = Tensor::full({2, 1, 4}, 5.0);
  Tensor y3 = bn3.forward(xc, true);
  for (std::int64_t i = 0; i < y3.numel(); ++i) CHECK(y3.data()[i] == doctest::Approx(0.7));

  CHECK_THROWS_AS(bn3.forward(Tensor::zeros({1, 1, 1}), true), invalid_argument_error);
}

TEST_CASE("adam: zero grad keeps parameter, first step is sign-scaled, deterministic") {
  Parameter p("p", Tensor::from({3}, {1.0, -2.0, 0.5}));
  std::vector<Parameter*> params{&p};

  p.value.grad();  // zero-filled
  Adam opt(1e-3);
  opt.step(params);
  CHECK(p.value.data()[0] == doctest::Approx(1.0));
  CHECK(p.value.data()[1] == doctest::Approx(-2.0));

  // constant gradient: first update magnitude ~ lr in the sign direction
  Parameter q("q", Tensor::from({2}, {0.0, 0.0}));
  std::vector<Parameter*> qs{&q};
  q.value.grad()[0] = 0.3;
  q.value.grad()[1] = -4.0;
  Adam opt2(1e-3);
  opt2.step(qs);
  CHECK(q.value.data()[0] == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(q.value.data()[1] == doctest::Approx(1e-3).epsilon(1e-4));

  // identical state + grads => identical update
  Parameter r1("r", Tensor::from({1}, {2.0}));
  Parameter r2("r", Tensor::from({1}, {2.0}));
  std::vector<Parameter*> v1{&r1}, v2{&r2};
  r1.value.grad()[0] = 0.7;
  r2.value.grad()[0] = 0.7;
  Adam o1(1e-2), o2(1e-2);
  o1.step(v1);
  o2.step(v2);
  CHECK(r1.value.data()[0] == r2.value.data()[0]);

  Parameter s("s", Tensor::from({1}, {1.0}));
  std::vector<Parameter*> sv{&s};
  Adam o3;
  CHECK_THROWS_AS(o3.step(sv), invalid_argument_error);
}

TEST_CASE("shape algebra: ceil-division lengths and encoder/decoder round trip") {
  CHECK(conv_out_len(100, 2) == 50);
  CHECK(conv_out_len(25, 1) == 25);
  CHECK(conv_out_len(101, 2) == 51);
  // stride products restore the DCAE input length
  int len = 100;
  for (int s : {2, 2, 1, 1, 1}) len = conv_out_len(len, s);
  CHECK(len == 25);
  for (int s : {1, 1, 1, 2, 2}) len *= s;
  CHECK(len == 100);
}

TEST_CASE("determinism: identical op sequences produce identical bits") {
  auto run = [] {
    Rng rng(99);
    Tensor x = random_tensor({2, 3, 20}, rng);
    Tensor w = random_tensor({4, 3, 7}, rng);
    Tensor b = random_tensor({4}, rng);
    return conv1d(x, w, b, 2);
  };
  Tensor y1 = run();
  Tensor y2 = run();
  REQUIRE(y1.numel() == y2.numel());
  for (std::int64_t i = 0; i < y1.numel(); ++i) CHECK(y1.data()[i] == y2.data()[i]);
}

TEST_CASE("channel mismatch rejected") {
  Tensor x = Tensor::zeros({1, 3, 10});
  Tensor w = Tensor::zeros({4, 2, 3});
  Tensor b = Tensor::zeros({4});
  CHECK_THROWS_AS(conv1d(x, w, b, 1), invalid_argument_error);
  CHECK_THROWS_AS(dense(Tensor::zeros({2, 3}), Tensor::zeros({4, 5}), Tensor::zeros({4})),
                  invalid_argument_error);
}
