#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rebmkit/errors.hpp"
#include "rebmkit/gradcheck.hpp"
#include "rebmkit/ops.hpp"
#include "rebmkit/rng.hpp"

using namespace rebmkit;

namespace {

RealMatrix random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
  RealMatrix m(r, c);
  for (double& v : m.data) v = scale * rng.gaussian();
  return m;
}

}  // namespace

TEST_CASE("affine identity and zero-weight cases") {
  ParamBlock w("w", 2, 2);
  w.value = RealMatrix::identity(2);
  ParamBlock b("b", 2, 1);
  RealMatrix x(2, 1);
  x.at(0, 0) = 3.0;
  x.at(1, 0) = 4.0;
  RealMatrix y = affine(w, b, x);
  CHECK(y.at(0, 0) == doctest::Approx(3.0));
  CHECK(y.at(1, 0) == doctest::Approx(4.0));

  ParamBlock w0("w0", 2, 2);
  ParamBlock b1("b1", 2, 1);
  b1.value.at(0, 0) = 1.0;
  b1.value.at(1, 0) = 2.0;
  Rng rng(5);
  RealMatrix xr = random_matrix(2, 1, rng);
  RealMatrix y2 = affine(w0, b1, xr);
  CHECK(y2.at(0, 0) == doctest::Approx(1.0));
  CHECK(y2.at(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("affine shape mismatch names both shapes") {
  ParamBlock w("w", 3, 4);
  ParamBlock b("b", 3, 1);
  RealMatrix x(5, 1);
  try {
    affine(w, b, x);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("3x4") != std::string::npos);
    CHECK(msg.find("5x1") != std::string::npos);
  }
}

TEST_CASE("affine gradient matches central finite differences") {
  Rng rng(42);
  ParamBlock w("w", 3, 4);
  init_glorot_uniform(w, rng);
  ParamBlock b("b", 3, 1);
  init_glorot_uniform(b, rng);
  RealMatrix x = random_matrix(4, 2, rng);
  RealMatrix c = random_matrix(3, 2, rng);  // fixed weighting so the loss is scalar

  auto loss = [&](bool accumulate) {
    RealMatrix y = affine(w, b, x);
    double l = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) l += c.data[i] * y.data[i];
    if (accumulate) affine_backward(w, b, x, c);
    return l;
  };
  auto report = grad_check(loss, {&w, &b}, 1e-5, 64);
  CHECK(report.max_rel_err() < 1e-6);
}

TEST_CASE("affine input gradient is W^T dy") {
  Rng rng(7);
  ParamBlock w("w", 3, 4);
  init_glorot_uniform(w, rng);
  ParamBlock b("b", 3, 1);
  RealMatrix x = random_matrix(4, 1, rng);
  RealMatrix dy = random_matrix(3, 1, rng);
  RealMatrix dx = affine_backward(w, b, x, dy);
  for (int k = 0; k < 4; ++k) {
    double expect = 0.0;
    for (int i = 0; i < 3; ++i) expect += w.value.at(i, k) * dy.at(i, 0);
    CHECK(dx.at(k, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("activations at zero") {
  RealMatrix x(1, 2);
  RealMatrix s = elementwise_activation(Activation::sigmoid, x);
  RealMatrix t = elementwise_activation(Activation::tanh, x);
  CHECK(s.at(0, 0) == doctest::Approx(0.5));
  CHECK(t.at(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("sigmoid stays finite deep in the negative tail") {
  RealMatrix x(1, 1);
  x.at(0, 0) = -800.0;
  RealMatrix y = elementwise_activation(Activation::sigmoid, x);
  double v = y.at(0, 0);
  // stable-form oracle for x < 0 (underflows to zero at -800 in 64-bit)
  double e = std::exp(-800.0);
  double oracle = e / (1.0 + e);
  CHECK(v == oracle);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
  CHECK(v <= 1e-300);

  x.at(0, 0) = 800.0;
  y = elementwise_activation(Activation::sigmoid, x);
  CHECK(y.at(0, 0) == doctest::Approx(1.0));
  CHECK(std::isfinite(y.at(0, 0)));
}

TEST_CASE("activation backward matches finite differences") {
  Rng rng(11);
  for (Activation kind : {Activation::sigmoid, Activation::tanh}) {
    RealMatrix x = random_matrix(2, 3, rng, 2.0);
    RealMatrix c = random_matrix(2, 3, rng);
    double h = 1e-6;
    RealMatrix y = elementwise_activation(kind, x);
    RealMatrix dx = activation_backward(kind, y, c);
    for (size_t i = 0; i < x.data.size(); ++i) {
      RealMatrix xp = x, xm = x;
      xp.data[i] += h;
      xm.data[i] -= h;
      double lp = 0.0, lm = 0.0;
      RealMatrix yp = elementwise_activation(kind, xp);
      RealMatrix ym = elementwise_activation(kind, xm);
      for (size_t j = 0; j < yp.data.size(); ++j) {
        lp += c.data[j] * yp.data[j];
        lm += c.data[j] * ym.data[j];
      }
      CHECK(dx.data[i] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("log_softmax symmetry and max-shift") {
  RealMatrix x(1, 3);
  RealMatrix y = log_softmax(x);
  for (int j = 0; j < 3; ++j) CHECK(y.at(0, j) == doctest::Approx(-std::log(3.0)).epsilon(1e-12));

  RealMatrix big(1, 2);
  big.at(0, 0) = 1000.0;
  RealMatrix yb = log_softmax(big);
  CHECK(yb.all_finite());
  CHECK(yb.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(yb.at(0, 1) == doctest::Approx(-1000.0).epsilon(1e-9));
}

TEST_CASE("exp of log_softmax sums to one") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    RealMatrix x = random_matrix(1, 5, rng, trial % 2 == 0 ? 1.0 : 50.0);
    RealMatrix y = log_softmax(x);
    double sum = 0.0;
    for (double v : y.data) sum += std::exp(v);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("logsumexp basics") {
  std::vector<double> two{0.0, 0.0};
  CHECK(logsumexp(two) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  std::vector<double> one{-3.25};
  CHECK(logsumexp(one) == doctest::Approx(-3.25).epsilon(1e-15));
  CHECK_THROWS_AS(logsumexp(std::vector<double>{}), PreconditionError);

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xs(6);
    for (double& v : xs) v = rng.uniform(-2.0, 2.0);
    double naive = 0.0;
    for (double v : xs) naive += std::exp(v);
    naive = std::log(naive);
    CHECK(std::abs(logsumexp(xs) - naive) < 1e-12);
    CHECK(logsumexp(xs) >= *std::max_element(xs.begin(), xs.end()));
  }
}

TEST_CASE("adam first step with unit gradient") {
  ParamBlock p("p", 2, 2);
  p.grad.fill(1.0);
  adam_step(p);
  for (double v : p.value.data) CHECK(std::abs(v - (-0.001)) < 1e-6);
  CHECK(p.adam_t == 1);
  for (double g : p.grad.data) CHECK(g == 0.0);
}

TEST_CASE("adam with zero gradient is the identity on value") {
  Rng rng(21);
  ParamBlock p("p", 3, 3);
  init_glorot_uniform(p, rng);
  RealMatrix before = p.value;
  adam_step(p);
  CHECK(p.value == before);
}

TEST_CASE("adam two constant-gradient steps match a hand-stepped trace") {
  AdamConfig cfg;
  ParamBlock p("p", 1, 1);
  p.value.at(0, 0) = 0.5;
  double g = 0.75;

  // scalar reference trace, stepped by hand
  double theta = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    double mh = m / (1 - std::pow(cfg.beta1, t));
    double vh = v / (1 - std::pow(cfg.beta2, t));
    theta -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
  }

  for (int t = 0; t < 2; ++t) {
    p.grad.fill(g);
    adam_step(p, cfg);
  }
  CHECK(p.value.at(0, 0) == doctest::Approx(theta).epsilon(1e-15));
}

TEST_CASE("adam rejects non-finite gradients naming the block") {
  ParamBlock p("enc_fwd.Wz", 1, 2);
  p.grad.at(0, 0) = std::nan("");
  try {
    adam_step(p);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("enc_fwd.Wz") != std::string::npos);
  }
}

TEST_CASE("clip_global_norm caps the joint gradient norm") {
  ParamBlock a("a", 1, 2), b("b", 1, 2);
  a.grad.fill(3.0);
  b.grad.fill(4.0);  // norm = sqrt(2*9 + 2*16) = sqrt(50)
  std::vector<ParamBlock*> blocks{&a, &b};
  clip_global_norm(blocks, 5.0);
  CHECK(global_grad_norm(blocks) == doctest::Approx(5.0).epsilon(1e-12));
  clip_global_norm(blocks, 5.0);  // already at the cap: no-op
  CHECK(global_grad_norm(blocks) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("grad_check on a linear least-squares toy loss") {
  Rng rng(33);
  ParamBlock w("w", 3, 4);
  init_glorot_uniform(w, rng);
  ParamBlock b("b", 3, 1);
  init_glorot_uniform(b, rng);
  RealMatrix x = random_matrix(4, 5, rng);
  RealMatrix target = random_matrix(3, 5, rng);

  auto loss = [&](bool accumulate) {
    RealMatrix y = affine(w, b, x);
    double l = 0.0;
    RealMatrix dy(y.rows, y.cols);
    for (size_t i = 0; i < y.data.size(); ++i) {
      double r = y.data[i] - target.data[i];
      l += 0.5 * r * r;
      dy.data[i] = r;
    }
    if (accumulate) affine_backward(w, b, x, dy);
    return l;
  };
  auto report = grad_check(loss, {&w, &b}, 1e-5, 64);
  CHECK(report.max_rel_err() < 1e-7);
}

TEST_CASE("grad_check on a constant loss reports zero error") {
  ParamBlock w("w", 2, 2);
  auto loss = [&](bool) { return 4.25; };
  auto report = grad_check(loss, {&w});
  CHECK(report.max_rel_err() == 0.0);
}

TEST_CASE("forward ops map finite inputs to finite outputs") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    RealMatrix x = random_matrix(3, 4, rng, 100.0);
    CHECK(elementwise_activation(Activation::sigmoid, x).all_finite());
    CHECK(elementwise_activation(Activation::tanh, x).all_finite());
    CHECK(log_softmax(x).all_finite());
  }
}
