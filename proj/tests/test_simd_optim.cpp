#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "focus/error.hpp"
#include "focus/optim.hpp"
#include "focus/rng.hpp"
#include "focus/simd.hpp"

using namespace focus;
using namespace focus::model;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

/// Every compiled and supported non-scalar table.
std::vector<const simd::Kernels*> wide_tables() {
  std::vector<const simd::Kernels*> out;
  if (auto* k = simd::avx2_kernels(); k && simd::supported(simd::Isa::Avx2)) out.push_back(k);
  if (auto* k = simd::neon_kernels(); k && simd::supported(simd::Isa::Neon)) out.push_back(k);
  return out;
}

TrainConfig schedule(int warmup, int total, double lr = 1.0) {
  TrainConfig c;
  c.learning_rate = lr;
  c.warmup_steps = warmup;
  c.total_steps = total;
  return c;
}

}  // namespace

TEST_CASE("scalar kernels match plain loops") {
  const auto& k = simd::scalar_kernels();
  const std::vector<double> a = {1, -2, 3, 0.5, 4};
  const std::vector<double> b = {2, 1, -1, 4, 0.25};
  CHECK(k.dot(a.data(), b.data(), a.size()) == 2 - 2 - 3 + 2 + 1);
  CHECK(k.sum(a.data(), a.size()) == 6.5);
  std::vector<double> y = b;
  k.axpy(2.0, a.data(), y.data(), y.size());
  CHECK(y == std::vector<double>{4, -3, 5, 5, 8.25});
  std::vector<double> r(5);
  k.relu(a.data(), r.data(), 5);
  CHECK(r == std::vector<double>{1, 0, 3, 0.5, 4});
  std::vector<double> g = {1, 1, 1, 1, 1};
  k.relu_backward(r.data(), g.data(), 5);
  CHECK(g == std::vector<double>{1, 0, 1, 1, 1});
}

TEST_CASE("wide kernels agree with the scalar table") {
  const auto& s = simd::scalar_kernels();
  Rng rng(17);
  for (const auto* k : wide_tables()) {
    CAPTURE(simd::isa_name(k->isa));
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 33u, 1000u}) {
      const auto a = random_vec(rng, n);
      const auto b = random_vec(rng, n);
      // Reductions may reassociate; the other elementwise ops are bit-identical.
      CHECK(k->dot(a.data(), b.data(), n) == doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-12));
      CHECK(k->sum(a.data(), n) == doctest::Approx(s.sum(a.data(), n)).epsilon(1e-12));

      // axpy may fuse the multiply-add: one rounding instead of two.
      auto y1 = b, y2 = b;
      s.axpy(0.37, a.data(), y1.data(), n);
      k->axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-15).scale(4.0));

      std::vector<double> r1(n), r2(n);
      s.relu(a.data(), r1.data(), n);
      k->relu(a.data(), r2.data(), n);
      CHECK(bit_equal(r1, r2));

      auto g1 = b, g2 = b;
      s.relu_backward(a.data(), g1.data(), n);
      k->relu_backward(a.data(), g2.data(), n);
      CHECK(bit_equal(g1, g2));

      auto p1 = a, p2 = a;
      auto m1 = random_vec(rng, n, -0.1, 0.1), m2 = m1;
      auto v1 = random_vec(rng, n, 0.0, 0.1), v2 = v1;
      const simd::AdamWCoefficients c{1e-3, 0.9, 0.999, 1e-8, 0.01, 1 - 0.9 * 0.9, 1 - 0.999 * 0.999};
      s.adamw(p1.data(), b.data(), m1.data(), v1.data(), n, c);
      k->adamw(p2.data(), b.data(), m2.data(), v2.data(), n, c);
      CHECK(bit_equal(p1, p2));
      CHECK(bit_equal(m1, m2));
      CHECK(bit_equal(v1, v2));
    }
  }
}

TEST_CASE("active table can be overridden") {
  const simd::Isa before = simd::active().isa;
  simd::set_active(simd::Isa::Scalar);
  CHECK(simd::active().isa == simd::Isa::Scalar);
  simd::set_active(before);
  CHECK(simd::isa_name(simd::Isa::Avx2) == "avx2");
}

TEST_CASE("learning-rate schedule") {
  const TrainConfig c = schedule(100, 1100);
  CHECK(lr_at(c, 0) == doctest::Approx(0.01));
  CHECK(lr_at(c, 49) == doctest::Approx(0.5));
  CHECK(lr_at(c, 99) == doctest::Approx(1.0));
  CHECK(lr_at(c, 100) == doctest::Approx(1.0));
  CHECK(lr_at(c, 600) == doctest::Approx(0.5));
  CHECK(lr_at(c, 1100) == 0.0);
  CHECK(lr_at(c, 5000) == 0.0);
  TrainConfig sq = c;
  sq.poly_power = 2.0;
  CHECK(lr_at(sq, 600) == doctest::Approx(0.25));
}

TEST_CASE("schedule resolution and validation") {
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 4;
  const TrainConfig r = c.resolved(10);
  CHECK(r.total_steps == 15);
  CHECK(r.warmup_steps == 1);
  CHECK_THROWS_AS(schedule(10, 10).validate(), ValidationError);
  TrainConfig bad = schedule(1, 10);
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("AdamW matches a hand-written reference") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01;
  TrainConfig cfg;
  cfg.beta1 = b1;
  cfg.beta2 = b2;
  cfg.eps = eps;
  cfg.weight_decay = wd;
  std::vector<double> p = {1.0, -0.5}, m = {0, 0}, v = {0, 0};
  const double grads[3][2] = {{0.5, -1.0}, {0.25, 2.0}, {-0.75, 0.1}};
  double rp[2] = {1.0, -0.5}, rm[2] = {0, 0}, rv[2] = {0, 0};
  for (int t = 1; t <= 3; ++t) {
    adamw_update(p, grads[t - 1], m, v, lr, cfg, t);
    for (int i = 0; i < 2; ++i) {
      const double g = grads[t - 1][i];
      rm[i] = b1 * rm[i] + (1 - b1) * g;
      rv[i] = b2 * rv[i] + (1 - b2) * g * g;
      const double mh = rm[i] / (1 - std::pow(b1, t));
      const double vh = rv[i] / (1 - std::pow(b2, t));
      rp[i] = rp[i] * (1 - lr * wd) - lr * mh / (std::sqrt(vh) + eps);
      CHECK(std::abs(p[i] - rp[i]) < 1e-12);
    }
  }
  // First step moves each weight by about lr against the gradient sign.
  std::vector<double> q = {0.0, 0.0}, mq = {0, 0}, vq = {0, 0};
  const double g0[] = {3.0, -1e-3};
  adamw_update(q, g0, mq, vq, lr, cfg, 1);
  CHECK(q[0] == doctest::Approx(-lr).epsilon(1e-6));
  CHECK(q[1] == doctest::Approx(lr).epsilon(1e-4));
}

TEST_CASE("AdamW rejects non-finite gradients") {
  TrainConfig cfg;
  std::vector<double> p = {1.0}, m = {0}, v = {0};
  const double g[] = {std::nan("")};
  CHECK_THROWS_AS(adamw_update(p, g, m, v, 0.1, cfg, 1, "w"), NumericError);
  CHECK(p[0] == 1.0);
}
