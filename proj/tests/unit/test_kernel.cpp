#include "adrf/deconv_kernel.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace adrf;

namespace {

const double kL0 = 16.0 / (35.0 * std::numbers::pi);

double
max_abs_diff(const DeconvKernel& a, const DeconvKernel& b, double lo, double hi, int n)
{
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = lo + (hi - lo) * i / (n - 1);
    worst = std::max(worst, std::abs(a.value(v) - b.value(v)));
  }
  return worst;
}

} // namespace

TEST_CASE("phi_L support and normalisation")
{
  CHECK(phi_L(0.0) == 1.0);
  CHECK(phi_L(1.0) == 0.0);
  CHECK(phi_L(-1.5) == 0.0);
  CHECK(phi_L(0.5) == doctest::Approx(std::pow(0.75, 3)));
  CHECK(phi_L(-0.3) == phi_L(0.3));
}

TEST_CASE("base kernel at zero")
{
  const double oracle =
    oracle::adaptive_simpson([](double w) { return std::pow(1.0 - w * w, 3); }, 0.0, 1.0) / std::numbers::pi;
  CHECK(oracle == doctest::Approx(kL0).epsilon(1e-13));
  CHECK(base_kernel(0.0) == doctest::Approx(kL0).epsilon(1e-13));
}

TEST_CASE("base kernel is even")
{
  for (double a : { 0.1, 0.7, 2.5, 11.0, 40.3 }) {
    CHECK(base_kernel(-a) == base_kernel(a));
  }
}

TEST_CASE("base kernel integrates to one")
{
  double sum = 0.0;
  const double step = 0.01;
  for (int i = -20000; i <= 20000; ++i) {
    sum += base_kernel(i * step);
  }
  CHECK(std::abs(sum * step - 1.0) <= 1e-4);
}

TEST_CASE("base kernel matches an independent oscillatory oracle")
{
  for (double x : { 0.0, 0.3, 1.7, 5.0, 12.0, 33.0 }) {
    const double ref = oracle::cosine_transform(x, [](double) { return 1.0; });
    CHECK(std::abs(base_kernel(x) - ref) <= 1e-12);
  }
}

TEST_CASE("no-error kernel reduces to the base kernel")
{
  const DeconvKernel k(ErrorModel::none(), 0.37);
  CHECK(k.mode() == DeconvMode::PlainKernel);
  CHECK(k.value(0.0) == doctest::Approx(kL0).epsilon(1e-13));
  for (int i = -50; i <= 50; ++i) {
    const double v = 0.2 * i;
    CHECK(k.value(v) == base_kernel(v));
  }
}

TEST_CASE("laplace closed form agrees with quadrature")
{
  double worst = 0.0;
  for (double var : { 0.1, 0.25, 1.0 }) {
    for (double h : { 0.2, 0.5, 1.0 }) {
      const auto e = ErrorModel::laplace(var);
      const DeconvKernel closed(e, h);
      const DeconvKernel quad(e, h, {}, DeconvMode::QuadratureGeneric);
      CHECK(closed.mode() == DeconvMode::ClosedFormLaplace);
      worst = std::max(worst, max_abs_diff(closed, quad, -10.0, 10.0, 2001));
    }
  }
  CHECK(worst <= 1e-8);

  const DeconvKernel closed(ErrorModel::laplace(0.25), 0.5);
  const DeconvKernel quad(ErrorModel::laplace(0.25), 0.5, {}, DeconvMode::QuadratureGeneric);
  for (double v : { 0.0, 0.5, 1.0 }) {
    CHECK(std::abs(closed.value(v) - quad.value(v)) <= 1e-8);
  }
}

TEST_CASE("gaussian kernel matches a refined oracle")
{
  const double var = 0.2;
  const double h = 0.4;
  const DeconvKernel k(ErrorModel::gaussian(var), h);
  const double c = var / (2.0 * h * h);
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = -5.0 + 0.1 * i;
    const double ref = oracle::cosine_transform(v, [c](double w) { return std::exp(c * w * w); });
    worst = std::max(worst, std::abs(k.value(v) - ref));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("deconvolution kernels are even")
{
  const std::vector<DeconvKernel> kernels{
    DeconvKernel(ErrorModel::laplace(0.25), 0.3),
    DeconvKernel(ErrorModel::gaussian(0.2), 0.5),
    DeconvKernel(ErrorModel::none(), 0.5),
  };
  for (const auto& k : kernels) {
    for (int i = 0; i <= 100; ++i) {
      const double v = 0.2 * i;
      CHECK(std::abs(k.value(v) - k.value(-v)) <= 1e-12);
    }
  }
}

TEST_CASE("derivative matches finite differences")
{
  const DeconvKernel k(ErrorModel::gaussian(0.2), 0.5);
  for (double v : { -3.0, -0.4, 0.2, 1.1, 6.0 }) {
    const double fd = (k.value(v + 1e-5) - k.value(v - 1e-5)) / 2e-5;
    CHECK(k.derivative(v) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("gaussian exponent guard")
{
  CHECK_THROWS_AS(DeconvKernel(ErrorModel::gaussian(1.0), 0.02), Error);
  try {
    DeconvKernel(ErrorModel::gaussian(1.0), 0.02);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverflowRisk);
  }
  // sigma^2 / (2 h^2) = 625 is still allowed
  CHECK_NOTHROW(DeconvKernel(ErrorModel::gaussian(1.0), std::sqrt(1.0 / 1250.0)));
}

TEST_CASE("kernel table interpolates the kernel")
{
  const DeconvKernel k(ErrorModel::laplace(0.25), 0.4);
  const auto table = make_kernel_table(ErrorModel::laplace(0.25), 0.4);
  CHECK(table.bandwidth() == 0.4);
  CHECK(table.peak() == doctest::Approx(k.value(0.0)).epsilon(1e-12));
  for (double v : { -7.123, -0.005, 0.0, 0.333, 2.5, 19.99 }) {
    CHECK(std::abs(table(v) - k.value(v)) <= 1e-9);
  }
  CHECK(table(100.5) == 0.0);
}

TEST_CASE("conditional unbiasedness")
{
  struct Point
  {
    double t, t0;
  };
  const std::vector<Point> design{ { 0.0, 0.0 }, { 0.3, 0.0 }, { -0.5, 0.2 }, { 1.0, 0.4 }, { 0.1, -0.6 } };
  int seed = 11;
  for (const auto& e : { ErrorModel::laplace(0.25), ErrorModel::gaussian(0.2) }) {
    const double h = e.kind() == ErrorKind::Laplace ? 0.5 : 0.6;
    for (const auto& p : design) {
      const auto r = conditional_unbiasedness_check(e, h, p.t, p.t0, 200000, seed++);
      CHECK(r.target == doctest::Approx(base_kernel((p.t - p.t0) / h)));
      CHECK(std::abs(r.mc_mean - r.target) <= 3.0 * r.mc_se);
    }
  }

  const auto r = conditional_unbiasedness_check(ErrorModel::laplace(0.25), 0.5, 0.0, 0.0, 200000, 5);
  CHECK(std::abs(r.mc_mean - kL0) <= 3.0 * r.mc_se);

  const auto g = conditional_unbiasedness_check(ErrorModel::gaussian(0.2), 0.6, 0.3, 0.0, 200000, 6);
  CHECK(std::abs(g.mc_mean - base_kernel(0.5)) <= 3.0 * g.mc_se);

  const auto none = conditional_unbiasedness_check(ErrorModel::none(), 0.5, 0.3, 0.1, 10000, 1);
  CHECK(none.mc_se == 0.0);
  CHECK(none.mc_mean == base_kernel(0.4));
  CHECK(none.mc_mean == none.target);

  CHECK_THROWS_AS(conditional_unbiasedness_check(ErrorModel::none(), 0.5, 0.0, 0.0, 9999, 1), Error);
}

namespace {

Matrix
laplace_pairs(Index n, double var, std::uint64_t seed)
{
  Rng rng(seed);
  const auto e = ErrorModel::laplace(var);
  std::normal_distribution<double> t(0.0, 1.0);
  Matrix pairs(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double ti = t(rng);
    pairs(i, 0) = ti + e.draw(rng);
    pairs(i, 1) = ti + e.draw(rng);
  }
  return pairs;
}

double
cf_error(const ErrorModel& est, double var, double w_max = 10.0)
{
  double worst = 0.0;
  const int n = static_cast<int>(std::lround(w_max / 0.01));
  for (int i = -n; i <= n; ++i) {
    const double w = 0.01 * i;
    worst = std::max(worst, std::abs(est.cf(w) - 1.0 / (1.0 + 0.5 * var * w * w)));
  }
  return worst;
}

} // namespace

TEST_CASE("replicate characteristic function")
{
  SUBCASE("zero error")
  {
    Matrix pairs(60, 2);
    for (Index i = 0; i < 60; ++i) {
      pairs(i, 0) = pairs(i, 1) = 0.1 * i;
    }
    const auto e = estimate_cf_from_replicates(pairs);
    CHECK(e.kind() == ErrorKind::ReplicateEstimated);
    CHECK(!e.floor_applied());
    for (Index j = 0; j < e.cf_values().size(); ++j) {
      CHECK(e.cf_values()(j) == 1.0);
    }
    CHECK(e.cf(3.7) == 1.0);
    CHECK(e.variance() == 0.0);
  }

  SUBCASE("laplace pairs")
  {
    const auto e = estimate_cf_from_replicates(laplace_pairs(100000, 0.25, 3));
    CHECK(e.cf(0.0) == 1.0);
    CHECK(e.cf(-2.0) == e.cf(2.0));
    CHECK(cf_error(e, 0.25) <= 0.02);
    CHECK(e.variance() == doctest::Approx(0.25).epsilon(0.03));
    for (int i = 0; i <= 200; ++i) {
      CHECK(e.cf(0.1 * i) >= kReplicateRidgeFloor);
    }
  }

  SUBCASE("too few pairs")
  {
    try {
      estimate_cf_from_replicates(laplace_pairs(49, 0.25, 1));
      FAIL("expected an error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::InsufficientReplicates);
    }
    CHECK_NOTHROW(estimate_cf_from_replicates(laplace_pairs(50, 0.25, 1)));
  }
}

TEST_CASE("replicate estimator error shrinks with more pairs")
{
  // Median over seeds of the sup error at n and 4n pairs, on [-5, 5]: further
  // out phi^2 is comparable to the sampling noise and the square root slows
  // the rate.
  std::vector<double> small, large;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    small.push_back(cf_error(estimate_cf_from_replicates(laplace_pairs(25000, 0.25, 100 + seed)), 0.25, 5.0));
    large.push_back(cf_error(estimate_cf_from_replicates(laplace_pairs(100000, 0.25, 200 + seed)), 0.25, 5.0));
  }
  std::nth_element(small.begin(), small.begin() + 2, small.end());
  std::nth_element(large.begin(), large.begin() + 2, large.end());
  const double ratio = large[2] / small[2];
  MESSAGE("error ratio at 4x pairs: " << ratio);
  CHECK(ratio < 0.7);
  CHECK(ratio > 0.2);
}

TEST_CASE("kernel weights")
{
  Vector one(1);
  one << 0.42;
  const auto plain = make_kernel_table(ErrorModel::none(), 0.3);
  for (bool trunc : { false, true }) {
    const Vector w = kernel_weights(plain, 0.42, one, trunc);
    CHECK(w(0) == doctest::Approx(kL0).epsilon(1e-12));
  }

  const DeconvKernel k(ErrorModel::laplace(0.25), 0.3);
  Vector s = Vector::LinSpaced(81, -2.0, 2.0);
  const Vector raw = kernel_weights(k, 0.0, s, false);
  const Vector cut = kernel_weights(k, 0.0, s, true);
  CHECK(raw.minCoeff() < 0.0);
  CHECK(raw.size() == s.size());
  for (Index i = 0; i < s.size(); ++i) {
    CHECK(raw(i) == doctest::Approx(k.value(-s(i) / 0.3)).epsilon(1e-12));
    CHECK(cut(i) == std::max(0.0, raw(i)));
  }

  const auto table = make_kernel_table(ErrorModel::laplace(0.25), 0.3);
  Vector far = Vector::Constant(5, 40.0);
  try {
    kernel_weights(table, 0.0, far, true);
    FAIL("expected AllWeightsZero");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::AllWeightsZero);
  }
}
