#include "adrf/random.hpp"
#include "adrf/sieve_basis.hpp"
#include "doctest.h"

#include <cmath>
#include <random>

using namespace adrf;

namespace {

Matrix
column(std::initializer_list<double> values)
{
  Matrix m(values.size(), 1);
  Index i = 0;
  for (double v : values) {
    m(i++, 0) = v;
  }
  return m;
}

// Plain recursive Cox-de Boor on a clamped uniform knot vector.
double
cox_de_boor(const std::vector<double>& knots, int i, int p, double x)
{
  if (p == 0) {
    const bool last = knots[i + 1] == 1.0 && x == 1.0 && knots[i] < 1.0;
    return (knots[i] <= x && x < knots[i + 1]) || last ? 1.0 : 0.0;
  }
  double out = 0.0;
  const double d1 = knots[i + p] - knots[i];
  const double d2 = knots[i + p + 1] - knots[i + 1];
  if (d1 > 0.0) {
    out += (x - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, x);
  }
  if (d2 > 0.0) {
    out += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, i + 1, p - 1, x);
  }
  return out;
}

} // namespace

TEST_CASE("scaler maps onto the unit interval")
{
  const auto sc = fit_scaler(column({ 0.3, 0.7 }));
  CHECK(sc.lo()(0) == 0.3);
  CHECK(sc.hi()(0) == 0.7);
  const Matrix z = sc.transform(column({ 0.5, 0.9, 0.1, 0.3, 0.7 }));
  CHECK(z(0, 0) == doctest::Approx(0.5));
  CHECK(z(1, 0) == 1.0);
  CHECK(z(2, 0) == 0.0);
  CHECK(z(3, 0) == 0.0);
  CHECK(z(4, 0) == 1.0);
}

TEST_CASE("constant covariate is rejected")
{
  Matrix x(3, 2);
  x << 0.1, 0.4, 0.2, 0.4, 0.3, 0.4;
  try {
    fit_scaler(x);
    FAIL("expected DegenerateCovariate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateCovariate);
  }
}

TEST_CASE("training data scale into the unit cube")
{
  Rng rng(4);
  std::normal_distribution<double> nd(2.0, 3.0);
  Matrix x(200, 3);
  for (Index i = 0; i < x.size(); ++i) {
    x.data()[i] = nd(rng);
  }
  const Matrix z = fit_scaler(x).transform(x);
  CHECK(z.minCoeff() == 0.0);
  CHECK(z.maxCoeff() == 1.0);
}

TEST_CASE("univariate power series")
{
  const auto sc = fit_scaler(column({ 0.0, 1.0 }));
  BasisSpec spec;
  spec.K = 3;
  const Matrix u = evaluate_basis(spec, sc, column({ 0.5 }));
  CHECK(u(0, 0) == 1.0);
  CHECK(u(0, 1) == 0.5);
  CHECK(u(0, 2) == 0.25);
}

TEST_CASE("bivariate power series uses graded-lex order")
{
  Matrix x(3, 2);
  x << 0.0, 0.0, 1.0, 1.0, 0.3, 0.8;
  const auto sc = fit_scaler(x);
  BasisSpec spec;
  spec.K = 7;
  spec.covariate_dim = 2;
  const Matrix u = evaluate_basis(spec, sc, x.row(2));
  const double a = 0.3, b = 0.8;
  const std::vector<double> expected{ 1.0, a, b, a * a, a * b, b * b, a * a * a };
  for (int k = 0; k < 7; ++k) {
    CHECK(u(0, k) == doctest::Approx(expected[k]).epsilon(1e-14));
  }
  spec.K = 4;
  const Matrix u4 = evaluate_basis(spec, sc, x.row(2));
  CHECK(u4.cols() == 4);
  CHECK(u4(0, 3) == doctest::Approx(a * a));
}

TEST_CASE("power series degree cap")
{
  const auto sc = fit_scaler(column({ 0.0, 1.0 }));
  BasisSpec spec;
  spec.K = 21;
  CHECK_NOTHROW(evaluate_basis(spec, sc, column({ 0.5 })));
  spec.K = 22;
  try {
    evaluate_basis(spec, sc, column({ 0.5 }));
    FAIL("expected BasisOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BasisOverflow);
  }
}

TEST_CASE("B-spline block matches recursive Cox-de Boor")
{
  for (int degree : { 1, 2, 3 }) {
    for (int n : { degree + 1, degree + 3, 9 }) {
      std::vector<double> knots(degree + 1, 0.0);
      const int interior = n - degree - 1;
      for (int k = 1; k <= interior; ++k) {
        knots.push_back(static_cast<double>(k) / (interior + 1));
      }
      knots.insert(knots.end(), degree + 1, 1.0);
      const Vector x = Vector::LinSpaced(101, 0.0, 1.0);
      const Matrix b = bspline_block(x, n, degree);
      for (Index i = 0; i < x.size(); ++i) {
        for (int j = 0; j < n; ++j) {
          CHECK(b(i, j) == doctest::Approx(cox_de_boor(knots, j, degree, x(i))).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("B-spline partition of unity and bounds")
{
  Rng rng(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(500);
  for (Index i = 0; i < x.size(); ++i) {
    x(i) = unif(rng);
  }
  x(0) = 0.0;
  x(1) = 1.0;
  const Matrix b = bspline_block(x, 6, 3);
  for (Index i = 0; i < x.size(); ++i) {
    CHECK(std::abs(b.row(i).sum() - 1.0) <= 1e-12);
  }
  CHECK(b.minCoeff() >= 0.0);
  CHECK(b.maxCoeff() <= 1.0);
}

TEST_CASE("B-spline basis has a constant first column")
{
  Matrix x(50, 2);
  Rng rng(2);
  std::uniform_real_distribution<double> unif(-1.0, 3.0);
  for (Index i = 0; i < x.size(); ++i) {
    x.data()[i] = unif(rng);
  }
  const auto sc = fit_scaler(x);
  BasisSpec spec;
  spec.family = BasisFamily::BSpline;
  spec.K = 9;
  spec.covariate_dim = 2;
  const Matrix u = evaluate_basis(spec, sc, x);
  CHECK(u.cols() == 9);
  CHECK((u.col(0).array() == 1.0).all());
  CHECK(u.cwiseAbs().maxCoeff() <= 1.0);
  // columns 1..4 are the first block, 5..8 the second block's leading functions
  const Matrix block2 = bspline_block(sc.transform(x).col(1), 5, 3);
  CHECK((u.middleCols(5, 4) - block2.leftCols(4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("univariate B-spline rows at zero")
{
  const auto sc = fit_scaler(column({ 0.0, 1.0 }));
  BasisSpec spec;
  spec.family = BasisFamily::BSpline;
  spec.K = 6;
  const Matrix block = bspline_block(Vector::Zero(1), 6, 3);
  CHECK(block.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix u = evaluate_basis(spec, sc, column({ 0.0 }));
  CHECK(u(0, 0) == 1.0);
  CHECK(u.row(0).tail(5).sum() == doctest::Approx(0.0));
}

TEST_CASE("power series bounded on the unit cube")
{
  Matrix x(100, 2);
  Rng rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < x.size(); ++i) {
    x.data()[i] = unif(rng);
  }
  BasisSpec spec;
  spec.K = 15;
  spec.covariate_dim = 2;
  const Matrix u = evaluate_basis(spec, fit_scaler(x), x);
  CHECK(u.cwiseAbs().maxCoeff() <= 1.0);
  CHECK((u.col(0).array() == 1.0).all());
}

TEST_CASE("spec validation")
{
  BasisSpec spec;
  spec.K = 1;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.K = 3;
  spec.family = BasisFamily::BSpline;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.K = 4;
  CHECK_NOTHROW(spec.validate());
  CHECK(basis_family_from_string("bspline") == BasisFamily::BSpline);
  CHECK(basis_family_from_string("power") == BasisFamily::PowerSeries);
  CHECK_THROWS_AS(basis_family_from_string("trig"), Error);
}
