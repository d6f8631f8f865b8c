#include "adrf/sieve_basis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace adrf {

namespace {

constexpr int kMaxPowerDegree = 20;

// Exponent vectors in graded-lexicographic order (x1 before x2 ...), first K.
std::vector<std::vector<int>>
graded_lex_exponents(int dim, int K)
{
  std::vector<std::vector<int>> out;
  out.emplace_back(dim, 0);
  for (int degree = 1; static_cast<int>(out.size()) < K; ++degree) {
    if (degree > kMaxPowerDegree) {
      throw Error(ErrorCode::BasisOverflow,
                  "power series needs degree above " + std::to_string(kMaxPowerDegree) +
                    " to reach K = " + std::to_string(K));
    }
    // enumerate compositions of `degree` into `dim` parts, lexicographically
    // descending in the leading exponent
    std::vector<int> e(dim, 0);
    auto recurse = [&](auto&& self, int pos, int remaining) -> void {
      if (static_cast<int>(out.size()) >= K) {
        return;
      }
      if (pos == dim - 1) {
        e[pos] = remaining;
        out.push_back(e);
        return;
      }
      for (int k = remaining; k >= 0; --k) {
        e[pos] = k;
        self(self, pos + 1, remaining - k);
      }
      e[pos] = 0;
    };
    recurse(recurse, 0, degree);
  }
  return out;
}

} // namespace

const char*
to_string(BasisFamily family)
{
  return family == BasisFamily::PowerSeries ? "power" : "bspline";
}

BasisFamily
basis_family_from_string(const std::string& name)
{
  if (name == "power") {
    return BasisFamily::PowerSeries;
  }
  if (name == "bspline") {
    return BasisFamily::BSpline;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown basis family '" + name + "'");
}

void
BasisSpec::validate() const
{
  require(K >= 2, "basis dimension K must be at least 2");
  require(covariate_dim >= 1, "covariate dimension must be at least 1");
  if (family == BasisFamily::BSpline) {
    require(spline_degree >= 0, "spline degree must be nonnegative");
    const int per_block = (K + covariate_dim - 1) / covariate_dim;
    require(per_block >= spline_degree + 1,
            "B-spline basis needs at least degree + 1 functions per covariate block");
  }
}

CovariateScaler::CovariateScaler(Vector lo, Vector hi)
  : lo_(std::move(lo))
  , hi_(std::move(hi))
{
  require(lo_.size() == hi_.size(), "scaler bounds must have equal length");
  for (Index j = 0; j < lo_.size(); ++j) {
    if (!(hi_(j) > lo_(j))) {
      throw Error(ErrorCode::DegenerateCovariate,
                  "covariate column " + std::to_string(j) + " is constant");
    }
  }
}

Matrix
CovariateScaler::transform(const Eigen::Ref<const Matrix>& x) const
{
  require(x.cols() == dim(), "covariate dimension does not match the scaler");
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double range = hi_(j) - lo_(j);
    for (Index i = 0; i < x.rows(); ++i) {
      out(i, j) = std::clamp((x(i, j) - lo_(j)) / range, 0.0, 1.0);
    }
  }
  return out;
}

CovariateScaler
fit_scaler(const Eigen::Ref<const Matrix>& x)
{
  require(x.rows() >= 2, "fit_scaler needs at least two rows");
  require(x.allFinite(), "covariates must be finite");
  return CovariateScaler(x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose());
}

Matrix
bspline_block(const Eigen::Ref<const Vector>& x, int n_functions, int degree)
{
  require(degree >= 0 && n_functions >= degree + 1,
          "bspline_block needs at least degree + 1 functions");
  const int n_interior = n_functions - degree - 1;
  // clamped knot vector: degree+1 copies of 0 and 1 around uniform interior knots
  std::vector<double> knots;
  for (int k = 0; k <= degree; ++k) {
    knots.push_back(0.0);
  }
  for (int k = 1; k <= n_interior; ++k) {
    knots.push_back(static_cast<double>(k) / (n_interior + 1));
  }
  for (int k = 0; k <= degree; ++k) {
    knots.push_back(1.0);
  }
  const int n_spans = n_interior + 1;

  Matrix out = Matrix::Zero(x.size(), n_functions);
  std::vector<double> basis(degree + 1);
  std::vector<double> left(degree + 1);
  std::vector<double> right(degree + 1);
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = std::clamp(x(i), 0.0, 1.0);
    int span = std::min(static_cast<int>(xi * n_spans), n_spans - 1);
    const int mu = span + degree; // knots[mu] <= xi < knots[mu + 1]
    // Cox-de Boor triangle for the degree+1 nonzero functions
    basis[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
      left[j] = xi - knots[mu + 1 - j];
      right[j] = knots[mu + j] - xi;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double denom = right[r + 1] + left[j - r];
        const double temp = denom > 0.0 ? basis[r] / denom : 0.0;
        basis[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      basis[j] = saved;
    }
    for (int r = 0; r <= degree; ++r) {
      out(i, span + r) = basis[r];
    }
  }
  return out;
}

Matrix
evaluate_basis(const BasisSpec& spec, const CovariateScaler& scaler, const Eigen::Ref<const Matrix>& x)
{
  spec.validate();
  require(spec.covariate_dim == x.cols(), "basis covariate_dim does not match the data");
  const Matrix z = scaler.transform(x);
  const Index n = z.rows();
  const int r = spec.covariate_dim;
  Matrix u(n, spec.K);

  if (spec.family == BasisFamily::PowerSeries) {
    const auto exponents = graded_lex_exponents(r, spec.K);
    for (Index i = 0; i < n; ++i) {
      for (int k = 0; k < spec.K; ++k) {
        double value = 1.0;
        for (int j = 0; j < r; ++j) {
          for (int p = 0; p < exponents[k][j]; ++p) {
            value *= z(i, j);
          }
        }
        u(i, k) = value;
      }
    }
    return u;
  }

  const int per_block = (spec.K + r - 1) / r;
  Matrix full(n, per_block * r);
  for (int j = 0; j < r; ++j) {
    full.middleCols(j * per_block, per_block) = bspline_block(z.col(j), per_block, spec.spline_degree);
  }
  u = full.leftCols(spec.K);
  u.col(0).setOnes();
  return u;
}

} // namespace adrf
