#pragma once

#include "adrf/types.hpp"

#include <string>

namespace adrf {

enum class BasisFamily
{
  PowerSeries,
  BSpline,
};

const char* to_string(BasisFamily family);
BasisFamily basis_family_from_string(const std::string& name);

struct BasisSpec
{
  BasisFamily family = BasisFamily::PowerSeries;
  int K = 3;
  int spline_degree = 3;
  int covariate_dim = 1;

  void validate() const;
};

//! Columnwise affine map of the covariates onto [0, 1].
class CovariateScaler
{
public:
  CovariateScaler() = default;
  CovariateScaler(Vector lo, Vector hi);

  //! Scaled copy of x; values outside the training range are clamped.
  Matrix transform(const Eigen::Ref<const Matrix>& x) const;

  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  Index dim() const { return lo_.size(); }

private:
  Vector lo_;
  Vector hi_;
};

//! @throws Error(DegenerateCovariate) if a column is constant.
CovariateScaler fit_scaler(const Eigen::Ref<const Matrix>& x);

//! Degree `degree` B-spline basis on [0, 1] with uniform interior knots;
//! returns an N x n_functions matrix whose rows sum to one.
Matrix bspline_block(const Eigen::Ref<const Vector>& x, int n_functions, int degree);

//! Basis matrix u_K(x_i) (N x K) of scaled covariates. Column 0 is the
//! constant 1.
//! @throws Error(BasisOverflow) if a power series needs degree > 20.
Matrix evaluate_basis(const BasisSpec& spec,
                      const CovariateScaler& scaler,
                      const Eigen::Ref<const Matrix>& x);

} // namespace adrf
