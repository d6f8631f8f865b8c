#pragma once

#include "adrf/deconv_kernel.hpp"
#include "adrf/error_model.hpp"
#include "adrf/gel_weights.hpp"
#include "adrf/params.hpp"
#include "adrf/sieve_basis.hpp"

#include <functional>
#include <vector>

namespace adrf {

//! i.i.d. sample (S, X, Y) with S = T + U observed instead of T.
struct ObservedSample
{
  Vector s;
  Matrix x;
  Vector y;
  ErrorModel error = ErrorModel::none();

  Index size() const { return s.size(); }
  Index covariate_dim() const { return x.cols(); }
  void validate() const;
};

//! Estimated curve on a grid of treatment values.
struct AdrfCurve
{
  Vector grid;
  Vector mu;
  std::vector<Index> skipped;
  std::vector<bool> converged; // per grid point weight-fit flag
  SmoothingParams params;

  bool is_skipped(Index i) const;
};

//! Shared state for estimating mu(t) at many t: scaled basis, GEL solver and
//! kernel tables for h0 (weights) and h (regression).
class AdrfEstimator
{
public:
  AdrfEstimator(const ObservedSample& sample, SmoothingParams params, EstimatorOptions options);

  //! GEL fit at t with the truncated h0 kernel.
  //! @throws Error(AllWeightsZero)
  WeightFit fit_weights(double t) const;

  //! pi_hat(t, X_i) for all i from a fit.
  Vector weights(const WeightFit& fit) const { return solver_.weights(fit); }

  //! sum pi_i Y_i L_U((t-S_i)/h) / sum L_U((t-S_i)/h) (untruncated kernel).
  //! @throws Error(AllWeightsZero) if the denominator vanishes.
  double regress(double t, const Eigen::Ref<const Vector>& pi) const;
  //! Same ratio with an arbitrary response vector in place of Y.
  double regress(double t, const Eigen::Ref<const Vector>& pi, const Eigen::Ref<const Vector>& y) const;

  AdrfCurve curve(const Eigen::Ref<const Vector>& grid) const;

  //! Coefficients gamma_t of the outcome regression m_hat(t, x) = gamma_t' u_K(x).
  //! @throws Error(AllWeightsZero)
  Vector outcome_coefficients(double t) const;

  const Matrix& basis() const { return solver_.basis(); }
  const CovariateScaler& scaler() const { return scaler_; }
  const BasisSpec& basis_spec() const { return spec_; }
  const KernelTable& weight_kernel() const { return weight_kernel_; }
  const KernelTable& regression_kernel() const { return regression_kernel_; }
  const ObservedSample& sample() const { return sample_; }
  const SmoothingParams& params() const { return params_; }
  const EstimatorOptions& options() const { return options_; }

private:
  ObservedSample sample_;
  SmoothingParams params_;
  EstimatorOptions options_;
  BasisSpec spec_;
  CovariateScaler scaler_;
  GelSolver solver_;
  KernelTable weight_kernel_;
  KernelTable regression_kernel_;
};

//! Weighted deconvolution local-constant ADRF estimator.
AdrfCurve mu_hat(const ObservedSample& sample,
                 const SmoothingParams& params,
                 const EstimatorOptions& options,
                 const Eigen::Ref<const Vector>& grid);

//! Same estimator with known weights pi0(t, x).
using WeightFunction = std::function<double(double t, const Eigen::Ref<const Vector>& x)>;
AdrfCurve mu_oracle(const ObservedSample& sample,
                    const WeightFunction& pi0,
                    double h,
                    const Eigen::Ref<const Vector>& grid,
                    unsigned threads = 1);

//! Naive comparator: treats S as T (no deconvolution), GEL weights with the
//! base kernel and a Gaussian-density regression kernel.
ObservedSample as_error_free(const ObservedSample& sample);
EstimatorOptions naive_options(EstimatorOptions options);
AdrfCurve naive_mu(const ObservedSample& sample,
                   const SmoothingParams& params,
                   const EstimatorOptions& options,
                   const Eigen::Ref<const Vector>& grid);

//! m_hat(t, x) = gamma_t' u_K(x), kernel-weighted sieve least squares.
class OutcomeRegression
{
public:
  OutcomeRegression(Vector gamma, BasisSpec spec, CovariateScaler scaler);

  double operator()(const Eigen::Ref<const Vector>& x) const;
  Vector at(const Eigen::Ref<const Matrix>& x) const;
  const Vector& gamma() const { return gamma_; }

private:
  Vector gamma_;
  BasisSpec spec_;
  CovariateScaler scaler_;
};

//! @throws Error(AllWeightsZero)
OutcomeRegression m_hat(const ObservedSample& sample,
                        const SmoothingParams& params,
                        const EstimatorOptions& options,
                        double t);

//! Deconvolution kernel density estimate (N h)^{-1} sum L_U((t - S_i)/h).
Vector f_t_hat(const ObservedSample& sample, double h, const Eigen::Ref<const Vector>& grid);

//! Equispaced grid of n points on [lo, hi].
Vector linspace(double lo, double hi, Index n);

//! Empirical quantile (linear interpolation between order statistics).
double quantile(Vector values, double p);

} // namespace adrf
