#include "adrf/adrf_estimator.hpp"

#include "adrf/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace adrf {

namespace {

KernelTable
regression_table(const ObservedSample& sample, double h, RegressionKernel kind)
{
  if (kind == RegressionKernel::GaussianDensity) {
    return KernelTable::gaussian_density(h);
  }
  return make_kernel_table(sample.error, h);
}

BasisSpec
basis_spec_for(const SmoothingParams& params, const EstimatorOptions& options, Index dim)
{
  BasisSpec spec;
  spec.family = options.basis;
  spec.K = params.K;
  spec.spline_degree = options.spline_degree;
  spec.covariate_dim = static_cast<int>(dim);
  return spec;
}

} // namespace

void
ObservedSample::validate() const
{
  require(s.size() >= 2, "sample needs at least two observations");
  require(x.rows() == s.size() && y.size() == s.size(), "S, X and Y must have equal lengths");
  require(x.cols() >= 1, "sample needs at least one covariate");
  require(s.allFinite() && x.allFinite() && y.allFinite(), "sample contains non-finite entries");
}

void
SmoothingParams::validate() const
{
  require(K >= 2, "K must be at least 2");
  require(std::isfinite(h0) && h0 > 0.0, "h0 must be positive");
  require(std::isfinite(h) && h > 0.0, "h must be positive");
}

bool
AdrfCurve::is_skipped(Index i) const
{
  return std::find(skipped.begin(), skipped.end(), i) != skipped.end();
}

AdrfEstimator::AdrfEstimator(const ObservedSample& sample, SmoothingParams params, EstimatorOptions options)
  : sample_(sample)
  , params_(std::move(params))
  , options_(options)
  , spec_(basis_spec_for(params_, options_, sample.covariate_dim()))
  , scaler_(fit_scaler(sample.x))
  , solver_(evaluate_basis(spec_, scaler_, sample.x), options_.criterion, options_.solver)
  , weight_kernel_(make_kernel_table(sample.error, params_.h0))
  , regression_kernel_(regression_table(sample, params_.h, options_.regression_kernel))
{
  sample_.validate();
  params_.validate();
}

WeightFit
AdrfEstimator::fit_weights(double t) const
{
  const Vector w = kernel_weights(weight_kernel_, t, sample_.s, true);
  WeightFit fit = solver_.fit(w);
  fit.t = t;
  return fit;
}

double
AdrfEstimator::regress(double t, const Eigen::Ref<const Vector>& pi) const
{
  return regress(t, pi, sample_.y);
}

double
AdrfEstimator::regress(double t, const Eigen::Ref<const Vector>& pi, const Eigen::Ref<const Vector>& y) const
{
  double num = 0.0;
  double den = 0.0;
  for (Index i = 0; i < sample_.size(); ++i) {
    const double k = regression_kernel_.weight(t, sample_.s(i));
    num += pi(i) * y(i) * k;
    den += k;
  }
  if (den == 0.0) {
    throw Error(ErrorCode::AllWeightsZero, "regression kernel has no mass at t = " + std::to_string(t));
  }
  return num / den;
}

AdrfCurve
AdrfEstimator::curve(const Eigen::Ref<const Vector>& grid) const
{
  AdrfCurve out;
  out.grid = grid;
  out.mu = Vector::Constant(grid.size(), std::numeric_limits<double>::quiet_NaN());
  out.params = params_;
  std::vector<char> skipped(grid.size(), 0);
  std::vector<char> converged(grid.size(), 0);
  parallel_for(static_cast<std::size_t>(grid.size()), options_.threads, [&](std::size_t k) {
    const auto i = static_cast<Index>(k);
    try {
      const WeightFit fit = fit_weights(grid(i));
      converged[k] = fit.converged ? 1 : 0;
      out.mu(i) = regress(grid(i), weights(fit));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllWeightsZero) {
        throw;
      }
      skipped[k] = 1;
    }
  });
  for (Index i = 0; i < grid.size(); ++i) {
    if (skipped[i]) {
      out.skipped.push_back(i);
    }
    out.converged.push_back(converged[i] != 0);
  }
  return out;
}

Vector
AdrfEstimator::outcome_coefficients(double t) const
{
  // raw (unnormalised) kernel weights: the ridge is small against their sum
  const Vector w = kernel_weights(weight_kernel_, t, sample_.s, true);
  const Matrix& u = solver_.basis();
  Matrix gram = u.transpose() * w.asDiagonal() * u;
  gram.diagonal().array() += 1e-8;
  return gram.ldlt().solve(u.transpose() * w.cwiseProduct(sample_.y));
}

AdrfCurve
mu_hat(const ObservedSample& sample,
       const SmoothingParams& params,
       const EstimatorOptions& options,
       const Eigen::Ref<const Vector>& grid)
{
  return AdrfEstimator(sample, params, options).curve(grid);
}

AdrfCurve
mu_oracle(const ObservedSample& sample,
          const WeightFunction& pi0,
          double h,
          const Eigen::Ref<const Vector>& grid,
          unsigned threads)
{
  sample.validate();
  const KernelTable kernel = make_kernel_table(sample.error, h);
  AdrfCurve out;
  out.grid = grid;
  out.mu = Vector::Constant(grid.size(), std::numeric_limits<double>::quiet_NaN());
  out.params.h = h;
  out.params.h0 = h;
  std::vector<char> skipped(grid.size(), 0);
  parallel_for(static_cast<std::size_t>(grid.size()), threads, [&](std::size_t k) {
    const double t = grid(static_cast<Index>(k));
    double num = 0.0;
    double den = 0.0;
    for (Index i = 0; i < sample.size(); ++i) {
      const double w = kernel.weight(t, sample.s(i));
      if (w != 0.0) {
        num += pi0(t, sample.x.row(i).transpose()) * sample.y(i) * w;
        den += w;
      }
    }
    if (den == 0.0) {
      skipped[k] = 1;
    } else {
      out.mu(static_cast<Index>(k)) = num / den;
    }
  });
  for (Index i = 0; i < grid.size(); ++i) {
    if (skipped[i]) {
      out.skipped.push_back(i);
    }
    out.converged.push_back(!skipped[i]);
  }
  return out;
}

ObservedSample
as_error_free(const ObservedSample& sample)
{
  ObservedSample out = sample;
  out.error = ErrorModel::none();
  return out;
}

EstimatorOptions
naive_options(EstimatorOptions options)
{
  options.regression_kernel = RegressionKernel::GaussianDensity;
  return options;
}

AdrfCurve
naive_mu(const ObservedSample& sample,
         const SmoothingParams& params,
         const EstimatorOptions& options,
         const Eigen::Ref<const Vector>& grid)
{
  return mu_hat(as_error_free(sample), params, naive_options(options), grid);
}

OutcomeRegression::OutcomeRegression(Vector gamma, BasisSpec spec, CovariateScaler scaler)
  : gamma_(std::move(gamma))
  , spec_(spec)
  , scaler_(std::move(scaler))
{}

double
OutcomeRegression::operator()(const Eigen::Ref<const Vector>& x) const
{
  Matrix row = x.transpose();
  return (evaluate_basis(spec_, scaler_, row) * gamma_)(0);
}

Vector
OutcomeRegression::at(const Eigen::Ref<const Matrix>& x) const
{
  return evaluate_basis(spec_, scaler_, x) * gamma_;
}

OutcomeRegression
m_hat(const ObservedSample& sample, const SmoothingParams& params, const EstimatorOptions& options, double t)
{
  const AdrfEstimator estimator(sample, params, options);
  return OutcomeRegression(estimator.outcome_coefficients(t), estimator.basis_spec(), estimator.scaler());
}

Vector
f_t_hat(const ObservedSample& sample, double h, const Eigen::Ref<const Vector>& grid)
{
  require(h > 0.0, "f_t_hat: bandwidth must be positive");
  const KernelTable kernel = make_kernel_table(sample.error, h);
  Vector f(grid.size());
  const double scale = 1.0 / (static_cast<double>(sample.size()) * h);
  for (Index k = 0; k < grid.size(); ++k) {
    double sum = 0.0;
    for (Index i = 0; i < sample.size(); ++i) {
      sum += kernel.weight(grid(k), sample.s(i));
    }
    f(k) = sum * scale;
  }
  return f;
}

Vector
linspace(double lo, double hi, Index n)
{
  require(n >= 2, "linspace needs at least two points");
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    out(i) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out(n - 1) = hi;
  return out;
}

double
quantile(Vector values, double p)
{
  require(values.size() > 0, "quantile of an empty vector");
  require(p >= 0.0 && p <= 1.0, "quantile level must be in [0, 1]");
  std::sort(values.data(), values.data() + values.size());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Index>(std::floor(pos));
  const Index hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values(lo) + frac * (values(hi) - values(lo));
}

} // namespace adrf
