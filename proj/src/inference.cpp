#include "adrf/inference.hpp"

#include "adrf/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace adrf {

Vector
influence_values(const ObservedSample& sample,
                 const KernelTable& kernel_h,
                 const KernelTable& kernel_h0,
                 double t,
                 const PlugIns& plug)
{
  const Index n = sample.size();
  require(plug.pi.size() == n && plug.m.size() == n, "plug-in vectors must match the sample size");
  const double h = kernel_h.bandwidth();
  const double h0 = kernel_h0.bandwidth();
  Vector kh(n);
  Vector kh0(n);
  for (Index i = 0; i < n; ++i) {
    kh(i) = kernel_h.weight(t, sample.s(i)) / h;
    kh0(i) = kernel_h0.weight(t, sample.s(i)) / h0;
  }
  const Vector a = plug.pi.cwiseProduct(sample.y).cwiseProduct(kh);
  const Vector c = plug.m.cwiseProduct(plug.pi).cwiseProduct(kh0);
  const Vector phi = (a.array() - a.mean()) - plug.mu * (kh.array() - kh.mean());
  const Vector psi = plug.mu * (kh0.array() - kh0.mean()) - (c.array() - c.mean());
  return phi + psi;
}

Vector
influence_values(const ObservedSample& sample, const SmoothingParams& params, double t, const PlugIns& plug)
{
  params.validate();
  const KernelTable kh = make_kernel_table(sample.error, params.h);
  const KernelTable kh0 = make_kernel_table(sample.error, params.h0);
  return influence_values(sample, kh, kh0, t, plug);
}

double
normal_critical_value(double alpha)
{
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - 0.5 * alpha);
}

CiBand
ci_pointwise(const ObservedSample& sample,
             const SmoothingParams& params,
             const EstimatorOptions& options,
             const Eigen::Ref<const Vector>& grid,
             double alpha)
{
  const double z = normal_critical_value(alpha);
  sample.validate();
  params.validate();
  const Index n = sample.size();
  const double factor = std::pow(static_cast<double>(n), -0.1);

  SmoothingParams us = params;
  us.h = params.h * factor;
  us.h0 = params.h0 * factor;
  const AdrfEstimator estimator(sample, us, options);
  const KernelTable& kh = estimator.regression_kernel();
  const KernelTable& kh0 = estimator.weight_kernel();
  const Matrix& u = estimator.basis();

  CiBand band;
  band.grid = grid;
  band.alpha = alpha;
  band.undersmooth_factor = factor;
  const Index g = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  band.mu = Vector::Constant(g, nan);
  band.lo = Vector::Constant(g, nan);
  band.hi = Vector::Constant(g, nan);
  band.variance = Vector::Constant(g, nan);
  std::vector<char> skipped(static_cast<std::size_t>(g), 0);
  std::vector<char> degenerate(static_cast<std::size_t>(g), 0);

  parallel_for(static_cast<std::size_t>(g), options.threads, [&](std::size_t k) {
    const auto idx = static_cast<Index>(k);
    const double t = grid(idx);
    PlugIns plug;
    try {
      plug.pi = estimator.weights(estimator.fit_weights(t));
      plug.mu = estimator.regress(t, plug.pi);
      plug.m = u * estimator.outcome_coefficients(t);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllWeightsZero) {
        throw;
      }
      skipped[k] = 1;
      return;
    }
    const Vector eta = influence_values(sample, kh, kh0, t, plug);
    double f = 0.0;
    for (Index i = 0; i < n; ++i) {
      f += kh.weight(t, sample.s(i));
    }
    f /= static_cast<double>(n) * kh.bandwidth();
    const double nf = static_cast<double>(n) * std::max(f, 1e-10);
    const double v = (eta.array() - eta.mean()).square().sum() / (nf * nf);
    // Snap centre and half-width to a common power-of-two lattice so that
    // mu +- half and both differences are exact: hi - mu == mu - lo.
    double half = z * std::sqrt(v);
    double mu = plug.mu;
    if (std::isfinite(half) && std::isfinite(mu) && (half > 0.0 || mu != 0.0)) {
      const double q = std::ldexp(1.0, std::ilogb(4.0 * (std::abs(mu) + half)) - 52);
      mu = std::nearbyint(mu / q) * q;
      half = std::nearbyint(half / q) * q;
    }
    band.mu(idx) = mu;
    band.variance(idx) = v;
    band.lo(idx) = mu - half;
    band.hi(idx) = mu + half;
    if (v == 0.0) {
      degenerate[k] = 1;
    }
  });
  for (Index i = 0; i < g; ++i) {
    if (skipped[static_cast<std::size_t>(i)]) {
      band.skipped.push_back(i);
    }
    if (degenerate[static_cast<std::size_t>(i)]) {
      band.degenerate.push_back(i);
    }
  }
  return band;
}

} // namespace adrf
