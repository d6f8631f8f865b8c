#pragma once

#include "adrf/adrf_estimator.hpp"

#include <vector>

namespace adrf {

//! Plug-in quantities at a fixed t, indexed by observation.
struct PlugIns
{
  Vector pi; // pi_hat(t, X_i)
  double mu = 0.0;
  Vector m; // m_hat(t, X_i)
};

//! Empirical influence values eta_i = phi_i + psi_i at t, with population
//! means replaced by sample means and L_{U,b}(v) = L_U(v / b) / b.
Vector influence_values(const ObservedSample& sample,
                        const KernelTable& kernel_h,
                        const KernelTable& kernel_h0,
                        double t,
                        const PlugIns& plug);

//! Convenience overload building both kernels from sample.error.
Vector influence_values(const ObservedSample& sample, const SmoothingParams& params, double t, const PlugIns& plug);

//! Pointwise normal-approximation band on a grid.
struct CiBand
{
  Vector grid;
  Vector mu;
  Vector lo;
  Vector hi;
  Vector variance;
  double alpha = 0.05;
  double undersmooth_factor = 1.0;
  std::vector<Index> skipped;
  std::vector<Index> degenerate; // points with zero estimated variance
};

//! Two-sided standard normal critical value z_{1 - alpha/2}.
double normal_critical_value(double alpha);

//! Undersmoothed pointwise interval: both bandwidths scaled by N^(-1/10).
//! @throws Error(InvalidArgument) unless 0 < alpha < 1.
CiBand ci_pointwise(const ObservedSample& sample,
                    const SmoothingParams& params,
                    const EstimatorOptions& options,
                    const Eigen::Ref<const Vector>& grid,
                    double alpha = 0.05);

} // namespace adrf
