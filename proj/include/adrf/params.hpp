#pragma once

#include "adrf/gel_weights.hpp"
#include "adrf/sieve_basis.hpp"
#include "adrf/types.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace adrf {

//! Output of the SIMEX bandwidth search.
struct SimexDiagnostics
{
  std::vector<double> h_star;      // per-replicate minimisers of CV*_d
  std::vector<double> h_star_star; // per-replicate minimisers of CV**_d
  double h_hat_star = 0.0;         // minimiser of the averaged CV*
  double h_hat_star_star = 0.0;    // minimiser of the averaged CV**
  double linear_back = 0.0;        // (h_hat_star)^2 / h_hat_star_star
  double extrapolation_bandwidth = 0.0;
  bool extrapolation_degenerate = false;
  double h_hat = 0.0;
  std::vector<double> h_grid;
  std::vector<double> cv_star_mean;
  std::vector<double> cv_star_star_mean;
};

enum class ParamsProvenance
{
  Manual,
  TwoStep,
};

//! The three smoothing parameters of the estimator.
struct SmoothingParams
{
  int K = 3;
  double h0 = 0.0;
  double h = 0.0;
  ParamsProvenance provenance = ParamsProvenance::Manual;
  double h_pi = std::numeric_limits<double>::quiet_NaN();
  double c_tilde = std::numeric_limits<double>::quiet_NaN();
  std::optional<SimexDiagnostics> simex;

  void validate() const;
};

//! Kernel of the final local-constant regression stage.
enum class RegressionKernel
{
  Deconvolution,   // L_U at bandwidth h
  GaussianDensity, // standard normal density, used by the naive comparator
};

struct EstimatorOptions
{
  GelCriterion criterion{ CriterionKind::ExponentialTilting };
  BasisFamily basis = BasisFamily::PowerSeries;
  int spline_degree = 3;
  RegressionKernel regression_kernel = RegressionKernel::Deconvolution;
  SolverOptions solver{};
  unsigned threads = 1;
};

} // namespace adrf
