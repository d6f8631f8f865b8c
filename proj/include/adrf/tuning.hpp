#pragma once

#include "adrf/adrf_estimator.hpp"
#include "adrf/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adrf {

//! n log-spaced values on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

//! Normal-reference AMISE of the deconvolution density estimator at h.
double density_amise(double h, Index n, double var_t, const ErrorModel& error);

struct PlugInConfig
{
  double lo = 0.01; // multiples of sd(T)
  double hi = 5.0;
  int points = 401;
};

//! Minimiser of density_amise over a log grid of bandwidths.
//! @throws Error(NoiseExceedsSignal) if var(s) <= error variance.
double plug_in_bandwidth(const Eigen::Ref<const Vector>& s,
                         const ErrorModel& error,
                         const PlugInConfig& config = {});

struct KSelectConfig
{
  std::vector<double> c_grid = log_grid(0.01, 2.0, 12);
  Index t_points = 20;
  double trim_lo = 0.05;
  double trim_hi = 0.95;
};

struct KSelection
{
  int K = 2;
  double c_tilde = 0.0;
  std::vector<double> c_grid;
  std::vector<int> k_values;
  std::vector<double> gcv; // +inf where every grid point was skipped
};

//! K(c) = max(2, floor(c h_pi^-2 log(h_pi + 1))), capped at floor(N / 10).
int k_from_c(double c, double h_pi, Index n);

//! Generalised CV choice of K. Ties go to the smaller c.
//! @throws Error(NotConverged) if every c leaves all grid points skipped.
KSelection select_k(const ObservedSample& sample,
                    double h_pi,
                    const EstimatorOptions& options,
                    const KSelectConfig& config = {});

struct SimexConfig
{
  int D = 35;
  std::vector<double> h_grid = log_grid(0.2, 5.0, 40); // multiples of h_pi
  double trim_lo = 0.05;
  double trim_hi = 0.95;
  std::uint64_t seed = 1;
  std::vector<double> b_grid = log_grid(0.02, 2.0, 20); // multiples of h_pi

  void validate() const;
};

//! Reads key = value lines (keys D, h_grid_min, h_grid_max, h_grid_n,
//! trim_lo, trim_hi, seed, b_grid as a comma list). '#' starts a comment.
//! @throws Error(MalformedInput)
SimexConfig read_simex_config(const std::string& path, SimexConfig base = {});


//! SIMEX bandwidth with local-constant extrapolation.
SimexDiagnostics simex_select_h(const ObservedSample& sample,
                                double h_pi,
                                int K,
                                const EstimatorOptions& options,
                                const SimexConfig& config = {});

//! Local-constant extrapolant sum h*_d phi((x - h**_d)/b) / sum phi(.).
double local_constant_extrapolate(const std::vector<double>& h_star,
                                  const std::vector<double>& h_star_star,
                                  double x,
                                  double b);

//! Leave-one-out CV choice of b; returns NaN if no b gives finite CV.
double select_extrapolation_bandwidth(const std::vector<double>& h_star,
                                      const std::vector<double>& h_star_star,
                                      const std::vector<double>& b_values);

struct TuneConfig
{
  PlugInConfig plug_in;
  KSelectConfig k_select;
  SimexConfig simex;
};

//! h0 = h_PI, K by generalised CV, h by SIMEX.
SmoothingParams two_step_tune(const ObservedSample& sample,
                              const EstimatorOptions& options,
                              const TuneConfig& config = {});

} // namespace adrf
