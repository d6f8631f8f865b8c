#pragma once

#include "adrf/adrf_estimator.hpp"
#include "adrf/quadrature.hpp"
#include "adrf/tuning.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace adrf {

//! var(U) / var(T) used for simulated errors.
inline constexpr double kLaplaceErrorRatio = 0.25;
inline constexpr double kGaussianErrorRatio = 0.2;

//! The four simulation designs. X is scalar, T = g(X) + xi_t with
//! xi_t ~ N(0, 1), and Y = Y*(T).
//!
//!   1  X = 0.3 + 0.4 xi,          g(x) = x,            Y*(t) = (t - 0.5)^2 + X + N(0, 1)
//!   2  X = 0.3 (xi_1 + xi_2),     g(x) = 1 + x^2,      Y*(t) = expit(6t - 6) + X + U(0, 1)
//!   3  X = 0.2 sum_10 xi_j,       g(x) = x,            Y*(t) = -t + sqrt(X) + U(0, 1)
//!   4  X = 0.2 + 0.6 xi,          g(x) = sqrt(x) - 0.7, Y*(t) = t + exp(X) + N(0, 1)
//!
//! Moments of X are computed by Gauss-Legendre quadrature over its exact law.
class SimModel
{
public:
  //! @throws Error(InvalidArgument) unless id is 1..4.
  explicit SimModel(int id);

  int id() const { return id_; }

  double draw_x(Rng& rng) const;
  double treatment_shift(double x) const;
  double draw_outcome(double t, double x, Rng& rng) const;

  double true_mu(double t) const;
  double var_t() const { return var_t_; }
  double t_cdf(double t) const;
  double t_quantile(double p) const;

  //! Expectation of f(X) under the law of X.
  double expect_x(const std::function<double(double)>& f) const;

  //! Stabilised weight f_T(t) / f_{T|X}(t|x), available for model 1 only.
  std::optional<WeightFunction> pi0() const;

private:
  int id_;
  GaussLegendre x_law_; // nodes and probability weights of X
  double mean_outcome_shift_ = 0.0; // E[X-term] + E[xi_y]
  double var_t_ = 0.0;
};

struct SimData
{
  ObservedSample sample;
  Vector t; // latent treatment
};

//! Error variance for a model: ratio * var(T).
ErrorModel simulation_error(const SimModel& model, ErrorKind kind);

//! @throws Error(InvalidArgument) for n < 50 or an unsupported error kind.
SimData generate(const SimModel& model, Index n, ErrorKind error_kind, std::uint64_t seed);

//! Integrated squared error over [q_lo, q_hi] by the trapezoid rule; skipped
//! points are filled by linear interpolation of their neighbours.
//! @throws Error(TooManySkipped) if more than 20% of in-range points are skipped.
double ise(const AdrfCurve& curve, const std::function<double(double)>& truth, double q_lo, double q_hi);

enum class EstimatorKind
{
  NvTuned,   // naive, two-step tuned on (S, X, Y) as if error free
  NvOptimal, // naive, ISE-optimal parameters
  CmOptimal, // deconvolution estimator, ISE-optimal (K, h0, h)
  CmTilde,   // tuned K and h0, ISE-optimal h
  CmTuned,   // fully tuned
  OraclePi,  // known weights, ISE-optimal h
};

const char* to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

//! Search grid for ISE-optimal parameters; bandwidths are multiples of h_PI.
struct OptimalGrid
{
  std::vector<int> K{ 2, 3, 4, 5 };
  std::vector<double> h0{ 0.5, 0.75, 1.0, 1.5, 2.0, 3.0 };
  std::vector<double> h = log_grid(0.1, 5.0, 25);
};

struct MonteCarloConfig
{
  std::vector<int> models{ 1 };
  std::vector<Index> sizes{ 250 };
  ErrorKind error_kind = ErrorKind::Laplace;
  std::vector<EstimatorKind> estimators{ EstimatorKind::NvOptimal, EstimatorKind::CmOptimal };
  int reps = 10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  Index grid_n = 201;
  EstimatorOptions options;
  TuneConfig tune;
  OptimalGrid optimal;

  void validate() const;
};

struct MonteCarloCell
{
  int model = 1;
  Index n = 0;
  EstimatorKind estimator = EstimatorKind::CmOptimal;
  std::vector<double> ise; // NaN where the replication failed
  std::vector<std::string> failures; // per replication, empty when fine
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double failure_rate = 0.0;
};

struct MonteCarloReport
{
  MonteCarloConfig config;
  std::vector<MonteCarloCell> cells;
  double runtime_seconds = 0.0;

  const MonteCarloCell& cell(int model, Index n, EstimatorKind estimator) const;
};

//! Seeded replication study; replications run in parallel and the result
//! does not depend on the thread count.
MonteCarloReport run_monte_carlo(const MonteCarloConfig& config);

//! ISE of one estimator on one simulated data set. Exposed for the tests.
double evaluate_estimator(EstimatorKind kind,
                          const SimModel& model,
                          const SimData& data,
                          const MonteCarloConfig& config,
                          std::uint64_t tune_seed);

} // namespace adrf
