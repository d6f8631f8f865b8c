#include "adrf/simlab.hpp"

#include "adrf/parallel.hpp"
#include "adrf/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace adrf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double
normal_cdf(double z)
{
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double
normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double
expit(double v)
{
  return 1.0 / (1.0 + std::exp(-v));
}

// Append the nodes of an n-point rule on [a, b] weighted by density(x).
void
append_panel(GaussLegendre& law, double a, double b, int n, const std::function<double(double)>& density)
{
  const GaussLegendre rule = gauss_legendre(n, a, b);
  const Index old = law.nodes.size();
  law.nodes.conservativeResize(old + n);
  law.weights.conservativeResize(old + n);
  for (Index k = 0; k < n; ++k) {
    law.nodes(old + k) = rule.nodes(k);
    law.weights(old + k) = rule.weights(k) * density(rule.nodes(k));
  }
}

// Irwin-Hall density of the sum of m standard uniforms.
double
irwin_hall_pdf(double v, int m)
{
  if (v <= 0.0 || v >= m) {
    return 0.0;
  }
  double sum = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= static_cast<int>(std::floor(v)); ++k) {
    sum += (k % 2 == 0 ? 1.0 : -1.0) * binom * std::pow(v - k, m - 1);
    binom = binom * (m - k) / (k + 1);
  }
  return sum / std::tgamma(m);
}

GaussLegendre
x_law(int id)
{
  GaussLegendre law;
  switch (id) {
    case 1:
      append_panel(law, 0.3, 0.7, 64, [](double) { return 1.0 / 0.4; });
      break;
    case 2:
      // 0.3 V with V triangular on [0, 2]
      append_panel(law, 0.0, 0.3, 64, [](double x) { return x / 0.09; });
      append_panel(law, 0.3, 0.6, 64, [](double x) { return (2.0 - x / 0.3) / 0.3; });
      break;
    case 3:
      for (int k = 0; k < 10; ++k) {
        append_panel(law, 0.2 * k, 0.2 * (k + 1), 32, [](double x) { return irwin_hall_pdf(x / 0.2, 10) / 0.2; });
      }
      break;
    case 4:
      append_panel(law, 0.2, 0.8, 64, [](double) { return 1.0 / 0.6; });
      break;
    default:
      break;
  }
  law.weights /= law.weights.sum();
  return law;
}

// Minimum ISE over the regression bandwidth tables for fixed responses
// piy[g] = pi(t_g, X_i) Y_i at each grid point (empty when skipped).
double
best_ise(const Vector& s,
         const std::vector<Vector>& piy,
         const std::vector<KernelTable>& tables,
         const Vector& grid,
         const std::function<double(double)>& truth,
         double q_lo,
         double q_hi)
{
  double best = std::numeric_limits<double>::infinity();
  for (const KernelTable& table : tables) {
    AdrfCurve curve;
    curve.grid = grid;
    curve.mu = Vector::Constant(grid.size(), kNaN);
    for (Index g = 0; g < grid.size(); ++g) {
      const Vector& r = piy[static_cast<std::size_t>(g)];
      if (r.size() == 0) {
        curve.skipped.push_back(g);
        continue;
      }
      double num = 0.0;
      double den = 0.0;
      for (Index i = 0; i < s.size(); ++i) {
        const double w = table.weight(grid(g), s(i));
        num += r(i) * w;
        den += w;
      }
      if (den == 0.0) {
        curve.skipped.push_back(g);
      } else {
        curve.mu(g) = num / den;
      }
    }
    try {
      best = std::min(best, ise(curve, truth, q_lo, q_hi));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooManySkipped) {
        throw;
      }
    }
  }
  return best;
}

std::vector<Vector>
fitted_responses(const AdrfEstimator& estimator, const Vector& grid)
{
  std::vector<Vector> out(static_cast<std::size_t>(grid.size()));
  for (Index g = 0; g < grid.size(); ++g) {
    try {
      out[static_cast<std::size_t>(g)] =
        estimator.weights(estimator.fit_weights(grid(g))).cwiseProduct(estimator.sample().y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllWeightsZero) {
        throw;
      }
    }
  }
  return out;
}

std::vector<KernelTable>
bandwidth_tables(const ErrorModel& error, RegressionKernel kind, double h_pi, const std::vector<double>& mult)
{
  std::vector<KernelTable> tables;
  tables.reserve(mult.size());
  for (double c : mult) {
    const double h = c * h_pi;
    tables.push_back(kind == RegressionKernel::GaussianDensity ? KernelTable::gaussian_density(h)
                                                               : make_kernel_table(error, h));
  }
  return tables;
}

double
finite_or_throw(double value)
{
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NotConverged, "no parameter on the search grid gave a valid curve");
  }
  return value;
}

} // namespace

SimModel::SimModel(int id)
  : id_(id)
{
  require(id >= 1 && id <= 4, "simulation model id must be 1, 2, 3 or 4 (got " + std::to_string(id) + ")");
  x_law_ = x_law(id);
  switch (id) {
    case 1:
      mean_outcome_shift_ = expect_x([](double x) { return x; });
      break;
    case 2:
      mean_outcome_shift_ = expect_x([](double x) { return x; }) + 0.5;
      break;
    case 3:
      mean_outcome_shift_ = expect_x([](double x) { return std::sqrt(x); }) + 0.5;
      break;
    case 4:
      mean_outcome_shift_ = expect_x([](double x) { return std::exp(x); });
      break;
  }
  const double mean_g = expect_x([this](double x) { return treatment_shift(x); });
  var_t_ = 1.0 + expect_x([this, mean_g](double x) {
             const double d = treatment_shift(x) - mean_g;
             return d * d;
           });
}

double
SimModel::expect_x(const std::function<double(double)>& f) const
{
  double sum = 0.0;
  for (Index k = 0; k < x_law_.nodes.size(); ++k) {
    sum += x_law_.weights(k) * f(x_law_.nodes(k));
  }
  return sum;
}

double
SimModel::draw_x(Rng& rng) const
{
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (id_) {
    case 1:
      return 0.3 + 0.4 * unif(rng);
    case 2: {
      const double a = unif(rng);
      return 0.3 * (a + unif(rng));
    }
    case 3: {
      double sum = 0.0;
      for (int j = 0; j < 10; ++j) {
        sum += unif(rng);
      }
      return 0.2 * sum;
    }
    default:
      return 0.2 + 0.6 * unif(rng);
  }
}

double
SimModel::treatment_shift(double x) const
{
  switch (id_) {
    case 2:
      return 1.0 + x * x;
    case 4:
      return std::sqrt(x) - 0.7;
    default:
      return x;
  }
}

double
SimModel::draw_outcome(double t, double x, Rng& rng) const
{
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (id_) {
    case 1:
      return (t - 0.5) * (t - 0.5) + x + normal(rng);
    case 2:
      return expit(6.0 * t - 6.0) + x + unif(rng);
    case 3:
      return -t + std::sqrt(x) + unif(rng);
    default:
      return t + std::exp(x) + normal(rng);
  }
}

double
SimModel::true_mu(double t) const
{
  switch (id_) {
    case 1:
      return (t - 0.5) * (t - 0.5) + mean_outcome_shift_;
    case 2:
      return expit(6.0 * t - 6.0) + mean_outcome_shift_;
    case 3:
      return -t + mean_outcome_shift_;
    default:
      return t + mean_outcome_shift_;
  }
}

double
SimModel::t_cdf(double t) const
{
  return expect_x([this, t](double x) { return normal_cdf(t - treatment_shift(x)); });
}

double
SimModel::t_quantile(double p) const
{
  require(p > 0.0 && p < 1.0, "quantile level must be in (0, 1)");
  double lo = -20.0;
  double hi = 20.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<WeightFunction>
SimModel::pi0() const
{
  if (id_ != 1) {
    return std::nullopt;
  }
  return WeightFunction([](double t, const Eigen::Ref<const Vector>& x) {
    const double f_t = (normal_cdf(t - 0.3) - normal_cdf(t - 0.7)) / 0.4;
    return f_t / normal_pdf(t - x(0));
  });
}

ErrorModel
simulation_error(const SimModel& model, ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::Laplace:
      return ErrorModel::laplace(kLaplaceErrorRatio * model.var_t());
    case ErrorKind::Gaussian:
      return ErrorModel::gaussian(kGaussianErrorRatio * model.var_t());
    case ErrorKind::None:
      return ErrorModel::none();
    default:
      throw Error(ErrorCode::InvalidArgument, "simulations support laplace, gaussian or none errors");
  }
}

SimData
generate(const SimModel& model, Index n, ErrorKind error_kind, std::uint64_t seed)
{
  require(n >= 50, "simulated samples need n >= 50");
  const ErrorModel error = simulation_error(model, error_kind);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SimData data;
  data.t.resize(n);
  data.sample.s.resize(n);
  data.sample.x.resize(n, 1);
  data.sample.y.resize(n);
  data.sample.error = error;
  for (Index i = 0; i < n; ++i) {
    const double x = model.draw_x(rng);
    const double t = model.treatment_shift(x) + normal(rng);
    data.t(i) = t;
    data.sample.x(i, 0) = x;
    data.sample.y(i) = model.draw_outcome(t, x, rng);
    data.sample.s(i) = t + error.draw(rng);
  }
  return data;
}

double
ise(const AdrfCurve& curve, const std::function<double(double)>& truth, double q_lo, double q_hi)
{
  const Vector& grid = curve.grid;
  const Index g = grid.size();
  require(g >= 2 && q_lo < q_hi, "ise needs a grid and q_lo < q_hi");
  require(grid(0) <= q_lo + 1e-12 && grid(g - 1) >= q_hi - 1e-12, "curve grid does not cover the ISE range");

  std::vector<char> skip(static_cast<std::size_t>(g), 0);
  for (Index i : curve.skipped) {
    skip[static_cast<std::size_t>(i)] = 1;
  }
  Index in_range = 0;
  Index skipped = 0;
  std::vector<double> vt;
  std::vector<double> vm;
  for (Index i = 0; i < g; ++i) {
    const bool inside = grid(i) >= q_lo && grid(i) <= q_hi;
    if (inside) {
      ++in_range;
    }
    if (skip[static_cast<std::size_t>(i)] || !std::isfinite(curve.mu(i))) {
      skipped += inside ? 1 : 0;
      continue;
    }
    vt.push_back(grid(i));
    vm.push_back(curve.mu(i));
  }
  if (vt.size() < 2 || static_cast<double>(skipped) > 0.2 * static_cast<double>(in_range)) {
    throw Error(ErrorCode::TooManySkipped,
                std::to_string(skipped) + " of " + std::to_string(in_range) + " grid points in range skipped");
  }
  // piecewise-linear curve through the valid points, held flat past the ends
  auto mu_at = [&](double t) {
    if (t <= vt.front()) {
      return vm.front();
    }
    if (t >= vt.back()) {
      return vm.back();
    }
    const auto it = std::upper_bound(vt.begin(), vt.end(), t);
    const auto k = static_cast<std::size_t>(it - vt.begin());
    const double a = (t - vt[k - 1]) / (vt[k] - vt[k - 1]);
    return vm[k - 1] + a * (vm[k] - vm[k - 1]);
  };
  std::vector<double> nodes{ q_lo };
  for (Index i = 0; i < g; ++i) {
    if (grid(i) > q_lo && grid(i) < q_hi) {
      nodes.push_back(grid(i));
    }
  }
  nodes.push_back(q_hi);
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double e = mu_at(nodes[k]) - truth(nodes[k]);
    const double sq = e * e;
    if (k > 0) {
      total += 0.5 * (nodes[k] - nodes[k - 1]) * (sq + prev);
    }
    prev = sq;
  }
  return total;
}

const char*
to_string(EstimatorKind kind)
{
  switch (kind) {
    case EstimatorKind::NvTuned:
      return "nv-tuned";
    case EstimatorKind::NvOptimal:
      return "nv";
    case EstimatorKind::CmOptimal:
      return "cm";
    case EstimatorKind::CmTilde:
      return "cm-tilde";
    case EstimatorKind::CmTuned:
      return "cm-tuned";
    case EstimatorKind::OraclePi:
      return "oracle-pi";
  }
  return "unknown";
}

EstimatorKind
estimator_from_string(const std::string& name)
{
  for (auto kind : { EstimatorKind::NvTuned,
                     EstimatorKind::NvOptimal,
                     EstimatorKind::CmOptimal,
                     EstimatorKind::CmTilde,
                     EstimatorKind::CmTuned,
                     EstimatorKind::OraclePi }) {
    if (name == to_string(kind)) {
      return kind;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + name + "'");
}

void
MonteCarloConfig::validate() const
{
  require(!models.empty() && !sizes.empty() && !estimators.empty(), "Monte Carlo config has an empty list");
  for (int m : models) {
    require(m >= 1 && m <= 4, "simulation model id must be 1, 2, 3 or 4 (got " + std::to_string(m) + ")");
    for (auto e : estimators) {
      require(e != EstimatorKind::OraclePi || m == 1, "known weights are available for model 1 only");
    }
  }
  for (Index n : sizes) {
    require(n >= 50, "simulated samples need n >= 50");
  }
  require(reps >= 10, "Monte Carlo needs at least 10 replications");
  require(grid_n >= 2, "evaluation grid needs at least two points");
  require(error_kind != ErrorKind::ReplicateEstimated, "simulations support laplace, gaussian or none errors");
  tune.simex.validate();
}

const MonteCarloCell&
MonteCarloReport::cell(int model, Index n, EstimatorKind estimator) const
{
  for (const auto& c : cells) {
    if (c.model == model && c.n == n && c.estimator == estimator) {
      return c;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "no such Monte Carlo cell");
}

double
evaluate_estimator(EstimatorKind kind,
                   const SimModel& model,
                   const SimData& data,
                   const MonteCarloConfig& config,
                   std::uint64_t tune_seed)
{
  const Vector grid = linspace(model.t_quantile(0.05), model.t_quantile(0.95), config.grid_n);
  const double q_lo = model.t_quantile(0.1);
  const double q_hi = model.t_quantile(0.9);
  const auto truth = [&model](double t) { return model.true_mu(t); };

  EstimatorOptions options = config.options;
  options.threads = 1;
  TuneConfig tune = config.tune;
  tune.simex.seed = tune_seed;

  const bool naive = kind == EstimatorKind::NvTuned || kind == EstimatorKind::NvOptimal;
  const ObservedSample sample = naive ? as_error_free(data.sample) : data.sample;
  if (naive) {
    options = naive_options(options);
  }

  switch (kind) {
    case EstimatorKind::NvTuned:
    case EstimatorKind::CmTuned: {
      const SmoothingParams params = two_step_tune(sample, options, tune);
      return ise(AdrfEstimator(sample, params, options).curve(grid), truth, q_lo, q_hi);
    }
    case EstimatorKind::NvOptimal:
    case EstimatorKind::CmOptimal: {
      const double h_pi = plug_in_bandwidth(sample.s, sample.error, tune.plug_in);
      const auto tables = bandwidth_tables(sample.error, options.regression_kernel, h_pi, config.optimal.h);
      double best = std::numeric_limits<double>::infinity();
      for (int K : config.optimal.K) {
        for (double c0 : config.optimal.h0) {
          SmoothingParams params;
          params.K = K;
          params.h0 = c0 * h_pi;
          params.h = params.h0;
          const AdrfEstimator estimator(sample, params, options);
          best = std::min(best, best_ise(sample.s, fitted_responses(estimator, grid), tables, grid, truth, q_lo, q_hi));
        }
      }
      return finite_or_throw(best);
    }
    case EstimatorKind::CmTilde: {
      SmoothingParams params;
      params.h_pi = plug_in_bandwidth(sample.s, sample.error, tune.plug_in);
      params.h0 = params.h_pi;
      params.h = params.h_pi;
      params.K = select_k(sample, params.h_pi, options, tune.k_select).K;
      const auto tables = bandwidth_tables(sample.error, options.regression_kernel, params.h_pi, config.optimal.h);
      const AdrfEstimator estimator(sample, params, options);
      return finite_or_throw(best_ise(sample.s, fitted_responses(estimator, grid), tables, grid, truth, q_lo, q_hi));
    }
    case EstimatorKind::OraclePi: {
      const auto pi0 = model.pi0();
      require(pi0.has_value(), "known weights are available for model 1 only");
      const double h_pi = plug_in_bandwidth(sample.s, sample.error, tune.plug_in);
      const auto tables = bandwidth_tables(sample.error, options.regression_kernel, h_pi, config.optimal.h);
      std::vector<Vector> piy(static_cast<std::size_t>(grid.size()));
      for (Index g = 0; g < grid.size(); ++g) {
        Vector r(sample.size());
        for (Index i = 0; i < sample.size(); ++i) {
          r(i) = (*pi0)(grid(g), sample.x.row(i).transpose()) * sample.y(i);
        }
        piy[static_cast<std::size_t>(g)] = std::move(r);
      }
      return finite_or_throw(best_ise(sample.s, piy, tables, grid, truth, q_lo, q_hi));
    }
  }
  return kNaN;
}

MonteCarloReport
run_monte_carlo(const MonteCarloConfig& config)
{
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  MonteCarloReport report;
  report.config = config;
  const auto reps = static_cast<std::size_t>(config.reps);
  for (int m : config.models) {
    for (Index n : config.sizes) {
      for (auto e : config.estimators) {
        MonteCarloCell cell;
        cell.model = m;
        cell.n = n;
        cell.estimator = e;
        cell.ise.assign(reps, kNaN);
        cell.failures.assign(reps, std::string());
        report.cells.push_back(std::move(cell));
      }
    }
  }
  const std::size_t n_est = config.estimators.size();
  const std::size_t n_tasks = report.cells.size() / n_est * reps;
  parallel_for(n_tasks, config.threads, [&](std::size_t task) {
    const std::size_t block = task / reps;
    const std::size_t r = task % reps;
    MonteCarloCell& head = report.cells[block * n_est];
    const SimModel model(head.model);
    const auto data_seed = derive_seed(config.seed, { static_cast<std::uint64_t>(head.model),
                                                      static_cast<std::uint64_t>(head.n),
                                                      static_cast<std::uint64_t>(r) });
    const SimData data = generate(model, head.n, config.error_kind, data_seed);
    const auto tune_seed = derive_seed(data_seed, { 1 });
    for (std::size_t k = 0; k < n_est; ++k) {
      MonteCarloCell& cell = report.cells[block * n_est + k];
      try {
        cell.ise[r] = evaluate_estimator(cell.estimator, model, data, config, tune_seed);
      } catch (const Error& err) {
        cell.failures[r] = err.what();
      }
    }
  });
  for (auto& cell : report.cells) {
    std::vector<double> ok;
    for (double v : cell.ise) {
      if (std::isfinite(v)) {
        ok.push_back(v);
      }
    }
    cell.failure_rate = 1.0 - static_cast<double>(ok.size()) / static_cast<double>(reps);
    if (ok.empty()) {
      cell.q1 = cell.median = cell.q3 = kNaN;
      continue;
    }
    const Vector v = Eigen::Map<const Vector>(ok.data(), static_cast<Index>(ok.size()));
    cell.q1 = quantile(v, 0.25);
    cell.median = quantile(v, 0.5);
    cell.q3 = quantile(v, 0.75);
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

} // namespace adrf
