#include "adrf/tuning.hpp"

#include "adrf/deconv_kernel.hpp"
#include "adrf/parallel.hpp"
#include "adrf/quadrature.hpp"
#include "adrf/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace adrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKappa21 = 6.0; // -phi_L''(0)

double
sample_variance(const Eigen::Ref<const Vector>& s)
{
  const double mean = s.mean();
  return (s.array() - mean).square().sum() / static_cast<double>(s.size() - 1);
}

// index of the smallest finite entry, first one on ties; -1 if none
Index
argmin_finite(const std::vector<double>& v)
{
  Index best = -1;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (std::isfinite(v[k]) && (best < 0 || v[k] < v[static_cast<std::size_t>(best)])) {
      best = static_cast<Index>(k);
    }
  }
  return best;
}

double
normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

KernelTable
cv_table(const ErrorModel& error, double h, RegressionKernel kind)
{
  if (kind == RegressionKernel::GaussianDensity) {
    return KernelTable::gaussian_density(h);
  }
  return make_kernel_table(error, h);
}

std::string
trim(const std::string& text)
{
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

double
parse_number(const std::string& value, const std::string& key, int line)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedInput,
                "config line " + std::to_string(line) + ": bad value for " + key + ": '" + value + "'");
  }
}

// Leave-one-out CV surface for one SIMEX level: the data sit at `data_s`,
// the evaluation points at `eval_t`.
std::vector<double>
level_cv(const ObservedSample& base,
         const Vector& data_s,
         const Vector& eval_t,
         double h_pi,
         int K,
         const EstimatorOptions& options,
         const std::vector<KernelTable>& tables,
         double trim_lo,
         double trim_hi)
{
  ObservedSample sample = base;
  sample.s = data_s;
  SmoothingParams params;
  params.K = K;
  params.h0 = h_pi;
  params.h = h_pi;
  EstimatorOptions local = options;
  local.threads = 1;
  const AdrfEstimator estimator(sample, params, local);

  const double lo = quantile(eval_t, trim_lo);
  const double hi = quantile(eval_t, trim_hi);
  const Index n = sample.size();

  // weight fits depend on the point only; keep pi_j Y_j per evaluation point
  std::vector<Index> points;
  std::vector<Vector> responses;
  for (Index i = 0; i < n; ++i) {
    const double t = eval_t(i);
    if (t < lo || t > hi) {
      continue;
    }
    try {
      responses.push_back(estimator.weights(estimator.fit_weights(t)).cwiseProduct(sample.y));
      points.push_back(i);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllWeightsZero) {
        throw;
      }
    }
  }

  // one table at a time so it stays in cache
  std::vector<double> cv(tables.size(), 0.0);
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const KernelTable& table = tables[k];
    for (std::size_t p = 0; p < points.size(); ++p) {
      const Index i = points[p];
      const double t = eval_t(i);
      const Vector& piy = responses[p];
      double num = 0.0;
      double den = 0.0;
      for (Index j = 0; j < i; ++j) {
        const double w = table.weight(t, data_s(j));
        num += piy(j) * w;
        den += w;
      }
      for (Index j = i + 1; j < n; ++j) {
        const double w = table.weight(t, data_s(j));
        num += piy(j) * w;
        den += w;
      }
      if (den == 0.0) {
        cv[k] = kInf;
        break;
      }
      const double r = piy(i) - num / den;
      cv[k] += r * r;
    }
  }
  return cv;
}

} // namespace

std::vector<double>
log_grid(double lo, double hi, int n)
{
  require(lo > 0.0 && hi > lo && n >= 2, "log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

double
density_amise(double h, Index n, double var_t, const ErrorModel& error)
{
  require(h > 0.0 && var_t > 0.0 && n > 0, "density_amise: invalid arguments");
  static const GaussLegendre rule = gauss_legendre(128, 0.0, 1.0);
  double integral = 0.0;
  for (Index k = 0; k < rule.nodes.size(); ++k) {
    const double w = rule.nodes(k);
    const double phi_u = error.cf(w / h);
    if (!(phi_u > 0.0)) {
      return kInf;
    }
    const double ratio = phi_L(w) / phi_u;
    integral += rule.weights(k) * ratio * ratio;
  }
  integral *= 2.0; // symmetric in w
  const double sd = std::sqrt(var_t);
  const double roughness = 3.0 / (8.0 * std::sqrt(std::numbers::pi) * std::pow(sd, 5));
  const double bias = 0.25 * std::pow(h, 4) * kKappa21 * kKappa21 * roughness;
  const double variance = integral / (2.0 * std::numbers::pi * static_cast<double>(n) * h);
  return bias + variance;
}

double
plug_in_bandwidth(const Eigen::Ref<const Vector>& s, const ErrorModel& error, const PlugInConfig& config)
{
  require(s.size() >= 20, "plug-in bandwidth needs at least 20 observations");
  const double var_s = sample_variance(s);
  const double var_t = var_s - error.variance();
  if (!(var_t > 0.0)) {
    throw Error(ErrorCode::NoiseExceedsSignal,
                "error variance " + std::to_string(error.variance()) +
                  " is not below var(S) = " + std::to_string(var_s));
  }
  const double sd = std::sqrt(var_t);
  double best_h = std::numeric_limits<double>::quiet_NaN();
  double best = kInf;
  for (double c : log_grid(config.lo, config.hi, config.points)) {
    const double h = c * sd;
    const double a = density_amise(h, s.size(), var_t, error);
    if (a < best) {
      best = a;
      best_h = h;
    }
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorCode::NotConverged, "AMISE is infinite over the whole bandwidth grid");
  }
  return best_h;
}

int
k_from_c(double c, double h_pi, Index n)
{
  require(c > 0.0 && h_pi > 0.0, "k_from_c: c and h_pi must be positive");
  const double raw = std::floor(c * std::log(h_pi + 1.0) / (h_pi * h_pi));
  const double cap = std::max(2.0, std::floor(static_cast<double>(n) / 10.0));
  return static_cast<int>(std::clamp(raw, 2.0, cap));
}

KSelection
select_k(const ObservedSample& sample, double h_pi, const EstimatorOptions& options, const KSelectConfig& config)
{
  require(h_pi > 0.0, "select_k: h_pi must be positive");
  require(!config.c_grid.empty() && config.t_points >= 2, "select_k: empty grid");
  sample.validate();
  const Index n = sample.size();
  const Index r = sample.covariate_dim();
  const Matrix expx = sample.x.array().exp().matrix();
  const Vector exp_mean = expx.colwise().mean().transpose();
  const Vector tgrid = linspace(quantile(sample.s, config.trim_lo), quantile(sample.s, config.trim_hi), config.t_points);

  KSelection out;
  out.c_grid = config.c_grid;
  for (double c : config.c_grid) {
    int K = k_from_c(c, h_pi, n);
    if (options.basis == BasisFamily::BSpline) {
      K = std::max(K, static_cast<int>(r) * options.spline_degree + 1);
    }
    out.k_values.push_back(K);
  }
  out.gcv.assign(config.c_grid.size(), kInf);

  std::vector<double> by_k_value;
  std::vector<int> seen_k;
  for (std::size_t ci = 0; ci < config.c_grid.size(); ++ci) {
    const int K = out.k_values[ci];
    const auto hit = std::find(seen_k.begin(), seen_k.end(), K);
    if (hit != seen_k.end()) {
      out.gcv[ci] = by_k_value[static_cast<std::size_t>(hit - seen_k.begin())];
      continue;
    }
    double gcv = kInf;
    if (K < n) {
      try {
        SmoothingParams params;
        params.K = K;
        params.h0 = h_pi;
        params.h = h_pi;
        const AdrfEstimator estimator(sample, params, options);
        std::vector<double> err(static_cast<std::size_t>(tgrid.size()), kInf);
        parallel_for(err.size(), options.threads, [&](std::size_t k) {
          const double t = tgrid(static_cast<Index>(k));
          try {
            const Vector pi = estimator.weights(estimator.fit_weights(t));
            double sq = 0.0;
            for (Index j = 0; j < r; ++j) {
              const double d = estimator.regress(t, pi, expx.col(j)) - exp_mean(j);
              sq += d * d;
            }
            err[k] = sq;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::AllWeightsZero) {
              throw;
            }
          }
        });
        double integral = 0.0;
        bool any = false;
        Index prev = -1;
        for (Index k = 0; k < tgrid.size(); ++k) {
          if (!std::isfinite(err[static_cast<std::size_t>(k)])) {
            continue;
          }
          if (prev >= 0) {
            integral += 0.5 * (tgrid(k) - tgrid(prev)) *
                        (err[static_cast<std::size_t>(k)] + err[static_cast<std::size_t>(prev)]);
            any = true;
          }
          prev = k;
        }
        if (any) {
          const double denom = 1.0 - static_cast<double>(K) / static_cast<double>(n);
          gcv = integral / (denom * denom);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::BasisOverflow && e.code() != ErrorCode::AllWeightsZero) {
          throw;
        }
      }
    }
    seen_k.push_back(K);
    by_k_value.push_back(gcv);
    out.gcv[ci] = gcv;
  }
  const Index best = argmin_finite(out.gcv);
  if (best < 0) {
    throw Error(ErrorCode::NotConverged, "generalised CV undefined for every c on the grid");
  }
  out.K = out.k_values[static_cast<std::size_t>(best)];
  out.c_tilde = out.c_grid[static_cast<std::size_t>(best)];
  return out;
}

void
SimexConfig::validate() const
{
  require(D >= 2, "SIMEX needs D >= 2");
  require(h_grid.size() >= 2, "SIMEX bandwidth grid needs at least two points");
  for (std::size_t k = 0; k < h_grid.size(); ++k) {
    require(h_grid[k] > 0.0, "SIMEX bandwidth multipliers must be positive");
    require(k == 0 || h_grid[k] > h_grid[k - 1], "SIMEX bandwidth grid must be strictly increasing");
  }
  require(!b_grid.empty(), "extrapolation bandwidth grid is empty");
  for (double b : b_grid) {
    require(b > 0.0, "extrapolation bandwidths must be positive");
  }
  require(trim_lo >= 0.0 && trim_lo < trim_hi && trim_hi <= 1.0, "trim quantiles must satisfy 0 <= lo < hi <= 1");
}

SimexConfig
read_simex_config(const std::string& path, SimexConfig base)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MalformedInput, "cannot open config file " + path);
  }
  double grid_min = base.h_grid.front();
  double grid_max = base.h_grid.back();
  int grid_n = static_cast<int>(base.h_grid.size());
  bool grid_changed = false;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::MalformedInput, "config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "D") {
      base.D = static_cast<int>(parse_number(value, key, number));
    } else if (key == "h_grid_min") {
      grid_min = parse_number(value, key, number);
      grid_changed = true;
    } else if (key == "h_grid_max") {
      grid_max = parse_number(value, key, number);
      grid_changed = true;
    } else if (key == "h_grid_n") {
      grid_n = static_cast<int>(parse_number(value, key, number));
      grid_changed = true;
    } else if (key == "trim_lo") {
      base.trim_lo = parse_number(value, key, number);
    } else if (key == "trim_hi") {
      base.trim_hi = parse_number(value, key, number);
    } else if (key == "seed") {
      base.seed = static_cast<std::uint64_t>(parse_number(value, key, number));
    } else if (key == "b_grid") {
      base.b_grid.clear();
      std::stringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        base.b_grid.push_back(parse_number(trim(item), key, number));
      }
    } else {
      throw Error(ErrorCode::MalformedInput, "config line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
  }
  if (grid_changed) {
    base.h_grid = log_grid(grid_min, grid_max, grid_n);
  }
  return base;
}

double
local_constant_extrapolate(const std::vector<double>& h_star,
                           const std::vector<double>& h_star_star,
                           double x,
                           double b)
{
  double num = 0.0;
  double den = 0.0;
  for (std::size_t d = 0; d < h_star.size(); ++d) {
    const double w = normal_pdf((x - h_star_star[d]) / b);
    num += h_star[d] * w;
    den += w;
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

double
select_extrapolation_bandwidth(const std::vector<double>& h_star,
                               const std::vector<double>& h_star_star,
                               const std::vector<double>& b_values)
{
  std::vector<double> cv(b_values.size(), kInf);
  const std::size_t D = h_star.size();
  for (std::size_t k = 0; k < b_values.size(); ++k) {
    double total = 0.0;
    bool ok = true;
    for (std::size_t d = 0; d < D && ok; ++d) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t e = 0; e < D; ++e) {
        if (e == d) {
          continue;
        }
        const double w = normal_pdf((h_star_star[d] - h_star_star[e]) / b_values[k]);
        num += h_star[e] * w;
        den += w;
      }
      if (!(den > 0.0)) {
        ok = false;
        break;
      }
      const double r = h_star[d] - num / den;
      total += r * r;
    }
    if (ok) {
      cv[k] = total;
    }
  }
  const Index best = argmin_finite(cv);
  return best < 0 ? std::numeric_limits<double>::quiet_NaN() : b_values[static_cast<std::size_t>(best)];
}

SimexDiagnostics
simex_select_h(const ObservedSample& sample,
               double h_pi,
               int K,
               const EstimatorOptions& options,
               const SimexConfig& config)
{
  config.validate();
  require(h_pi > 0.0, "SIMEX needs a positive pilot bandwidth");
  require(K >= 2, "SIMEX needs K >= 2");
  sample.validate();

  const std::size_t H = config.h_grid.size();
  const auto D = static_cast<std::size_t>(config.D);
  std::vector<KernelTable> tables;
  tables.reserve(H);
  for (double c : config.h_grid) {
    tables.push_back(cv_table(sample.error, c * h_pi, options.regression_kernel));
  }

  const bool no_error = sample.error.kind() == ErrorKind::None;
  std::vector<std::vector<double>> cv1(D);
  std::vector<std::vector<double>> cv2(D);
  parallel_for(D, options.threads, [&](std::size_t d) {
    Rng rng1 = make_rng(config.seed, { d, 1 });
    Rng rng2 = make_rng(config.seed, { d, 2 });
    Vector s1 = sample.s;
    Vector s2(sample.size());
    for (Index i = 0; i < sample.size(); ++i) {
      s1(i) += sample.error.draw(rng1);
    }
    for (Index i = 0; i < sample.size(); ++i) {
      s2(i) = s1(i) + sample.error.draw(rng2);
    }
    cv1[d] = level_cv(sample, s1, sample.s, h_pi, K, options, tables, config.trim_lo, config.trim_hi);
    if (no_error) {
      cv2[d] = cv1[d];
    } else {
      cv2[d] = level_cv(sample, s2, s1, h_pi, K, options, tables, config.trim_lo, config.trim_hi);
    }
  });

  SimexDiagnostics diag;
  for (double c : config.h_grid) {
    diag.h_grid.push_back(c * h_pi);
  }
  diag.cv_star_mean.assign(H, 0.0);
  diag.cv_star_star_mean.assign(H, 0.0);
  for (std::size_t d = 0; d < D; ++d) {
    const Index a = argmin_finite(cv1[d]);
    const Index b = argmin_finite(cv2[d]);
    if (a >= 0 && b >= 0) {
      diag.h_star.push_back(diag.h_grid[static_cast<std::size_t>(a)]);
      diag.h_star_star.push_back(diag.h_grid[static_cast<std::size_t>(b)]);
    }
    for (std::size_t k = 0; k < H; ++k) {
      diag.cv_star_mean[k] += cv1[d][k] / static_cast<double>(D);
      diag.cv_star_star_mean[k] += cv2[d][k] / static_cast<double>(D);
    }
  }
  const Index a = argmin_finite(diag.cv_star_mean);
  const Index b = argmin_finite(diag.cv_star_star_mean);
  if (a < 0 || b < 0 || diag.h_star.empty()) {
    throw Error(ErrorCode::NotConverged, "SIMEX cross-validation is undefined on the whole bandwidth grid");
  }
  diag.h_hat_star = diag.h_grid[static_cast<std::size_t>(a)];
  diag.h_hat_star_star = diag.h_grid[static_cast<std::size_t>(b)];
  diag.linear_back = diag.h_hat_star * diag.h_hat_star / diag.h_hat_star_star;

  const auto [lo, hi] = std::minmax_element(diag.h_star_star.begin(), diag.h_star_star.end());
  diag.extrapolation_degenerate = *lo == *hi;
  diag.h_hat = diag.h_hat_star;
  if (!diag.extrapolation_degenerate) {
    std::vector<double> b_values;
    for (double c : config.b_grid) {
      b_values.push_back(c * h_pi);
    }
    const double bw = select_extrapolation_bandwidth(diag.h_star, diag.h_star_star, b_values);
    const double h = std::isfinite(bw)
                       ? local_constant_extrapolate(diag.h_star, diag.h_star_star, diag.h_hat_star, bw)
                       : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(h)) {
      diag.extrapolation_bandwidth = bw;
      diag.h_hat = h;
    } else {
      diag.extrapolation_degenerate = true;
    }
  }
  return diag;
}

SmoothingParams
two_step_tune(const ObservedSample& sample, const EstimatorOptions& options, const TuneConfig& config)
{
  sample.validate();
  config.simex.validate();
  SmoothingParams params;
  params.provenance = ParamsProvenance::TwoStep;
  params.h_pi = plug_in_bandwidth(sample.s, sample.error, config.plug_in);
  params.h0 = params.h_pi;
  const KSelection k = select_k(sample, params.h_pi, options, config.k_select);
  params.K = k.K;
  params.c_tilde = k.c_tilde;
  params.simex = simex_select_h(sample, params.h_pi, params.K, options, config.simex);
  params.h = params.simex->h_hat;
  return params;
}

} // namespace adrf
