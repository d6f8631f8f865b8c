#include "adrf/deconv_kernel.hpp"

#include "adrf/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace adrf {

namespace {

constexpr int kCachedPanels = 4;
// one panel of `order` nodes resolves cos(wv) on [0, 1] for |v| below this
constexpr double kPanelFrequency = 64.0;
constexpr double kGaussianExponentCap = 700.0;

// Gauss-Legendre rule on [0, 1], shared per order.
const GaussLegendre&
unit_rule(int order)
{
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) {
    slot = std::make_unique<GaussLegendre>(gauss_legendre(order, 0.0, 1.0));
  }
  return *slot;
}

int
panels_for(double v)
{
  return 1 + static_cast<int>(std::abs(v) / kPanelFrequency);
}

// d^k/dv^k cos(wv) = w^k * {cos, -sin, -cos, sin}[k mod 4](wv)
inline double
trig_derivative(double w, double v, int k)
{
  const double wv = w * v;
  double wk = 1.0;
  for (int j = 0; j < k; ++j) {
    wk *= w;
  }
  switch (k & 3) {
    case 0:
      return wk * std::cos(wv);
    case 1:
      return -wk * std::sin(wv);
    case 2:
      return -wk * std::cos(wv);
    default:
      return wk * std::sin(wv);
  }
}

template<class Weight>
double
cosine_integral(double v, int order, int derivative_order, Weight&& weight)
{
  const auto& rule = unit_rule(order);
  const int panels = panels_for(v);
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    for (Index k = 0; k < rule.nodes.size(); ++k) {
      const double w = (p + rule.nodes(k)) / panels;
      sum += rule.weights(k) * weight(w) * trig_derivative(w, v, derivative_order);
    }
  }
  return sum / (panels * std::numbers::pi);
}

double
base_kernel_derivative(double x, int derivative_order, const KernelSpec& spec)
{
  return cosine_integral(x, spec.quadrature_order, derivative_order, phi_L);
}

// L, L', L'', L''' on the table grid, built once.
struct BaseKernelTables
{
  std::vector<double> d0, d1, d2, d3;
};

const BaseKernelTables&
base_tables()
{
  static const BaseKernelTables tables = [] {
    const auto n = static_cast<std::size_t>(KernelTable::kSupport / KernelTable::kStep) + 2;
    BaseKernelTables t;
    t.d0.resize(n);
    t.d1.resize(n);
    t.d2.resize(n);
    t.d3.resize(n);
    const KernelSpec spec;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = static_cast<double>(k) * KernelTable::kStep;
      t.d0[k] = base_kernel_derivative(v, 0, spec);
      t.d1[k] = base_kernel_derivative(v, 1, spec);
      t.d2[k] = base_kernel_derivative(v, 2, spec);
      t.d3[k] = base_kernel_derivative(v, 3, spec);
    }
    return t;
  }();
  return tables;
}

} // namespace

double
phi_L(double u)
{
  if (u <= -1.0 || u >= 1.0) {
    return 0.0;
  }
  const double a = 1.0 - u * u;
  return a * a * a;
}

double
base_kernel(double x, const KernelSpec& spec)
{
  return base_kernel_derivative(x, 0, spec);
}

DeconvKernel::DeconvKernel(ErrorModel error,
                           double h,
                           KernelSpec spec,
                           std::optional<DeconvMode> mode)
  : error_(std::move(error))
  , h_(h)
  , spec_(spec)
{
  require(std::isfinite(h) && h > 0.0, "bandwidth must be positive");
  require(spec.quadrature_order >= 64, "quadrature order must be at least 64");
  if (!mode) {
    switch (error_.kind()) {
      case ErrorKind::Laplace:
        mode = DeconvMode::ClosedFormLaplace;
        break;
      case ErrorKind::None:
        mode = DeconvMode::PlainKernel;
        break;
      default:
        mode = DeconvMode::QuadratureGeneric;
    }
  }
  mode_ = *mode;
  require(mode_ != DeconvMode::ClosedFormLaplace || error_.kind() == ErrorKind::Laplace,
          "closed-form mode requires a Laplace error");
  require(mode_ != DeconvMode::PlainKernel || error_.kind() == ErrorKind::None,
          "plain-kernel mode requires ErrorKind::None");
  if (error_.kind() == ErrorKind::Gaussian) {
    const double exponent = error_.variance() / (2.0 * h_ * h_);
    if (exponent > kGaussianExponentCap) {
      throw Error(ErrorCode::OverflowRisk,
                  "sigma^2/(2h^2) = " + std::to_string(exponent) +
                    " exceeds 700; bandwidth too small for the noise level");
    }
  }
  laplace_c_ = error_.kind() == ErrorKind::Laplace ? error_.variance() / (2.0 * h_ * h_) : 0.0;

  if (mode_ == DeconvMode::QuadratureGeneric) {
    const auto& rule = unit_rule(spec_.quadrature_order);
    cached_multipliers_.resize(kCachedPanels);
    for (int panels = 1; panels <= kCachedPanels; ++panels) {
      Vector m(panels * rule.nodes.size());
      for (int p = 0; p < panels; ++p) {
        for (Index k = 0; k < rule.nodes.size(); ++k) {
          m(p * rule.nodes.size() + k) = multiplier((p + rule.nodes(k)) / panels);
        }
      }
      cached_multipliers_[panels - 1] = std::move(m);
    }
  }
}

double
DeconvKernel::multiplier(double w) const
{
  return phi_L(w) / error_.cf(w / h_);
}

double
DeconvKernel::cosine_transform(double v, int derivative_order) const
{
  const auto& rule = unit_rule(spec_.quadrature_order);
  const int panels = panels_for(v);
  const Index n = rule.nodes.size();
  double sum = 0.0;
  if (panels <= kCachedPanels) {
    const Vector& m = cached_multipliers_[panels - 1];
    for (int p = 0; p < panels; ++p) {
      for (Index k = 0; k < n; ++k) {
        const double w = (p + rule.nodes(k)) / panels;
        sum += rule.weights(k) * m(p * n + k) * trig_derivative(w, v, derivative_order);
      }
    }
  } else {
    for (int p = 0; p < panels; ++p) {
      for (Index k = 0; k < n; ++k) {
        const double w = (p + rule.nodes(k)) / panels;
        sum += rule.weights(k) * multiplier(w) * trig_derivative(w, v, derivative_order);
      }
    }
  }
  return sum / (panels * std::numbers::pi);
}

double
DeconvKernel::value(double v) const
{
  switch (mode_) {
    case DeconvMode::PlainKernel:
      return base_kernel(v, spec_);
    case DeconvMode::ClosedFormLaplace:
      return base_kernel_derivative(v, 0, spec_) - laplace_c_ * base_kernel_derivative(v, 2, spec_);
    case DeconvMode::QuadratureGeneric:
      break;
  }
  return cosine_transform(v, 0);
}

double
DeconvKernel::derivative(double v) const
{
  switch (mode_) {
    case DeconvMode::PlainKernel:
      return base_kernel_derivative(v, 1, spec_);
    case DeconvMode::ClosedFormLaplace:
      return base_kernel_derivative(v, 1, spec_) - laplace_c_ * base_kernel_derivative(v, 3, spec_);
    case DeconvMode::QuadratureGeneric:
      break;
  }
  return cosine_transform(v, 1);
}

KernelTable::KernelTable(const DeconvKernel& kernel)
  : h_(kernel.bandwidth())
  , inv_h_(1.0 / kernel.bandwidth())
{
  const auto n = static_cast<std::size_t>(kSupport / kStep) + 2;
  data_.resize(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = static_cast<double>(k) * kStep;
    data_[2 * k] = kernel.value(v);
    data_[2 * k + 1] = kernel.derivative(v);
  }
}

KernelTable
KernelTable::gaussian_density(double h)
{
  require(h > 0.0, "bandwidth must be positive");
  KernelTable table;
  table.h_ = h;
  table.inv_h_ = 1.0 / h;
  const auto n = static_cast<std::size_t>(kSupport / kStep) + 2;
  table.data_.resize(2 * n);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = static_cast<double>(k) * kStep;
    const double f = norm * std::exp(-0.5 * v * v);
    table.data_[2 * k] = f;
    table.data_[2 * k + 1] = -v * f;
  }
  return table;
}

KernelTable
make_kernel_table(const ErrorModel& error, double h, const KernelSpec& spec)
{
  const bool default_spec = spec.quadrature_order == KernelSpec{}.quadrature_order;
  if (!default_spec ||
      (error.kind() != ErrorKind::None && error.kind() != ErrorKind::Laplace)) {
    return KernelTable(DeconvKernel(error, h, spec));
  }
  require(std::isfinite(h) && h > 0.0, "bandwidth must be positive");
  // L_U = L - c L'' for Laplace errors, c = sigma^2 / (2 h^2)
  const auto& base = base_tables();
  const double c = error.kind() == ErrorKind::Laplace ? error.variance() / (2.0 * h * h) : 0.0;
  std::vector<double> data(2 * base.d0.size());
  for (std::size_t k = 0; k < base.d0.size(); ++k) {
    data[2 * k] = base.d0[k] - c * base.d2[k];
    data[2 * k + 1] = base.d1[k] - c * base.d3[k];
  }
  return KernelTable::from_data(h, std::move(data));
}

KernelTable
KernelTable::from_data(double h, std::vector<double> data)
{
  KernelTable table;
  table.h_ = h;
  table.inv_h_ = 1.0 / h;
  table.data_ = std::move(data);
  return table;
}

Vector
kernel_weights(const KernelTable& kernel,
               double t,
               const Eigen::Ref<const Vector>& s,
               bool truncate_negative)
{
  require(s.size() > 0, "kernel_weights: empty sample");
  Vector w(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    const double value = kernel.weight(t, s(i));
    w(i) = (truncate_negative && value < 0.0) ? 0.0 : value;
  }
  if ((truncate_negative && !(w.sum() > 0.0)) || w.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::AllWeightsZero,
                "no positive kernel mass at t = " + std::to_string(t));
  }
  return w;
}

Vector
kernel_weights(const DeconvKernel& kernel,
               double t,
               const Eigen::Ref<const Vector>& s,
               bool truncate_negative)
{
  require(s.size() > 0, "kernel_weights: empty sample");
  Vector w(s.size());
  const double inv_h = 1.0 / kernel.bandwidth();
  for (Index i = 0; i < s.size(); ++i) {
    const double v = (t - s(i)) * inv_h;
    const double value = std::abs(v) < KernelTable::kSupport ? kernel.value(v) : 0.0;
    w(i) = (truncate_negative && value < 0.0) ? 0.0 : value;
  }
  if ((truncate_negative && !(w.sum() > 0.0)) || w.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::AllWeightsZero,
                "no positive kernel mass at t = " + std::to_string(t));
  }
  return w;
}

UnbiasednessCheck
conditional_unbiasedness_check(const ErrorModel& error,
                               double h,
                               double t,
                               double t0,
                               std::int64_t n_mc,
                               std::uint64_t seed)
{
  require(n_mc >= 10000, "conditional_unbiasedness_check: n_mc must be at least 1e4");
  DeconvKernel kernel(error, h);
  const double target = base_kernel((t - t0) / h);
  if (error.kind() == ErrorKind::None) {
    return { kernel.value((t - t0) / h), 0.0, target };
  }
  Rng rng = make_rng(seed, { 0x554e4249ULL });
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 0; i < n_mc; ++i) {
    const double s = t0 + error.draw(rng);
    const double x = kernel.value((t - s) / h);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(n_mc - 1);
  return { mean, std::sqrt(var / static_cast<double>(n_mc)), target };
}

ErrorModel
estimate_cf_from_replicates(const Eigen::Ref<const Matrix>& pairs)
{
  require(pairs.cols() == 2, "replicate pairs need two columns");
  if (pairs.rows() < kMinReplicatePairs) {
    throw Error(ErrorCode::InsufficientReplicates,
                "need at least " + std::to_string(kMinReplicatePairs) + " pairs, got " +
                  std::to_string(pairs.rows()));
  }
  require(pairs.allFinite(), "replicate pairs must be finite");
  const Vector diff = pairs.col(0) - pairs.col(1);
  const double sigma = std::sqrt(diff.squaredNorm() / (2.0 * diff.size()));

  std::vector<double> grid;
  std::vector<double> phi;
  bool floored = false;
  if (sigma == 0.0) {
    for (int k = 0; k <= 1000; ++k) {
      grid.push_back(0.1 * k);
      phi.push_back(1.0);
    }
  } else {
    const double step = 0.02 / sigma;
    const double w_max = 100.0 / sigma;
    for (int k = 0;; ++k) {
      const double w = k * step;
      double mean_cos = 0.0;
      for (Index j = 0; j < diff.size(); ++j) {
        mean_cos += std::cos(w * diff(j));
      }
      mean_cos /= static_cast<double>(diff.size());
      double value = k == 0 ? 1.0 : std::sqrt(std::abs(mean_cos));
      grid.push_back(w);
      if (value < kReplicateRidgeFloor) {
        phi.push_back(kReplicateRidgeFloor);
        floored = true;
        break;
      }
      phi.push_back(value);
      if (w >= w_max) {
        break;
      }
    }
  }
  Vector g = Eigen::Map<Vector>(grid.data(), static_cast<Index>(grid.size()));
  Vector p = Eigen::Map<Vector>(phi.data(), static_cast<Index>(phi.size()));
  return ErrorModel::replicate_estimated(std::move(g), std::move(p), diff, kReplicateRidgeFloor, floored);
}

} // namespace adrf
