#pragma once

#include "adrf/error_model.hpp"
#include "adrf/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace adrf {

//! Fourier transform of the base kernel: (1 - u^2)^3 on [-1, 1], 0 elsewhere.
double phi_L(double u);

//! Kernel configuration. The kernel family is fixed; only the Gauss-Legendre
//! order of the Fourier-cosine inversion on [0, 1] is adjustable.
struct KernelSpec
{
  int quadrature_order = 128;
};

//! Base kernel L(x) = (1/pi) int_0^1 cos(wx) phi_L(w) dw.
double base_kernel(double x, const KernelSpec& spec = {});

enum class DeconvMode
{
  ClosedFormLaplace,
  QuadratureGeneric,
  PlainKernel,
};

//! Deconvolution kernel L_U(v) = (1/2pi) int exp(-iwv) phi_L(w) / phi_U(w/h) dw
//! for a fixed error model and bandwidth h.
//!
//! Immutable after construction; safe for concurrent reads.
class DeconvKernel
{
public:
  //! @param mode defaults to ClosedFormLaplace for Laplace errors,
  //!   PlainKernel for no error, QuadratureGeneric otherwise.
  //! @throws Error(OverflowRisk) if a Gaussian error makes
  //!   sigma^2 / (2 h^2) exceed 700.
  DeconvKernel(ErrorModel error,
               double h,
               KernelSpec spec = {},
               std::optional<DeconvMode> mode = std::nullopt);

  double operator()(double v) const { return value(v); }
  double value(double v) const;
  //! d/dv L_U(v).
  double derivative(double v) const;

  const ErrorModel& error() const { return error_; }
  double bandwidth() const { return h_; }
  DeconvMode mode() const { return mode_; }
  const KernelSpec& spec() const { return spec_; }

  //! Fourier multiplier phi_L(w) / phi_U(w / h).
  double multiplier(double w) const;

private:
  // (1/pi) int_0^1 d^k/dv^k cos(wv) * multiplier(w) dw
  double cosine_transform(double v, int derivative_order) const;

  ErrorModel error_;
  double h_;
  KernelSpec spec_;
  DeconvMode mode_;
  double laplace_c_ = 0.0;
  // multiplier values at the quadrature nodes for 1..kCachedPanels panels
  std::vector<Vector> cached_multipliers_;
};

//! Fast tabulated evaluator of w(t, s) = L_U((t - s) / h).
//!
//! Cubic Hermite interpolation on |v| in [0, support] with a uniform step.
//! Values beyond the support are zero: this is the kernel's effective support,
//! where |L_U| is below ~1e-6 of its peak for the kernels used here.
class KernelTable
{
public:
  static constexpr double kSupport = 100.0;
  static constexpr double kStep = 0.01;

  explicit KernelTable(const DeconvKernel& kernel);

  //! Standard normal density table with bandwidth h (naive comparator).
  static KernelTable gaussian_density(double h);

  double operator()(double v) const
  {
    double a = v < 0.0 ? -v : v;
    if (!(a < kSupport)) {
      return 0.0;
    }
    const double pos = a * inv_step_;
    auto k = static_cast<std::size_t>(pos);
    const double s = pos - static_cast<double>(k);
    const double* p = data_.data() + 2 * k;
    const double f0 = p[0], d0 = p[1], f1 = p[2], d1 = p[3];
    const double s2 = s * s;
    const double om = 1.0 - s;
    return (1.0 + 2.0 * s) * om * om * f0 + s * om * om * kStep * d0 +
           s2 * (3.0 - 2.0 * s) * f1 + s2 * (s - 1.0) * kStep * d1;
  }

  //! L_U((t - s) / h).
  double weight(double t, double s) const { return (*this)((t - s) * inv_h_); }

  double bandwidth() const { return h_; }
  double peak() const { return data_[0]; }

private:
  friend KernelTable make_kernel_table(const ErrorModel&, double, const KernelSpec&);

  KernelTable() = default;
  static KernelTable from_data(double h, std::vector<double> data);

  double h_ = 1.0;
  double inv_h_ = 1.0;
  double inv_step_ = 1.0 / kStep;
  std::vector<double> data_; // interleaved (value, derivative)
};

//! Kernel table for (error, h), reusing precomputed base-kernel derivatives
//! for the Laplace and no-error cases.
KernelTable make_kernel_table(const ErrorModel& error, double h, const KernelSpec& spec = {});

//! w_i = L_U((t - s_i) / h), negative entries set to 0 when `truncate_negative`.
//! @throws Error(AllWeightsZero) if truncation leaves a zero sum.
Vector kernel_weights(const KernelTable& kernel,
                      double t,
                      const Eigen::Ref<const Vector>& s,
                      bool truncate_negative);

Vector kernel_weights(const DeconvKernel& kernel,
                      double t,
                      const Eigen::Ref<const Vector>& s,
                      bool truncate_negative);

struct UnbiasednessCheck
{
  double mc_mean;
  double mc_se;
  double target;
};

//! Monte Carlo check of E[L_U((t - S)/h) | T = t0] = L((t - t0)/h), S = t0 + U.
UnbiasednessCheck conditional_unbiasedness_check(const ErrorModel& error,
                                                 double h,
                                                 double t,
                                                 double t0,
                                                 std::int64_t n_mc,
                                                 std::uint64_t seed);

//! Ridge floor applied to replicate-estimated characteristic functions.
inline constexpr double kReplicateRidgeFloor = 0.05;
inline constexpr Index kMinReplicatePairs = 50;

//! phi_U(w) = |mean_j cos(w (s1_j - s2_j))|^(1/2) tabulated from replicate
//! pairs (columns s1, s2).
//! @throws Error(InsufficientReplicates) for fewer than 50 pairs.
ErrorModel estimate_cf_from_replicates(const Eigen::Ref<const Matrix>& pairs);

} // namespace adrf
