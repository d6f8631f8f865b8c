#pragma once

// Random GEL problem instances shared by unit and acceptance tests.

#include "adrf/deconv_kernel.hpp"
#include "adrf/random.hpp"
#include "adrf/sieve_basis.hpp"

#include <random>

namespace fixture {

struct GelInstance
{
  adrf::Matrix basis;
  adrf::Vector kernel_w; // truncated, nonnegative
};

// Model-1 style confounded design: X uniform on [0.3, 0.7], T = X + N(0,1),
// S = T + Laplace error; weights from the truncated kernel at a random t.
inline GelInstance
make_gel_instance(std::uint64_t seed, adrf::Index n = 400, int K = 0)
{
  using namespace adrf;
  Rng rng(derive_seed(seed, { 77 }));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (K == 0) {
    K = 2 + static_cast<int>(seed % 4);
  }
  const auto error = ErrorModel::laplace(0.25 * (0.16 / 12.0 + 1.0));
  Matrix x(n, 1);
  Vector s(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = 0.3 + 0.4 * unif(rng);
    s(i) = x(i, 0) + normal(rng) + error.draw(rng);
  }
  BasisSpec spec;
  spec.K = K;
  GelInstance out;
  out.basis = evaluate_basis(spec, fit_scaler(x), x);
  const double h0 = 0.3 + 0.4 * unif(rng);
  const double t = -0.5 + 2.0 * unif(rng);
  out.kernel_w = kernel_weights(make_kernel_table(error, h0), t, s, true);
  return out;
}

} // namespace fixture
