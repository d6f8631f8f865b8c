#include "adrf/simlab.hpp"
#include "doctest.h"

using namespace adrf;

namespace {

MonteCarloConfig
config(int model, Index n, ErrorKind error, std::vector<EstimatorKind> estimators, int reps, std::uint64_t seed)
{
  MonteCarloConfig c;
  c.models = { model };
  c.sizes = { n };
  c.error_kind = error;
  c.estimators = std::move(estimators);
  c.reps = reps;
  c.seed = seed;
  c.threads = 0;
  return c;
}

} // namespace

TEST_CASE("known weights do at least as well as estimated ones")
{
  // both get the ISE-optimal h; K and h0 are data driven for the estimated weights
  const auto report =
    run_monte_carlo(config(1, 1000, ErrorKind::Laplace, { EstimatorKind::OraclePi, EstimatorKind::CmTilde }, 100, 31));
  const auto& oracle = report.cell(1, 1000, EstimatorKind::OraclePi);
  const auto& cm = report.cell(1, 1000, EstimatorKind::CmTilde);
  MESSAGE("oracle median " << oracle.median << ", cm-tilde median " << cm.median);
  CHECK(oracle.failure_rate == 0.0);
  CHECK(cm.failure_rate <= 0.05);
  CHECK(oracle.median <= 1.1 * cm.median);
}

TEST_CASE("without measurement error naive and deconvolution estimators agree")
{
  const auto report =
    run_monte_carlo(config(1, 500, ErrorKind::None, { EstimatorKind::NvOptimal, EstimatorKind::CmOptimal }, 50, 32));
  const auto& nv = report.cell(1, 500, EstimatorKind::NvOptimal);
  const auto& cm = report.cell(1, 500, EstimatorKind::CmOptimal);
  MESSAGE("nv median " << nv.median << ", cm median " << cm.median);
  CHECK(nv.median <= 1.3 * cm.median);
  CHECK(cm.median <= 1.3 * nv.median);
}

TEST_CASE("quartiles are ordered and failures are recorded per replication")
{
  const auto report = run_monte_carlo(
    config(4, 250, ErrorKind::Gaussian, { EstimatorKind::NvTuned, EstimatorKind::CmTilde }, 10, 33));
  for (const auto& cell : report.cells) {
    CHECK(cell.ise.size() == 10);
    CHECK(cell.failures.size() == 10);
    CHECK(cell.q1 <= cell.median);
    CHECK(cell.median <= cell.q3);
    CHECK(cell.failure_rate < 0.5);
  }
}
