#include "adrf/error_model.hpp"

#include <algorithm>
#include <cmath>

namespace adrf {

const char*
to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidArgument:
      return "InvalidArgument";
    case ErrorCode::OverflowRisk:
      return "OverflowRisk";
    case ErrorCode::InsufficientReplicates:
      return "InsufficientReplicates";
    case ErrorCode::AllWeightsZero:
      return "AllWeightsZero";
    case ErrorCode::DegenerateCovariate:
      return "DegenerateCovariate";
    case ErrorCode::BasisOverflow:
      return "BasisOverflow";
    case ErrorCode::DomainViolation:
      return "DomainViolation";
    case ErrorCode::NotConverged:
      return "NotConverged";
    case ErrorCode::NoiseExceedsSignal:
      return "NoiseExceedsSignal";
    case ErrorCode::ExtrapolationDegenerate:
      return "ExtrapolationDegenerate";
    case ErrorCode::DegenerateVariance:
      return "DegenerateVariance";
    case ErrorCode::TooManySkipped:
      return "TooManySkipped";
    case ErrorCode::MalformedInput:
      return "MalformedInput";
  }
  return "Unknown";
}

const char*
to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::Laplace:
      return "laplace";
    case ErrorKind::Gaussian:
      return "gaussian";
    case ErrorKind::ReplicateEstimated:
      return "replicate";
    case ErrorKind::None:
      return "none";
  }
  return "unknown";
}

ErrorKind
error_kind_from_string(const std::string& name)
{
  if (name == "laplace") {
    return ErrorKind::Laplace;
  }
  if (name == "gaussian" || name == "normal") {
    return ErrorKind::Gaussian;
  }
  if (name == "replicate") {
    return ErrorKind::ReplicateEstimated;
  }
  if (name == "none") {
    return ErrorKind::None;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown error kind '" + name + "'");
}

ErrorModel::ErrorModel(ErrorKind kind, double variance)
  : kind_(kind)
  , variance_(variance)
{
  require(std::isfinite(variance) && variance >= 0.0,
          "error variance must be finite and nonnegative");
}

ErrorModel
ErrorModel::none()
{
  return ErrorModel(ErrorKind::None, 0.0);
}

ErrorModel
ErrorModel::laplace(double variance)
{
  require(variance > 0.0, "Laplace error needs positive variance");
  return ErrorModel(ErrorKind::Laplace, variance);
}

ErrorModel
ErrorModel::gaussian(double variance)
{
  require(variance > 0.0, "Gaussian error needs positive variance");
  return ErrorModel(ErrorKind::Gaussian, variance);
}

ErrorModel
ErrorModel::replicate_estimated(Vector grid,
                                Vector phi,
                                Vector pair_differences,
                                double ridge_floor,
                                bool floor_applied)
{
  require(grid.size() >= 2 && grid.size() == phi.size(),
          "tabulated characteristic function needs matching grid and values");
  require(grid(0) == 0.0, "tabulation grid must start at 0");
  require(ridge_floor > 0.0 && ridge_floor < 1.0, "ridge floor must be in (0, 1)");
  double var = 0.0;
  if (pair_differences.size() > 0) {
    var = pair_differences.squaredNorm() / (2.0 * pair_differences.size());
  }
  ErrorModel model(ErrorKind::ReplicateEstimated, var);
  model.grid_ = std::move(grid);
  model.phi_ = std::move(phi);
  model.differences_ = std::move(pair_differences);
  model.ridge_floor_ = ridge_floor;
  model.floor_applied_ = floor_applied;
  return model;
}

double
ErrorModel::cf(double w) const
{
  switch (kind_) {
    case ErrorKind::None:
      return 1.0;
    case ErrorKind::Laplace:
      return 1.0 / (1.0 + 0.5 * variance_ * w * w);
    case ErrorKind::Gaussian:
      return std::exp(-0.5 * variance_ * w * w);
    case ErrorKind::ReplicateEstimated:
      break;
  }
  const double a = std::abs(w);
  const Index n = grid_.size();
  if (a >= grid_(n - 1)) {
    return phi_(n - 1);
  }
  const auto* begin = grid_.data();
  const auto* it = std::upper_bound(begin, begin + n, a);
  const Index hi = it - begin;
  const Index lo = hi - 1;
  const double frac = (a - grid_(lo)) / (grid_(hi) - grid_(lo));
  return phi_(lo) + frac * (phi_(hi) - phi_(lo));
}

double
ErrorModel::draw(Rng& rng) const
{
  switch (kind_) {
    case ErrorKind::None:
      return 0.0;
    case ErrorKind::Laplace: {
      const double scale = std::sqrt(0.5 * variance_);
      std::uniform_real_distribution<double> unif(-0.5, 0.5);
      double u = unif(rng);
      while (std::abs(u) >= 0.5) {
        u = unif(rng);
      }
      const double sign = u < 0.0 ? -1.0 : 1.0;
      return -scale * sign * std::log1p(-2.0 * std::abs(u));
    }
    case ErrorKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, std::sqrt(variance_));
      return normal(rng);
    }
    case ErrorKind::ReplicateEstimated: {
      require(differences_.size() > 0, "replicate model has no stored differences");
      std::uniform_int_distribution<Index> pick(0, differences_.size() - 1);
      std::bernoulli_distribution coin(0.5);
      const double d = differences_(pick(rng)) / std::sqrt(2.0);
      return coin(rng) ? d : -d;
    }
  }
  return 0.0;
}

} // namespace adrf
