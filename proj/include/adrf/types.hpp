#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrf {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

//! Failure categories raised by the estimation pipeline.
enum class ErrorCode
{
  InvalidArgument,
  OverflowRisk,
  InsufficientReplicates,
  AllWeightsZero,
  DegenerateCovariate,
  BasisOverflow,
  DomainViolation,
  NotConverged,
  NoiseExceedsSignal,
  ExtrapolationDegenerate,
  DegenerateVariance,
  TooManySkipped,
  MalformedInput,
};

const char* to_string(ErrorCode code);

//! Exception carrying an ErrorCode; what() is prefixed with the code name.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message)
    , code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline void
require(bool condition, const std::string& message)
{
  if (!condition) {
    throw Error(ErrorCode::InvalidArgument, message);
  }
}

} // namespace adrf
