#pragma once

#include "adrf/random.hpp"
#include "adrf/types.hpp"

#include <string>

namespace adrf {

enum class ErrorKind
{
  Laplace,
  Gaussian,
  ReplicateEstimated,
  None,
};

const char* to_string(ErrorKind kind);
ErrorKind error_kind_from_string(const std::string& name);

//! Law of the additive measurement error U in S = T + U.
//!
//! All supported kinds have real, even, strictly positive characteristic
//! functions. A ReplicateEstimated model tabulates phi_U on [0, w_max] and
//! holds the value at `ridge_floor` past the first grid point where the
//! estimate drops below it (and past the end of the grid).
class ErrorModel
{
public:
  static ErrorModel none();
  static ErrorModel laplace(double variance);
  static ErrorModel gaussian(double variance);
  //! @param grid nonnegative increasing frequencies starting at 0.
  //! @param phi tabulated characteristic function on grid (phi(0) = 1).
  //! @param pair_differences replicate differences S1 - S2, used to draw
  //!   synthetic errors (random sign times difference / sqrt 2).
  static ErrorModel replicate_estimated(Vector grid,
                                        Vector phi,
                                        Vector pair_differences,
                                        double ridge_floor,
                                        bool floor_applied);

  ErrorKind kind() const { return kind_; }
  double variance() const { return variance_; }

  //! Characteristic function phi_U(w).
  double cf(double w) const;

  //! One draw of U.
  double draw(Rng& rng) const;

  const Vector& cf_grid() const { return grid_; }
  const Vector& cf_values() const { return phi_; }
  double ridge_floor() const { return ridge_floor_; }
  bool floor_applied() const { return floor_applied_; }
  const Vector& pair_differences() const { return differences_; }

private:
  ErrorModel(ErrorKind kind, double variance);

  ErrorKind kind_;
  double variance_;
  Vector grid_;
  Vector phi_;
  Vector differences_;
  double ridge_floor_ = 0.0;
  bool floor_applied_ = false;
};

} // namespace adrf
