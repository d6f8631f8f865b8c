#pragma once

#include "adrf/types.hpp"

#include <optional>
#include <string>

namespace adrf {

enum class CriterionKind
{
  ExponentialTilting,
  EmpiricalLikelihood,
  ContinuousUpdating,
  InverseLogistic,
};

const char* to_string(CriterionKind kind);
CriterionKind criterion_from_string(const std::string& name);

//! Concave increasing rho of the GEL family, with its first two derivatives.
//!
//!   ExponentialTilting   rho(v) = -exp(-v - 1)
//!   EmpiricalLikelihood  rho(v) = log(1 + v),      v > -1
//!   ContinuousUpdating   rho(v) = -(1 - v)^2 / 2,  restricted to v < 1
//!   InverseLogistic      rho(v) = v - exp(-v)
class GelCriterion
{
public:
  explicit GelCriterion(CriterionKind kind = CriterionKind::ExponentialTilting)
    : kind_(kind)
  {}

  CriterionKind kind() const { return kind_; }

  double rho(double v) const;
  double d1(double v) const;
  double d2(double v) const;
  bool in_domain(double v) const;

  //! rho(v + delta) - rho(v) without cancellation.
  double increment(double v, double delta) const;

  //! rho, rho' and rho'' at v with one transcendental evaluation.
  void evaluate(double v, double& r0, double& r1, double& r2) const;

  //! Value of the constant coordinate that makes every weight equal to one,
  //! i.e. (rho')^{-1}(1). InverseLogistic has rho' > 1 everywhere and uses 0.
  double unit_weight_argument() const;

private:
  CriterionKind kind_;
};

struct GelObjective
{
  double value;
  Vector gradient;
  Matrix hessian;
};

//! G(lambda) = sum_i rho(lambda' u_i) w~_i - lambda' u_bar with
//! w~ = kernel_w / sum(kernel_w) and u_bar the unweighted basis mean.
//! @throws Error(DomainViolation) naming the first out-of-domain index.
GelObjective objective(const Eigen::Ref<const Matrix>& basis,
                       const Eigen::Ref<const Vector>& kernel_w,
                       const GelCriterion& criterion,
                       const Eigen::Ref<const Vector>& lambda);

struct WeightFit
{
  double t = 0.0;
  Vector lambda;
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  double effective_kernel_mass = 0.0;
};

struct SolverOptions
{
  int max_iterations = 200;
  double tolerance = 1e-8;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_halvings = 60;
  //! Iterates with a larger norm are treated as divergence (objective
  //! unbounded above): the fit stops and is flagged unconverged.
  double max_lambda_norm = 1e6;
};

//! Damped Newton ascent for the local GEL dual. Holds the basis and its
//! column mean so repeated fits at different t share them.
class GelSolver
{
public:
  GelSolver(Matrix basis, GelCriterion criterion, SolverOptions options = {});

  //! @param kernel_w nonnegative (already truncated) kernel weights.
  //! @throws Error(AllWeightsZero) if they sum to zero.
  WeightFit fit(const Eigen::Ref<const Vector>& kernel_w,
                const std::optional<Vector>& init = std::nullopt) const;

  //! pi_hat(t, X_i) for every row of the basis.
  Vector weights(const WeightFit& fit) const;

  const Matrix& basis() const { return basis_; }
  const Vector& basis_mean() const { return mean_; }
  const GelCriterion& criterion() const { return criterion_; }
  Vector default_init() const;

private:
  Matrix basis_;
  Vector mean_;
  GelCriterion criterion_;
  SolverOptions options_;
};

WeightFit solve_lambda(const Eigen::Ref<const Matrix>& basis,
                       const Eigen::Ref<const Vector>& kernel_w,
                       const GelCriterion& criterion,
                       const std::optional<Vector>& init = std::nullopt);

//! pi_hat = rho'(lambda' u). Weights are clipped at 0 where lambda' u leaves
//! the criterion domain (v >= 1 for ContinuousUpdating, v <= -1 for
//! EmpiricalLikelihood; possible only at rows the fit gave zero kernel mass).
//! Clips are counted in clipped_weight_count().
double pi_hat(const WeightFit& fit, const GelCriterion& criterion, const Eigen::Ref<const Vector>& basis_row);

long long clipped_weight_count();

} // namespace adrf
