#include "adrf/gel_weights.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <vector>

namespace adrf {

namespace {

std::atomic<long long> g_clips{ 0 };

constexpr double kHessianRidge = 1e-10;

// Rows with positive kernel weight, gathered with their normalised weights.
struct ActiveSet
{
  Matrix basis;
  Vector weight;
  double mass = 0.0;
};

ActiveSet
gather_active(const Eigen::Ref<const Matrix>& basis, const Eigen::Ref<const Vector>& kernel_w)
{
  require(kernel_w.size() == basis.rows(), "kernel weights and basis rows differ in length");
  double sum = 0.0;
  Index count = 0;
  for (Index i = 0; i < kernel_w.size(); ++i) {
    require(kernel_w(i) >= 0.0, "GEL kernel weights must be nonnegative (truncate first)");
    if (kernel_w(i) > 0.0) {
      sum += kernel_w(i);
      ++count;
    }
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::AllWeightsZero, "kernel weights sum to zero");
  }
  ActiveSet active;
  active.basis.resize(count, basis.cols());
  active.weight.resize(count);
  active.mass = sum;
  Index row = 0;
  for (Index i = 0; i < kernel_w.size(); ++i) {
    if (kernel_w(i) > 0.0) {
      active.basis.row(row) = basis.row(i);
      active.weight(row) = kernel_w(i) / sum;
      ++row;
    }
  }
  return active;
}

// Objective value with rho' and rho'' cached per row; NaN when some index
// leaves the domain.
struct Evaluation
{
  Vector index;
  Vector d1;
  Vector d2;
};

double
objective_value(const ActiveSet& active,
                const Vector& mean,
                const GelCriterion& criterion,
                const Vector& lambda,
                Evaluation& eval)
{
  const Index n = active.basis.rows();
  eval.index.noalias() = active.basis * lambda;
  eval.d1.resize(n);
  eval.d2.resize(n);
  double value = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double v = eval.index(i);
    if (!criterion.in_domain(v)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    double r0;
    criterion.evaluate(v, r0, eval.d1(i), eval.d2(i));
    value += r0 * active.weight(i);
  }
  return value - lambda.dot(mean);
}

void
derivatives(const ActiveSet& active, const Vector& mean, const Evaluation& eval, Vector& gradient, Matrix& hessian)
{
  const Vector g1 = eval.d1.cwiseProduct(active.weight);
  const Vector g2 = eval.d2.cwiseProduct(active.weight);
  gradient.noalias() = active.basis.transpose() * g1;
  gradient -= mean;
  hessian.noalias() = active.basis.transpose() * g2.asDiagonal() * active.basis;
}

// Solves (-H) d = g, adding a ridge when -H is not positive definite.
Vector
newton_direction(const Matrix& hessian, const Vector& gradient)
{
  const Index k = hessian.rows();
  Matrix neg = -hessian;
  double ridge = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::LDLT<Matrix> ldlt(neg + ridge * Matrix::Identity(k, k));
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 0.0).all()) {
      Vector d = ldlt.solve(gradient);
      if (d.allFinite()) {
        return d;
      }
    }
    ridge = ridge == 0.0 ? kHessianRidge : ridge * 100.0;
  }
  return gradient;
}

} // namespace

const char*
to_string(CriterionKind kind)
{
  switch (kind) {
    case CriterionKind::ExponentialTilting:
      return "et";
    case CriterionKind::EmpiricalLikelihood:
      return "el";
    case CriterionKind::ContinuousUpdating:
      return "cue";
    case CriterionKind::InverseLogistic:
      return "ilog";
  }
  return "unknown";
}

CriterionKind
criterion_from_string(const std::string& name)
{
  if (name == "et") {
    return CriterionKind::ExponentialTilting;
  }
  if (name == "el") {
    return CriterionKind::EmpiricalLikelihood;
  }
  if (name == "cue") {
    return CriterionKind::ContinuousUpdating;
  }
  if (name == "ilog") {
    return CriterionKind::InverseLogistic;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown criterion '" + name + "'");
}

double
GelCriterion::rho(double v) const
{
  switch (kind_) {
    case CriterionKind::ExponentialTilting:
      return -std::exp(-v - 1.0);
    case CriterionKind::EmpiricalLikelihood:
      return std::log1p(v);
    case CriterionKind::ContinuousUpdating:
      return -0.5 * (1.0 - v) * (1.0 - v);
    case CriterionKind::InverseLogistic:
      return v - std::exp(-v);
  }
  return 0.0;
}

double
GelCriterion::d1(double v) const
{
  switch (kind_) {
    case CriterionKind::ExponentialTilting:
      return std::exp(-v - 1.0);
    case CriterionKind::EmpiricalLikelihood:
      return 1.0 / (1.0 + v);
    case CriterionKind::ContinuousUpdating:
      return 1.0 - v;
    case CriterionKind::InverseLogistic:
      return 1.0 + std::exp(-v);
  }
  return 0.0;
}

double
GelCriterion::d2(double v) const
{
  switch (kind_) {
    case CriterionKind::ExponentialTilting:
      return -std::exp(-v - 1.0);
    case CriterionKind::EmpiricalLikelihood:
      return -1.0 / ((1.0 + v) * (1.0 + v));
    case CriterionKind::ContinuousUpdating:
      return -1.0;
    case CriterionKind::InverseLogistic:
      return -std::exp(-v);
  }
  return 0.0;
}

double
GelCriterion::increment(double v, double delta) const
{
  switch (kind_) {
    case CriterionKind::ExponentialTilting:
      return -std::exp(-v - 1.0) * std::expm1(-delta);
    case CriterionKind::EmpiricalLikelihood:
      return std::log1p(delta / (1.0 + v));
    case CriterionKind::ContinuousUpdating:
      return delta * (1.0 - v - 0.5 * delta);
    case CriterionKind::InverseLogistic:
      return delta - std::exp(-v) * std::expm1(-delta);
  }
  return 0.0;
}

void
GelCriterion::evaluate(double v, double& r0, double& r1, double& r2) const
{
  switch (kind_) {
    case CriterionKind::ExponentialTilting: {
      const double e = std::exp(-v - 1.0);
      r0 = -e;
      r1 = e;
      r2 = -e;
      return;
    }
    case CriterionKind::EmpiricalLikelihood: {
      const double inv = 1.0 / (1.0 + v);
      r0 = std::log1p(v);
      r1 = inv;
      r2 = -inv * inv;
      return;
    }
    case CriterionKind::ContinuousUpdating:
      r0 = -0.5 * (1.0 - v) * (1.0 - v);
      r1 = 1.0 - v;
      r2 = -1.0;
      return;
    case CriterionKind::InverseLogistic: {
      const double e = std::exp(-v);
      r0 = v - e;
      r1 = 1.0 + e;
      r2 = -e;
      return;
    }
  }
}

bool
GelCriterion::in_domain(double v) const
{
  if (!std::isfinite(v)) {
    return false;
  }
  switch (kind_) {
    case CriterionKind::EmpiricalLikelihood:
      return v > -1.0;
    case CriterionKind::ContinuousUpdating:
      return v < 1.0;
    case CriterionKind::ExponentialTilting:
      return v > -700.0;
    case CriterionKind::InverseLogistic:
      return v > -700.0;
  }
  return true;
}

double
GelCriterion::unit_weight_argument() const
{
  switch (kind_) {
    case CriterionKind::ExponentialTilting:
      return -1.0;
    case CriterionKind::EmpiricalLikelihood:
    case CriterionKind::ContinuousUpdating:
      return 0.0;
    case CriterionKind::InverseLogistic:
      return 0.0;
  }
  return 0.0;
}

GelObjective
objective(const Eigen::Ref<const Matrix>& basis,
          const Eigen::Ref<const Vector>& kernel_w,
          const GelCriterion& criterion,
          const Eigen::Ref<const Vector>& lambda)
{
  require(lambda.size() == basis.cols(), "lambda length must equal the basis dimension");
  const Vector mean = basis.colwise().mean().transpose();
  const ActiveSet active = gather_active(basis, kernel_w);
  const Vector lam = lambda;
  const Vector index = active.basis * lam;
  Index active_row = 0;
  for (Index i = 0; i < kernel_w.size(); ++i) {
    if (kernel_w(i) > 0.0) {
      if (!criterion.in_domain(index(active_row))) {
        throw Error(ErrorCode::DomainViolation,
                    "lambda'u outside the criterion domain at observation " + std::to_string(i));
      }
      ++active_row;
    }
  }
  GelObjective out;
  Evaluation eval;
  out.value = objective_value(active, mean, criterion, lam, eval);
  derivatives(active, mean, eval, out.gradient, out.hessian);
  return out;
}

GelSolver::GelSolver(Matrix basis, GelCriterion criterion, SolverOptions options)
  : basis_(std::move(basis))
  , criterion_(criterion)
  , options_(options)
{
  require(basis_.rows() > 0 && basis_.cols() > 0, "GEL basis must be nonempty");
  mean_ = basis_.colwise().mean().transpose();
}

Vector
GelSolver::default_init() const
{
  Vector init = Vector::Zero(basis_.cols());
  init(0) = criterion_.unit_weight_argument();
  return init;
}

WeightFit
GelSolver::fit(const Eigen::Ref<const Vector>& kernel_w, const std::optional<Vector>& init) const
{
  const ActiveSet active = gather_active(basis_, kernel_w);
  WeightFit result;
  result.effective_kernel_mass = active.mass / static_cast<double>(kernel_w.size());
  Vector lambda = init ? *init : default_init();
  require(lambda.size() == basis_.cols(), "initial lambda has the wrong length");

  Evaluation eval;
  double value = objective_value(active, mean_, criterion_, lambda, eval);
  if (!std::isfinite(value)) {
    // start outside the domain: fall back to the unit-weight point
    lambda = default_init();
    value = objective_value(active, mean_, criterion_, lambda, eval);
  }
  Vector gradient;
  Matrix hessian;
  derivatives(active, mean_, eval, gradient, hessian);

  Vector candidate(lambda.size());
  Evaluation candidate_eval;
  double candidate_value = value;
  int iter = 0;
  for (; iter < options_.max_iterations; ++iter) {
    if (gradient.norm() <= options_.tolerance * (1.0 + std::abs(value))) {
      result.converged = true;
      break;
    }
    const Vector direction = newton_direction(hessian, gradient);
    const double slope = gradient.dot(direction);
    const Vector along = active.basis * direction;
    const double along_mean = direction.dot(mean_);
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < options_.max_halvings; ++halving) {
      // Armijo test on the increment, summed termwise to avoid cancellation
      double gain = -step * along_mean;
      bool inside = true;
      for (Index i = 0; i < along.size(); ++i) {
        const double v = eval.index(i);
        const double delta = step * along(i);
        if (!criterion_.in_domain(v + delta)) {
          inside = false;
          break;
        }
        gain += criterion_.increment(v, delta) * active.weight(i);
      }
      if (inside && gain >= options_.armijo * step * slope) {
        candidate = lambda + step * direction;
        candidate_value = objective_value(active, mean_, criterion_, candidate, candidate_eval);
        accepted = std::isfinite(candidate_value);
        break;
      }
      step *= options_.shrink;
    }
    if (!accepted) {
      break;
    }
    lambda = candidate;
    std::swap(eval, candidate_eval);
    value = candidate_value;
    derivatives(active, mean_, eval, gradient, hessian);
    if (lambda.norm() > options_.max_lambda_norm) {
      result.diverged = true;
      break;
    }
  }
  if (!result.converged && !result.diverged && gradient.norm() <= options_.tolerance * (1.0 + std::abs(value))) {
    result.converged = true;
  }
  result.lambda = std::move(lambda);
  result.iterations = iter;
  result.objective = value;
  result.gradient_norm = gradient.norm();
  return result;
}

Vector
GelSolver::weights(const WeightFit& fit) const
{
  Vector w(basis_.rows());
  for (Index i = 0; i < basis_.rows(); ++i) {
    w(i) = pi_hat(fit, criterion_, basis_.row(i).transpose());
  }
  return w;
}

WeightFit
solve_lambda(const Eigen::Ref<const Matrix>& basis,
             const Eigen::Ref<const Vector>& kernel_w,
             const GelCriterion& criterion,
             const std::optional<Vector>& init)
{
  return GelSolver(basis, criterion).fit(kernel_w, init);
}

double
pi_hat(const WeightFit& fit, const GelCriterion& criterion, const Eigen::Ref<const Vector>& basis_row)
{
  const double v = fit.lambda.dot(basis_row);
  if ((criterion.kind() == CriterionKind::ContinuousUpdating && v >= 1.0) ||
      (criterion.kind() == CriterionKind::EmpiricalLikelihood && v <= -1.0)) {
    g_clips.fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  return criterion.d1(v);
}

long long
clipped_weight_count()
{
  return g_clips.load();
}

} // namespace adrf
