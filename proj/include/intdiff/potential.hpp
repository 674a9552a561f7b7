#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "intdiff/functions.hpp"
#include "intdiff/invariant.hpp"
#include "intdiff/model.hpp"

namespace intdiff {

/// f - μ_θ(f)
SmoothFunction center(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f);

/// Solution of the Poisson equation L u = -f* for centered f*, tabulated on
/// the quadrature grid of the invariant measure.
struct PotentialSolution {
  std::shared_ptr<const InvariantMeasure> measure;
  std::vector<double> fstar;    // f* at the nodes
  std::vector<double> u_prime;  // U(f*)' at the nodes
  std::vector<double> u;        // U(f*) at the nodes, μ(u) = 0
  double mean_fstar = 0;        // μ(f*) before recentring on the grid
  double mean_u = 0;            // μ(u) after recentring
  /// max |L u + f*| / (1 + |f*|) over nodes where the density is at least
  /// 1e-6 of its maximum.
  double poisson_residual = 0;

  double u_prime_at(double x) const { return measure->grid().interpolate(u_prime, x); }
  double u_at(double x) const { return measure->grid().interpolate(u, x); }
};

/// u' = -2 ∫_l^x f* dμ / (b^2 μ). Throws PreconditionError if |μ(f*)| > 1e-8.
PotentialSolution potential_derivative(const DiffusionModel& model, const ParamVector& theta,
                                       const SmoothFunction& fstar);

/// Same from nodal values of f* on an existing measure; f* is recentred on
/// the grid without a tolerance check.
PotentialSolution solve_potential(std::shared_ptr<const InvariantMeasure> measure,
                                  std::vector<double> fstar);

struct ScalarAvar {
  double v0 = 0;      // μ((u' b)^2)
  double v0_alt = 0;  // 2 μ(f* u)
  double mu_f = 0;
  double poisson_residual = 0;
};

/// Asymptotic variance of n^-1/2 Δ^1/2 Σ f*(Y_i), centring f internally.
ScalarAvar avar_scalar(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f);

struct LimitObjects {
  Eigen::Vector2d gamma;  // γ(θ0; θ)
  Eigen::MatrixXd w;      // W(θ), 2 x d over the free parameters
  Eigen::MatrixXd w0;     // W(θ0)
  Eigen::Matrix2d v0;     // V0(f)
  /// W(θ0)^-1 V0 W(θ0)^-T when d = 2 and W(θ0) is invertible.
  std::optional<Eigen::Matrix2d> sigma;
  double w0_condition = 0;
  bool w0_singular = false;  // condition number above 1e10
  double k0 = 0, k_theta = 0;
  SmoothFunction f1star = SmoothFunction::constant(0);
  SmoothFunction f2star = SmoothFunction::constant(0);
  double poisson_residual = 0;  // worst of the two potential solves
};

/// Free parameter indices default to all parameters.
LimitObjects limit_objects(const DiffusionModel& model, const ParamVector& theta0,
                           const ParamVector& theta, const SmoothFunction& f,
                           std::vector<std::size_t> free = {});

/// ∂_θ of θ -> (K_f(θ) μ_θ(f), K_f(θ)) by central differences with step
/// 1e-5 max(|θ_j|, 1); returns [[∂(Kμ)], [-∂K]] over `free`.
Eigen::MatrixXd a_matrix(const DiffusionModel& model, const ParamVector& theta,
                         const SmoothFunction& f, const std::vector<std::size_t>& free);

/// ∂ μ_θ(f) / ∂θ_j by central differences.
double d_mu_dtheta(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f,
                   std::size_t j);

/// Asymptotic variance of sqrt(nΔ)(θ̂ - θ0) for the q = 0 estimator with one
/// free parameter: V0(f) / (∂_θ μ_θ(f))^2.
double q0_asymptotic_variance(const DiffusionModel& model, const ParamVector& theta0,
                              const SmoothFunction& f, std::size_t free_index);

/// Grid scan of ||γ(θ0; θ)|| over θ in a box around θ0 (free parameters only).
struct GammaScanPoint {
  std::vector<double> theta;
  Eigen::Vector2d gamma;
};
std::vector<GammaScanPoint> gamma_scan(const DiffusionModel& model, const ParamVector& theta0,
                                       const SmoothFunction& f, const std::vector<std::size_t>& free,
                                       double relative_halfwidth, std::size_t points_per_axis);

}  // namespace intdiff
