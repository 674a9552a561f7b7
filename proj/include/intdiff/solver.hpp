#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace intdiff {

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  /// Throws PreconditionError unless sizes match and lower < upper.
  void validate(std::size_t dim) const;
  bool contains(const Eigen::VectorXd& theta) const;
};

struct SolverOptions {
  double fd_relative_step = 1e-6;
  int max_halvings = 30;
  int max_iterations = 100;
  double tolerance = 1e-8;  // on ||G|| relative to 1 + ||G(θ_init)||
  double step_tolerance = 1e-12;
  /// When false the 3^d grid is only tried if the initial start fails.
  bool full_multistart = true;
};

struct EstimatorResult {
  std::vector<double> theta_hat;
  double gn_norm = 0;
  int iterations = 0;
  bool converged = false;
  /// 0 for θ_init, k >= 1 for the k-th grid start.
  int multistart_origin = 0;
};

using EstimatingFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFunction = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Damped Newton with multistart. Returns the converged root closest to
/// θ_init; throws NoRootError carrying the best iterate if none converges.
EstimatorResult solve(const EstimatingFunction& gn, const JacobianFunction& jacobian,
                      const Eigen::VectorXd& theta_init, const Bounds& bounds,
                      const SolverOptions& options = {});

/// Central-difference Jacobian, one-sided where a bound is in the way.
Eigen::MatrixXd fd_jacobian(const EstimatingFunction& gn, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& g_at_theta, const Bounds& bounds,
                            double relative_step);

}  // namespace intdiff
