#pragma once

#include <cstdint>
#include <vector>

#include "intdiff/functions.hpp"
#include "intdiff/model.hpp"
#include "intdiff/simulate.hpp"

namespace intdiff {

/// One observation window of the Euler-Itô expansions
///   f(X_i) = f(X_{i-1}) + sqrt(Δ) f'(X_{i-1}) b(X_{i-1}) eps1 + eps2,
///   f(Y_i) = f(X_{i-1}) + sqrt(Δ) f'(X_{i-1}) b(X_{i-1}) xi1 + xi2.
struct EulerItoRecord {
  double eps1;
  double eps2;
  double xi1;
  double xi2;
};

/// Fills eps1 and eps2; xi1 and xi2 are NaN.
std::vector<EulerItoRecord> euler_ito_decompose_x(const TrajectoryBundle& bundle,
                                                  const SmoothFunction& f,
                                                  const DiffusionModel& model,
                                                  const ParamVector& theta);

/// Fills all four fields (eps from the X expansion of the same window).
/// xi1 weights each increment by the distance from the substep midpoint to
/// the window end, which is the exact Gaussian term of the trapezoid average.
std::vector<EulerItoRecord> euler_ito_decompose_y(const TrajectoryBundle& bundle,
                                                  const SmoothFunction& f,
                                                  const DiffusionModel& model,
                                                  const ParamVector& theta);

/// Var(xi1) under the midpoint weights with K substeps: 1/3 - 1/(12 K^2).
double xi1_variance(std::size_t substeps);

struct LineFit {
  double slope = 0;
  double intercept = 0;
};

/// Least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RemainderFitOptions {
  std::size_t substeps = 64;
  std::size_t bins = 20;
  std::size_t min_per_bin = 50;
  /// Windows simulated per path; longer runs are split into independent paths.
  std::size_t chunk = 50000;
};

struct RemainderFit {
  std::vector<double> deltas;
  std::vector<double> first_error;    // mean over bins of |bin mean(xi2 - Δ H f(X))|
  std::vector<double> second_moment;  // mean over bins of bin mean(xi2^2)
  LineFit first;                      // log first_error vs log Δ
  LineFit second;                     // log second_moment vs log Δ
};

/// Empirical order of the remainder in the f(Y) expansion. Bins are
/// stationary quantiles of X_{i-1}.
RemainderFit remainder_order_fit(const DiffusionModel& model, const ParamVector& theta,
                                 const SmoothFunction& f, const std::vector<double>& deltas,
                                 std::size_t n_per_delta, std::uint64_t seed,
                                 const RemainderFitOptions& options = {});

struct WindowMoments {
  std::size_t windows = 0;
  double mean_eps1 = 0;
  double var_eps1 = 0;
  double var_xi1 = 0;
  double mean_eps1_xi1 = 0;
};

/// Sample moments of (eps1, xi1) over the windows of a simulated path.
WindowMoments window_moments(const std::vector<EulerItoRecord>& records);

}  // namespace intdiff
