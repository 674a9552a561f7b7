#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "intdiff/model.hpp"

namespace intdiff {

struct SamplingScheme {
  std::size_t n = 0;
  double delta = 0;
  std::size_t substeps = 16;

  /// Throws PreconditionError unless n >= 2, delta > 0, substeps >= 2.
  void validate() const;
  double fine_dt() const { return delta / static_cast<double>(substeps); }
};

enum class Stepper {
  automatic,  // exact transition when the model exposes OU structure, else Milstein
  milstein,
  exact_ou,
};

struct SimulationOptions {
  Stepper stepper = Stepper::automatic;
  /// Fixed initial state; otherwise X_0 is drawn from the stationary law.
  std::optional<double> x0;
};

struct TrajectoryBundle {
  std::vector<double> x_fine;  // nK + 1 points, mesh delta / K
  std::vector<double> db;      // nK Brownian increments
  std::vector<double> y;       // n integrated observations
  std::vector<double> x_obs;   // X at i * delta, n + 1 points
  SamplingScheme scheme;
  std::uint64_t seed = 0;
  /// Substeps where the state left (l, r) and was put back at distance 1e-12.
  std::size_t boundary_hits = 0;
};

TrajectoryBundle simulate_path(const DiffusionModel& model, const ParamVector& theta,
                               const SamplingScheme& scheme, std::uint64_t seed,
                               const SimulationOptions& options = {});

/// Same observations as simulate_path with the same arguments, without
/// storing the fine path or increments.
std::vector<double> simulate_observations(const DiffusionModel& model, const ParamVector& theta,
                                          const SamplingScheme& scheme, std::uint64_t seed,
                                          const SimulationOptions& options = {});

/// Milstein path driven by caller-supplied increments (length nK).
TrajectoryBundle simulate_from_increments(const DiffusionModel& model, const ParamVector& theta,
                                          const SamplingScheme& scheme, double x0,
                                          const std::vector<double>& db);

/// Draw from the stationary law: exact Gaussian for OU structure, inverse
/// CDF on the quadrature grid otherwise.
double draw_stationary(const DiffusionModel& model, const ParamVector& theta, std::uint64_t seed);

/// Window-wise trapezoid average of a fine path.
std::vector<double> integrate_windows(const std::vector<double>& x_fine, std::size_t n,
                                      std::size_t substeps);

}  // namespace intdiff
