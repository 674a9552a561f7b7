#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "intdiff/functions.hpp"
#include "intdiff/model.hpp"
#include "intdiff/pbef.hpp"
#include "intdiff/simulate.hpp"

namespace intdiff {

struct GridPoint {
  std::size_t n = 0;
  double delta = 0;
  std::size_t substeps = 16;

  double horizon() const { return static_cast<double>(n) * delta; }
  SamplingScheme scheme() const { return {n, delta, substeps}; }
};

enum class InitRule { truth, fixed };

struct ExperimentConfig {
  DiffusionModel model = ou_model();
  ParamVector theta0;
  /// theta_fixed is overwritten with theta0.
  EstimatorSpec estimator;
  std::vector<GridPoint> grid;
  std::size_t replications = 500;
  std::uint64_t seed = 0;
  InitRule init_rule = InitRule::truth;
  std::vector<double> init;  // free parameters, used with InitRule::fixed
  unsigned threads = 1;
  Stepper stepper = Stepper::automatic;
  /// Fraction of failed replications above which a grid point is invalid.
  double max_failure_rate = 0.05;
};

struct ReplicationRecord {
  std::size_t grid_id = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::vector<double> theta_hat;  // free parameters; best iterate when not converged
  bool converged = false;
  std::vector<double> z;  // sqrt(nΔ) Σ^-1/2 (θ̂ - θ0); NaN when not converged
  std::string error;      // error code of a failed replication
};

struct GridSummary {
  std::size_t grid_id = 0;
  GridPoint point;
  std::size_t replications = 0;
  std::size_t converged = 0;
  std::size_t failed = 0;
  double n_delta2 = 0;  // rate flag for q = 1
  double n_delta3 = 0;  // rate flag for q = 0
  bool horizon_ok = true;  // nΔ >= 10
  Eigen::VectorXd bias;      // mean of θ̂ - θ0
  double rmse = 0;           // sqrt(mean ||θ̂ - θ0||^2)
  Eigen::VectorXd mean_z;
  Eigen::MatrixXd cov_z;     // sample covariance, divisor (m - 1)
  Eigen::VectorXd ks;        // NaN when undefined
  bool ks_defined = false;   // needs at least two converged replications
};

struct StudyReport {
  std::vector<std::string> free_names;
  std::vector<double> theta0_free;
  Eigen::MatrixXd sigma;        // theoretical asymptotic covariance at θ0
  Eigen::MatrixXd sigma_inv_sqrt;
  std::vector<GridSummary> grid;
  std::vector<ReplicationRecord> records;  // ordered by (grid_id, rep)
};

/// Seed of replication `rep` at grid point `grid_id`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t grid_id, std::size_t rep);

/// Theoretical covariance of sqrt(nΔ)(θ̂ - θ0) for the configured estimator.
Eigen::MatrixXd theoretical_covariance(const ExperimentConfig& config);

/// Symmetric inverse square root; throws DegeneratePredictorError unless
/// the matrix is positive definite.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sigma);

/// Kolmogorov-Smirnov distance of a sample to the standard normal.
double ks_normal(std::vector<double> sample);

/// Throws InvalidStudyError if any grid point fails more than the allowed
/// fraction of replications.
StudyReport run_study(const ExperimentConfig& config);

struct RateStudy {
  StudyReport report;
  double slope = 0;
  /// "log(n*delta)", or "log(n)" when all grid points share the same horizon.
  std::string regressor;
};

/// Least-squares slope of log RMSE against log(nΔ). Needs >= 3 grid points.
RateStudy rate_study(const ExperimentConfig& config);
double rate_slope(const std::vector<GridSummary>& grid, std::string* regressor = nullptr);

struct FunctionalCltResult {
  double mean_z = 0;
  double var_z = 0;
  double ks = 0;
  double v0 = 0;
  double n_delta3 = 0;
  std::vector<double> z;
};

/// z_m = sqrt(nΔ) mean(f*(Y_i)) / sqrt(V0(f*)) over M stationary replications.
FunctionalCltResult functional_clt_check(const DiffusionModel& model, const ParamVector& theta0,
                                         const SmoothFunction& f, const SamplingScheme& scheme,
                                         std::size_t replications, std::uint64_t seed,
                                         unsigned threads = 1);

/// Runs body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace intdiff
