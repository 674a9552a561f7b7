#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "intdiff/functions.hpp"
#include "intdiff/invariant.hpp"
#include "intdiff/model.hpp"
#include "intdiff/solver.hpp"

namespace intdiff {

enum class CoeffMode { exact, expansion, monte_carlo };

std::string to_string(CoeffMode mode);
CoeffMode coeff_mode_from_string(const std::string& s);

/// First-order expansions of the moments that determine the projection:
///   [E f(Y1)]^2 ≈ μ(f)^2 + Δ M0,  E f(Y1)^2 ≈ μ(f^2) + Δ M1,
///   E f(Y1) f(Y2) ≈ μ(f^2) + Δ M2.
struct MomentExpansion {
  double m0 = 0, m1 = 0, m2 = 0;
  double ef_sq = 0;
  double ef2 = 0;
  double eff = 0;
};

MomentExpansion moment_expansions(const PredictorMoments& pm, double delta);
MomentExpansion moment_expansions(const DiffusionModel& model, const ParamVector& theta,
                                  double delta, const SmoothFunction& f);

struct CoefficientVector {
  double a0 = 0;
  double a1 = 1;
  double delta = 0;
  CoeffMode mode = CoeffMode::expansion;
};

/// a1 = 1 + Δ K_f, a0 = -Δ K_f μ(f).
CoefficientVector coeffs_expansion(const PredictorMoments& pm, double delta);
CoefficientVector coeffs_expansion(const DiffusionModel& model, const ParamVector& theta,
                                   double delta, const SmoothFunction& f);

/// Stationary moments of f(Y1), f(Y1)^2 and f(Y1) f(Y2) at a fixed Δ.
struct YMoments {
  double ef = 0;
  double ef2 = 0;
  double eff = 0;
};

struct MomentProvider {
  std::string name;
  CoeffMode mode = CoeffMode::exact;
  double delta = 0;
  std::function<YMoments(const ParamVector&)> moments;

  double ef(const ParamVector& t) const { return moments(t).ef; }
  double ef2(const ParamVector& t) const { return moments(t).ef2; }
  double eff(const ParamVector& t) const { return moments(t).eff; }
};

/// a1 = (eff - ef^2) / (ef2 - ef^2), a0 = ef (1 - a1).
CoefficientVector coeffs_exact(const MomentProvider& provider, const ParamVector& theta);
CoefficientVector coeffs_from_moments(const YMoments& m, double delta, CoeffMode mode);

/// Closed-form Gaussian moments of the integrated OU process, registered for
/// polynomial f of degree at most two on models with OU structure.
std::optional<MomentProvider> exact_provider(const DiffusionModel& model, const SmoothFunction& f,
                                             double delta);

/// Stationary integrated-OU variance and lag-one covariance of Y.
struct IntegratedOuMoments {
  double mean = 0;
  double var = 0;
  double cov = 0;
};
IntegratedOuMoments integrated_ou_moments(double alpha, double mean, double sigma, double delta);

struct McMoments {
  YMoments m;
  YMoments se;  // Monte Carlo standard errors
  std::size_t pairs = 0;
};

/// Independent stationary (Y1, Y2) pairs simulated with K substeps.
McMoments monte_carlo_moments(const DiffusionModel& model, const ParamVector& theta,
                              const SmoothFunction& f, double delta, std::size_t pairs,
                              std::uint64_t seed, std::size_t substeps = 16);

MomentProvider monte_carlo_provider(const DiffusionModel& model, const SmoothFunction& f,
                                    double delta, std::size_t pairs = 100000,
                                    std::uint64_t seed = 0x5eedULL, std::size_t substeps = 16);

/// Coefficients for the requested mode. Exact mode needs a registered provider.
CoefficientVector coefficients(const DiffusionModel& model, const ParamVector& theta, double delta,
                               const SmoothFunction& f, CoeffMode mode,
                               const MomentProvider* provider = nullptr);

/// m(θ) = μ(f) + Δ μ(H f), or μ(f) alone when `corrected` is false.
double simple_mean(const DiffusionModel& model, const ParamVector& theta, double delta,
                   const SmoothFunction& f, bool corrected = true);

/// Σ [f(y_i) - m(θ)].
double gn_simple(const ParamVector& theta, const std::vector<double>& y, double delta,
                 const DiffusionModel& model, const SmoothFunction& f, bool corrected = true);

/// Sufficient statistics of the one-lag estimating function.
struct OnelagStats {
  double s1 = 0;   // Σ_{i>=2} f(y_i)
  double s0 = 0;   // Σ_{i>=2} f(y_{i-1})
  double s00 = 0;  // Σ_{i>=2} f(y_{i-1})^2
  double s01 = 0;  // Σ_{i>=2} f(y_{i-1}) f(y_i)
  double count = 0;

  static OnelagStats from(const std::vector<double>& y, const SmoothFunction& f);
};

Eigen::Vector2d gn_onelag(const OnelagStats& stats, const CoefficientVector& c);
Eigen::Vector2d gn_onelag(const ParamVector& theta, const std::vector<double>& y, double delta,
                          const DiffusionModel& model, const SmoothFunction& f, CoeffMode mode,
                          const MomentProvider* provider = nullptr);
/// Literal sum over i; agrees with the sufficient-statistic form.
Eigen::Vector2d gn_onelag_direct(const std::vector<double>& y, const SmoothFunction& f,
                                 const CoefficientVector& c);

/// Which parameters are estimated; the rest are held at `theta_fixed`.
struct EstimatorSpec {
  SmoothFunction f = SmoothFunction::monomial(2);
  int q = 1;
  CoeffMode mode = CoeffMode::expansion;
  bool corrected_mean = true;
  ParamVector theta_fixed;
  std::vector<std::size_t> free;
  Bounds bounds;  // over the free parameters
  SolverOptions solver;
};

struct Estimate {
  EstimatorResult result;
  ParamVector theta;  // full parameter vector at the root
};

/// Solves G_n(θ) = 0 on y. `init` covers the free parameters.
Estimate estimate(const DiffusionModel& model, const EstimatorSpec& spec,
                  const std::vector<double>& y, double delta, const std::vector<double>& init,
                  const MomentProvider* provider = nullptr);

}  // namespace intdiff
