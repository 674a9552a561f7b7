#pragma once

#include <vector>

#include "intdiff/functions.hpp"
#include "intdiff/model.hpp"
#include "intdiff/quadrature.hpp"

namespace intdiff {

struct QuadratureOptions {
  int panels = 32;
  /// Panels graded geometrically toward each finite boundary.
  int graded_panels = 12;
  /// Truncation: unnormalized density at each cut relative to its maximum.
  double cut_ratio = 1e-12;
};

/// Stationary law of a scalar diffusion from the speed density
/// m(x) ∝ b^-2 exp(∫ 2a/b^2), tabulated on a composite Gauss-Legendre grid
/// over a truncated interval [l_eps, r_eps].
class InvariantMeasure {
 public:
  InvariantMeasure(CompositeGrid grid, std::vector<double> log_density, double log_normalizer,
                   std::vector<double> drift, std::vector<double> diffusion, double mode,
                   double tail_mass);

  const CompositeGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& nodes() const noexcept { return grid_.nodes(); }
  /// Normalized density at the nodes.
  const std::vector<double>& density() const noexcept { return density_; }
  /// Quadrature weight times density at each node.
  const std::vector<double>& mass() const noexcept { return mass_; }
  /// Unnormalized log density at the nodes (maximum node value is 0).
  const std::vector<double>& log_density() const noexcept { return log_density_; }
  double log_normalizer() const noexcept { return log_normalizer_; }
  const std::vector<double>& drift() const noexcept { return drift_; }
  const std::vector<double>& diffusion() const noexcept { return diffusion_; }

  double lower_cut() const noexcept { return grid_.lower(); }
  double upper_cut() const noexcept { return grid_.upper(); }
  double mode() const noexcept { return mode_; }
  /// Estimated probability outside [lower_cut, upper_cut].
  double tail_mass() const noexcept { return tail_mass_; }

  /// Normalized density at an arbitrary x in the truncated interval (0 outside).
  double density_at(double x) const;

  double expect(const std::vector<double>& values_at_nodes) const;
  template <class F>
  double expect_fn(F&& g) const {
    double s = 0.0;
    const auto& x = grid_.nodes();
    for (std::size_t i = 0; i < x.size(); ++i) s += mass_[i] * g(x[i]);
    return s;
  }

  /// Stationary distribution function at the nodes.
  const std::vector<double>& cdf() const noexcept { return cdf_; }
  /// Inverse distribution function by linear interpolation, u in [0, 1].
  double quantile(double u) const;

 private:
  CompositeGrid grid_;
  std::vector<double> log_density_;
  double log_normalizer_;
  std::vector<double> density_, mass_, drift_, diffusion_;
  double mode_;
  double tail_mass_;
  std::vector<double> cdf_x_, cdf_;
};

InvariantMeasure invariant_measure(const DiffusionModel& model, const ParamVector& theta,
                                   const QuadratureOptions& options = {});

double mu_integral(const InvariantMeasure& measure, const SmoothFunction& g);
double mu_integral(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& g);

/// Stationary integrals of f that enter the expansions and limit objects.
struct PredictorMoments {
  double mu_f = 0;
  double mu_f2 = 0;
  double var = 0;
  double mu_fLf = 0;       // μ(f L f)
  double mu_cLf = 0;       // μ((f - μf) L f)
  double mu_Lf = 0;        // μ(L f), zero up to quadrature error
  double mu_Hf = 0;        // μ(H f)
  double mu_bfp2 = 0;      // μ((b f')^2)
  double mu_fb2fpp = 0;    // μ(f b^2 f'')
  double mu_b2fpp = 0;     // μ(b^2 f'')

  /// Var^-1 [μ((f - μf) L f) + μ((b f')^2) / 6]; throws on Var ≤ 1e-12.
  double k() const;
};

PredictorMoments predictor_moments(const InvariantMeasure& measure, const SmoothFunction& f);

double k_f(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f);

}  // namespace intdiff
