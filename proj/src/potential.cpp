#include "intdiff/potential.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "intdiff/errors.hpp"

namespace intdiff {

namespace {

double fd_step_theta(double v) { return 1e-5 * std::max(std::abs(v), 1.0); }

std::vector<std::size_t> resolve_free(const DiffusionModel& model, std::vector<std::size_t> free) {
  if (free.empty())
    for (std::size_t j = 0; j < model.dim(); ++j) free.push_back(j);
  for (std::size_t j : free)
    if (j >= model.dim()) throw PreconditionError("free parameter index out of range");
  return free;
}

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double lo = s[s.size() - 1];
  return lo > 0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

SmoothFunction center(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f) {
  return f.shifted(-mu_integral(model, theta, f));
}

PotentialSolution solve_potential(std::shared_ptr<const InvariantMeasure> measure,
                                  std::vector<double> fstar) {
  const auto& mu = *measure;
  const auto& grid = mu.grid();
  const std::size_t n = grid.size();
  if (fstar.size() != n) throw PreconditionError("solve_potential: f* size does not match the grid");

  PotentialSolution sol;
  sol.measure = measure;
  sol.mean_fstar = mu.expect(fstar);
  // Subtracting the grid mean is the same as redistributing the residual of
  // ∫ f* dμ in proportion to the cumulative mass, so both tails close at 0.
  for (auto& v : fstar) v -= sol.mean_fstar;

  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = fstar[i] * mu.density()[i];
  const auto left = grid.cumulative_left(g);
  const auto right = grid.cumulative_right(g);
  const auto& b = mu.diffusion();
  sol.u_prime.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Integrate from the nearer tail to keep the ratio accurate where μ is small.
    const double big_f = mu.cdf()[i + 1] <= 0.5 ? left[i] : -right[i];
    sol.u_prime[i] = -2.0 * big_f / (b[i] * b[i] * mu.density()[i]);
    if (!std::isfinite(sol.u_prime[i])) {
      std::ostringstream os;
      os.precision(17);
      os << "potential: u' not finite at x=" << grid.nodes()[i];
      throw BoundaryDegeneracyError(os.str());
    }
  }
  sol.u = grid.cumulative_left(sol.u_prime);
  const double shift = mu.expect(sol.u);
  for (auto& v : sol.u) v -= shift;
  sol.mean_u = mu.expect(sol.u);

  const auto u2 = grid.differentiate(sol.u_prime);
  double dmax = 0.0;
  for (double d : mu.density()) dmax = std::max(dmax, d);
  const auto& a = mu.drift();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mu.density()[i] < 1e-6 * dmax) continue;
    const double lu = a[i] * sol.u_prime[i] + 0.5 * b[i] * b[i] * u2[i];
    worst = std::max(worst, std::abs(lu + fstar[i]) / (1.0 + std::abs(fstar[i])));
  }
  sol.poisson_residual = worst;
  sol.fstar = std::move(fstar);
  return sol;
}

PotentialSolution potential_derivative(const DiffusionModel& model, const ParamVector& theta,
                                       const SmoothFunction& fstar) {
  auto mu = std::make_shared<const InvariantMeasure>(invariant_measure(model, theta));
  std::vector<double> v(mu->nodes().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fstar(mu->nodes()[i]);
  const double mean = mu->expect(v);
  if (std::abs(mean) > 1e-8) {
    std::ostringstream os;
    os << "potential: input is not centred (mean " << mean << ")";
    throw PreconditionError(os.str());
  }
  return solve_potential(std::move(mu), std::move(v));
}

ScalarAvar avar_scalar(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f) {
  auto mu = std::make_shared<const InvariantMeasure>(invariant_measure(model, theta));
  std::vector<double> v(mu->nodes().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(mu->nodes()[i]);
  ScalarAvar out;
  out.mu_f = mu->expect(v);
  const auto sol = solve_potential(mu, std::move(v));
  const auto& b = mu->diffusion();
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    const double ub = sol.u_prime[i] * b[i];
    out.v0 += mu->mass()[i] * ub * ub;
    out.v0_alt += 2.0 * mu->mass()[i] * sol.fstar[i] * sol.u[i];
  }
  out.poisson_residual = sol.poisson_residual;
  return out;
}

double d_mu_dtheta(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f,
                   std::size_t j) {
  const double h = fd_step_theta(theta[j]);
  const double up = mu_integral(model, theta.with(j, theta[j] + h), f);
  const double dn = mu_integral(model, theta.with(j, theta[j] - h), f);
  return (up - dn) / (2.0 * h);
}

Eigen::MatrixXd a_matrix(const DiffusionModel& model, const ParamVector& theta,
                         const SmoothFunction& f, const std::vector<std::size_t>& free) {
  Eigen::MatrixXd a(2, static_cast<Eigen::Index>(free.size()));
  for (std::size_t c = 0; c < free.size(); ++c) {
    const std::size_t j = free[c];
    const double h = fd_step_theta(theta[j]);
    const auto up = predictor_moments(invariant_measure(model, theta.with(j, theta[j] + h)), f);
    const auto dn = predictor_moments(invariant_measure(model, theta.with(j, theta[j] - h)), f);
    const double ku = up.k(), kd = dn.k();
    a(0, c) = (ku * up.mu_f - kd * dn.mu_f) / (2.0 * h);
    a(1, c) = -(ku - kd) / (2.0 * h);
  }
  return a;
}

double q0_asymptotic_variance(const DiffusionModel& model, const ParamVector& theta0,
                              const SmoothFunction& f, std::size_t free_index) {
  if (free_index >= model.dim()) throw PreconditionError("free parameter index out of range");
  const auto av = avar_scalar(model, theta0, f);
  if (!(av.v0 > 1e-12)) throw DegeneratePredictorError("asymptotic variance of f is <= 1e-12");
  const double d = d_mu_dtheta(model, theta0, f, free_index);
  if (!(std::abs(d) > 1e-12))
    throw DegeneratePredictorError("d mu_theta(f) / d theta vanishes; parameter not identified");
  return av.v0 / (d * d);
}

LimitObjects limit_objects(const DiffusionModel& model, const ParamVector& theta0,
                           const ParamVector& theta, const SmoothFunction& f,
                           std::vector<std::size_t> free) {
  free = resolve_free(model, std::move(free));
  auto m0 = std::make_shared<const InvariantMeasure>(invariant_measure(model, theta0));
  const auto pm0 = predictor_moments(*m0, f);
  const auto pmt = theta == theta0 ? pm0 : predictor_moments(invariant_measure(model, theta), f);

  LimitObjects out;
  out.k0 = pm0.k();
  out.k_theta = pmt.k();
  out.gamma[0] = out.k_theta * (pmt.mu_f - pm0.mu_f);
  out.gamma[1] = pm0.mu_fLf + pm0.mu_bfp2 / 6.0 -
                 out.k_theta * (pm0.mu_f2 - pm0.mu_f * pmt.mu_f);
  // At θ = θ0 the second entry is Var K0 - K0 Var; drop the μ(Lf) quadrature
  // residual so the identity holds exactly on the grid.
  if (theta == theta0) out.gamma[1] = pm0.mu_cLf + pm0.mu_bfp2 / 6.0 - out.k0 * pm0.var;

  Eigen::Matrix2d z;
  z << 1.0, pm0.mu_f, pm0.mu_f, pm0.mu_f2;
  out.w0 = z * a_matrix(model, theta0, f, free);
  out.w = theta == theta0 ? out.w0 : Eigen::MatrixXd(z * a_matrix(model, theta, f, free));
  out.w0_condition = condition_number(out.w0);
  out.w0_singular = !(out.w0_condition <= 1e10);

  const double k0 = out.k0, mf = pm0.mu_f;
  out.f1star = f.scaled(-k0).shifted(k0 * mf);
  {
    const DiffusionModel mcopy = model;
    const ParamVector t0 = theta0;
    const SmoothFunction fc = f;
    out.f2star = SmoothFunction("f2*", [mcopy, t0, fc, k0, mf](double x) {
      const double fx = fc(x), f1 = fc.derivative(1, x);
      const double b = mcopy.diffusion(x, t0);
      return fx * generator_apply(mcopy, fc, x, t0) + b * b * f1 * f1 / 6.0 - k0 * fx * (fx - mf);
    });
  }

  const auto& x = m0->nodes();
  const auto& a = m0->drift();
  const auto& b = m0->diffusion();
  const std::size_t n = x.size();
  std::vector<double> v1(n), v2(n), ffp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double fx = f(x[i]), f1 = f.derivative(1, x[i]), f2 = f.derivative(2, x[i]);
    const double lf = a[i] * f1 + 0.5 * b[i] * b[i] * f2;
    v1[i] = k0 * (mf - fx);
    v2[i] = fx * lf + b[i] * b[i] * f1 * f1 / 6.0 - k0 * fx * (fx - mf);
    ffp[i] = fx * f1;
  }
  const auto s1 = solve_potential(m0, std::move(v1));
  const auto s2 = solve_potential(m0, std::move(v2));
  out.poisson_residual = std::max(s1.poisson_residual, s2.poisson_residual);
  double v11 = 0, v12 = 0, v22 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b2 = b[i] * b[i];
    const double h = s2.u_prime[i] + ffp[i];
    const double w = m0->mass()[i];
    v11 += w * s1.u_prime[i] * s1.u_prime[i] * b2;
    v12 += w * s1.u_prime[i] * h * b2;
    v22 += w * h * h * b2;
  }
  out.v0 << v11, v12, v12, v22;

  if (free.size() == 2 && !out.w0_singular) {
    const Eigen::Matrix2d winv = Eigen::Matrix2d(out.w0).inverse();
    out.sigma = winv * out.v0 * winv.transpose();
  }
  return out;
}

std::vector<GammaScanPoint> gamma_scan(const DiffusionModel& model, const ParamVector& theta0,
                                       const SmoothFunction& f, const std::vector<std::size_t>& free,
                                       double relative_halfwidth, std::size_t points_per_axis) {
  if (points_per_axis < 2) throw PreconditionError("gamma_scan: need >= 2 points per axis");
  const auto fr = resolve_free(model, free);
  const auto m0 = invariant_measure(model, theta0);
  const auto pm0 = predictor_moments(m0, f);
  std::vector<GammaScanPoint> out;
  std::vector<std::size_t> idx(fr.size(), 0);
  while (true) {
    ParamVector th = theta0;
    for (std::size_t c = 0; c < fr.size(); ++c) {
      const double t = -1.0 + 2.0 * static_cast<double>(idx[c]) / static_cast<double>(points_per_axis - 1);
      const double base = theta0[fr[c]];
      th[fr[c]] = base == 0.0 ? t * relative_halfwidth : base * (1.0 + t * relative_halfwidth);
    }
    const auto pmt = predictor_moments(invariant_measure(model, th), f);
    const double kt = pmt.k();
    GammaScanPoint p;
    p.theta = th.values();
    p.gamma[0] = kt * (pmt.mu_f - pm0.mu_f);
    p.gamma[1] = pm0.mu_fLf + pm0.mu_bfp2 / 6.0 - kt * (pm0.mu_f2 - pm0.mu_f * pmt.mu_f);
    out.push_back(std::move(p));
    std::size_t c = 0;
    while (c < idx.size() && ++idx[c] == points_per_axis) idx[c++] = 0;
    if (c == idx.size()) break;
  }
  return out;
}

}  // namespace intdiff
