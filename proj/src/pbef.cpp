#include "intdiff/pbef.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "intdiff/errors.hpp"
#include "intdiff/rng.hpp"
#include "intdiff/simulate.hpp"

namespace intdiff {

std::string to_string(CoeffMode mode) {
  switch (mode) {
    case CoeffMode::exact:
      return "exact";
    case CoeffMode::expansion:
      return "expansion";
    case CoeffMode::monte_carlo:
      return "monte_carlo";
  }
  return "expansion";
}

CoeffMode coeff_mode_from_string(const std::string& s) {
  if (s == "exact") return CoeffMode::exact;
  if (s == "expansion") return CoeffMode::expansion;
  if (s == "monte_carlo") return CoeffMode::monte_carlo;
  throw std::invalid_argument("unknown coefficient mode '" + s + "'");
}

MomentExpansion moment_expansions(const PredictorMoments& pm, double delta) {
  MomentExpansion e;
  e.m0 = -pm.mu_f * pm.mu_b2fpp / 6.0;
  e.m1 = pm.mu_fLf - pm.mu_fb2fpp / 6.0 + pm.mu_bfp2 / 3.0;
  e.m2 = 2.0 * pm.mu_fLf - pm.mu_fb2fpp / 6.0 + pm.mu_bfp2 / 2.0;
  e.ef_sq = pm.mu_f * pm.mu_f + delta * e.m0;
  e.ef2 = pm.mu_f2 + delta * e.m1;
  e.eff = pm.mu_f2 + delta * e.m2;
  return e;
}

MomentExpansion moment_expansions(const DiffusionModel& model, const ParamVector& theta,
                                  double delta, const SmoothFunction& f) {
  return moment_expansions(predictor_moments(invariant_measure(model, theta), f), delta);
}

CoefficientVector coeffs_expansion(const PredictorMoments& pm, double delta) {
  const double k = pm.k();
  CoefficientVector c;
  c.a1 = 1.0 + delta * k;
  c.a0 = -delta * k * pm.mu_f;
  c.delta = delta;
  c.mode = CoeffMode::expansion;
  return c;
}

CoefficientVector coeffs_expansion(const DiffusionModel& model, const ParamVector& theta,
                                   double delta, const SmoothFunction& f) {
  return coeffs_expansion(predictor_moments(invariant_measure(model, theta), f), delta);
}

CoefficientVector coeffs_from_moments(const YMoments& m, double delta, CoeffMode mode) {
  const double var = m.ef2 - m.ef * m.ef;
  if (!(var > 1e-12)) {
    std::ostringstream os;
    os << "variance of f(Y) is " << var << " (<= 1e-12)";
    throw DegeneratePredictorError(os.str());
  }
  CoefficientVector c;
  c.a1 = (m.eff - m.ef * m.ef) / var;
  c.a0 = m.ef * (1.0 - c.a1);
  c.delta = delta;
  c.mode = mode;
  if (!std::isfinite(c.a0) || !std::isfinite(c.a1))
    throw DegeneratePredictorError("non-finite projection coefficients");
  return c;
}

CoefficientVector coeffs_exact(const MomentProvider& provider, const ParamVector& theta) {
  return coeffs_from_moments(provider.moments(theta), provider.delta, provider.mode);
}

IntegratedOuMoments integrated_ou_moments(double alpha, double mean, double sigma, double delta) {
  if (!(alpha > 0)) throw NotErgodicError("integrated OU moments need alpha > 0");
  if (!(delta > 0)) throw PreconditionError("integrated OU moments need delta > 0");
  const double v = sigma * sigma / (2.0 * alpha);
  const double tau = alpha * delta;
  double g;  // (tau - 1 + e^-tau) / tau^2
  if (tau < 1e-2) {
    double term = 0.5, sum = 0.0;
    for (int k = 0; k < 8; ++k) {
      sum += term;
      term *= -tau / static_cast<double>(k + 3);
    }
    g = sum;
  } else {
    g = (tau + std::expm1(-tau)) / (tau * tau);
  }
  const double e = -std::expm1(-tau) / tau;
  IntegratedOuMoments out;
  out.mean = mean;
  out.var = 2.0 * v * g;
  out.cov = v * e * e;
  return out;
}

std::optional<MomentProvider> exact_provider(const DiffusionModel& model, const SmoothFunction& f,
                                             double delta) {
  const auto& poly = f.polynomial_coefficients();
  if (!poly || poly->size() > 3) return std::nullopt;
  if (!model.has_ou_structure()) return std::nullopt;
  std::vector<double> c = *poly;
  c.resize(3, 0.0);
  const DiffusionModel mcopy = model;
  MomentProvider p;
  p.name = "integrated-ou-gaussian";
  p.mode = CoeffMode::exact;
  p.delta = delta;
  p.moments = [mcopy, c, delta](const ParamVector& theta) {
    mcopy.validate(theta);
    const auto ou = *mcopy.ou_structure(theta);
    const auto g = integrated_ou_moments(ou.alpha, ou.mean, ou.sigma, delta);
    const double m = g.mean, V = g.var, C = g.cov;
    const double m2 = m * m;
    // Raw moments of Y and joint moments of (Y1, Y2).
    const double e[5] = {1.0, m, m2 + V, m2 * m + 3.0 * m * V, m2 * m2 + 6.0 * m2 * V + 3.0 * V * V};
    double j[3][3];
    for (int k = 0; k < 3; ++k) {
      j[0][k] = e[k];
      j[k][0] = e[k];
    }
    j[1][1] = m2 + C;
    j[1][2] = j[2][1] = m2 * m + m * V + 2.0 * m * C;
    j[2][2] = m2 * m2 + 2.0 * m2 * V + 4.0 * m2 * C + V * V + 2.0 * C * C;
    YMoments out;
    for (int a = 0; a < 3; ++a) {
      out.ef += c[a] * e[a];
      for (int b = 0; b < 3; ++b) {
        out.ef2 += c[a] * c[b] * e[a + b];
        out.eff += c[a] * c[b] * j[a][b];
      }
    }
    return out;
  };
  return p;
}

McMoments monte_carlo_moments(const DiffusionModel& model, const ParamVector& theta,
                              const SmoothFunction& f, double delta, std::size_t pairs,
                              std::uint64_t seed, std::size_t substeps) {
  if (pairs < 2) throw PreconditionError("monte_carlo_moments: need >= 2 pairs");
  model.validate(theta);
  std::optional<InvariantMeasure> mu;
  if (!model.ou_structure(theta)) mu.emplace(invariant_measure(model, theta));
  Rng start(derive_seed(seed, {0}));
  const SamplingScheme scheme{2, delta, substeps};
  double s1 = 0, s11 = 0, s12 = 0, q1 = 0, q11 = 0, q12 = 0;
  for (std::size_t p = 0; p < pairs; ++p) {
    SimulationOptions opt;
    opt.x0 = mu ? mu->quantile(start.uniform()) : draw_stationary(model, theta, derive_seed(seed, {0, p}));
    const auto y = simulate_observations(model, theta, scheme, derive_seed(seed, {1, p}), opt);
    const double a = f(y[0]), b = f(y[1]);
    const double aa = a * a, ab = a * b;
    s1 += a;
    s11 += aa;
    s12 += ab;
    q1 += a * a;
    q11 += aa * aa;
    q12 += ab * ab;
  }
  const double n = static_cast<double>(pairs);
  auto se = [n](double s, double q) {
    const double mean = s / n;
    return std::sqrt(std::max(0.0, (q / n - mean * mean) / (n - 1.0)));
  };
  McMoments out;
  out.pairs = pairs;
  out.m = {s1 / n, s11 / n, s12 / n};
  out.se = {se(s1, q1), se(s11, q11), se(s12, q12)};
  return out;
}

MomentProvider monte_carlo_provider(const DiffusionModel& model, const SmoothFunction& f,
                                    double delta, std::size_t pairs, std::uint64_t seed,
                                    std::size_t substeps) {
  MomentProvider p;
  p.name = "monte-carlo";
  p.mode = CoeffMode::monte_carlo;
  p.delta = delta;
  const DiffusionModel mcopy = model;
  const SmoothFunction fc = f;
  p.moments = [mcopy, fc, delta, pairs, seed, substeps](const ParamVector& theta) {
    return monte_carlo_moments(mcopy, theta, fc, delta, pairs, seed, substeps).m;
  };
  return p;
}

CoefficientVector coefficients(const DiffusionModel& model, const ParamVector& theta, double delta,
                               const SmoothFunction& f, CoeffMode mode,
                               const MomentProvider* provider) {
  switch (mode) {
    case CoeffMode::expansion:
      return coeffs_expansion(model, theta, delta, f);
    case CoeffMode::exact: {
      if (provider) return coeffs_exact(*provider, theta);
      auto p = exact_provider(model, f, delta);
      if (!p)
        throw PreconditionError("no exact moment provider registered for " + model.name() + " and f=" + f.name());
      return coeffs_exact(*p, theta);
    }
    case CoeffMode::monte_carlo: {
      if (provider) return coeffs_exact(*provider, theta);
      return coeffs_exact(monte_carlo_provider(model, f, delta), theta);
    }
  }
  throw PreconditionError("unknown coefficient mode");
}

double simple_mean(const DiffusionModel& model, const ParamVector& theta, double delta,
                   const SmoothFunction& f, bool corrected) {
  const auto pm = predictor_moments(invariant_measure(model, theta), f);
  return corrected ? pm.mu_f + delta * pm.mu_Hf : pm.mu_f;
}

double gn_simple(const ParamVector& theta, const std::vector<double>& y, double delta,
                 const DiffusionModel& model, const SmoothFunction& f, bool corrected) {
  const double m = simple_mean(model, theta, delta, f, corrected);
  double s = 0.0;
  for (double v : y) s += f(v) - m;
  return s;
}

OnelagStats OnelagStats::from(const std::vector<double>& y, const SmoothFunction& f) {
  if (y.size() < 3) throw PreconditionError("one-lag estimating function needs n >= 3");
  OnelagStats st;
  double prev = f(y[0]);
  for (std::size_t i = 1; i < y.size(); ++i) {
    const double cur = f(y[i]);
    st.s1 += cur;
    st.s0 += prev;
    st.s00 += prev * prev;
    st.s01 += prev * cur;
    prev = cur;
  }
  st.count = static_cast<double>(y.size() - 1);
  return st;
}

Eigen::Vector2d gn_onelag(const OnelagStats& s, const CoefficientVector& c) {
  Eigen::Vector2d g;
  g[0] = s.s1 - s.count * c.a0 - c.a1 * s.s0;
  g[1] = s.s01 - c.a0 * s.s0 - c.a1 * s.s00;
  return g;
}

Eigen::Vector2d gn_onelag(const ParamVector& theta, const std::vector<double>& y, double delta,
                          const DiffusionModel& model, const SmoothFunction& f, CoeffMode mode,
                          const MomentProvider* provider) {
  return gn_onelag(OnelagStats::from(y, f), coefficients(model, theta, delta, f, mode, provider));
}

Eigen::Vector2d gn_onelag_direct(const std::vector<double>& y, const SmoothFunction& f,
                                 const CoefficientVector& c) {
  if (y.size() < 3) throw PreconditionError("one-lag estimating function needs n >= 3");
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (std::size_t i = 1; i < y.size(); ++i) {
    const double prev = f(y[i - 1]);
    const double r = f(y[i]) - c.a0 - c.a1 * prev;
    g[0] += r;
    g[1] += prev * r;
  }
  return g;
}

Estimate estimate(const DiffusionModel& model, const EstimatorSpec& spec,
                  const std::vector<double>& y, double delta, const std::vector<double>& init,
                  const MomentProvider* provider) {
  const std::size_t d = spec.free.size();
  if (spec.theta_fixed.size() != model.dim())
    throw PreconditionError("estimate: theta_fixed has the wrong dimension");
  for (std::size_t j : spec.free)
    if (j >= model.dim()) throw PreconditionError("estimate: free index out of range");
  if (init.size() != d) throw PreconditionError("estimate: init has the wrong dimension");
  if (spec.q == 0 && d != 1) throw PreconditionError("estimate: q = 0 needs exactly one free parameter");
  if (spec.q == 1 && d != 2) throw PreconditionError("estimate: q = 1 needs exactly two free parameters");
  if (spec.q != 0 && spec.q != 1) throw PreconditionError("estimate: q must be 0 or 1");
  spec.bounds.validate(d);

  std::optional<MomentProvider> own;
  if (spec.q == 1 && !provider) {
    if (spec.mode == CoeffMode::exact) {
      own = exact_provider(model, spec.f, delta);
      if (!own)
        throw PreconditionError("no exact moment provider registered for " + model.name() + " and f=" + spec.f.name());
    } else if (spec.mode == CoeffMode::monte_carlo) {
      own = monte_carlo_provider(model, spec.f, delta);
    }
    if (own) provider = &*own;
  }

  auto full = [&](const Eigen::VectorXd& v) {
    ParamVector th = spec.theta_fixed;
    for (std::size_t c = 0; c < d; ++c) th[spec.free[c]] = v[static_cast<Eigen::Index>(c)];
    return th;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EstimatingFunction gn;
  if (spec.q == 0) {
    double sf = 0.0;
    for (double v : y) sf += spec.f(v);
    const double n = static_cast<double>(y.size());
    gn = [&, sf, n](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      try {
        return Eigen::VectorXd::Constant(1, sf - n * simple_mean(model, full(v), delta, spec.f, spec.corrected_mean));
      } catch (const Error&) {
        return Eigen::VectorXd::Constant(1, nan);
      }
    };
  } else {
    const OnelagStats st = OnelagStats::from(y, spec.f);
    gn = [&, st](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      try {
        const ParamVector th = full(v);
        const CoefficientVector c = provider ? coeffs_exact(*provider, th)
                                             : coeffs_expansion(model, th, delta, spec.f);
        return gn_onelag(st, c);
      } catch (const Error&) {
        return Eigen::Vector2d::Constant(nan);
      }
    };
  }
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(d));
  Estimate out;
  out.result = solve(gn, nullptr, x0, spec.bounds, spec.solver);
  out.theta = full(Eigen::Map<const Eigen::VectorXd>(out.result.theta_hat.data(), static_cast<Eigen::Index>(d)));
  return out;
}

}  // namespace intdiff
