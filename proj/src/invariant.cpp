#include "intdiff/invariant.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <functional>
#include <optional>
#include <limits>
#include <sstream>

#include "intdiff/errors.hpp"

namespace intdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LogDensity {
  const DiffusionModel& model;
  const ParamVector& theta;

  // d/dx log m(x) = 2a/b^2 - 2b'/b
  double slope(double x) const {
    const double b = model.diffusion_raw(x, theta);
    return 2.0 * model.drift_raw(x, theta) / (b * b) - 2.0 * model.diffusion_dx_raw(x, theta) / b;
  }

  // log m(x) - log m(x0)
  double delta(double x0, double x) const {
    if (x == x0) return 0.0;
    auto g = [&](double u) {
      const double b = model.diffusion_raw(u, theta);
      return 2.0 * model.drift_raw(u, theta) / (b * b);
    };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, x0, x, 15, 1e-13);
    return integral - 2.0 * std::log(model.diffusion_raw(x, theta) / model.diffusion_raw(x0, theta));
  }
};

double refine_root(const std::function<double(double)>& fn, double a, double b) {
  double fa = fn(a), fb = fn(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  boost::uintmax_t iters = 200;
  boost::math::tools::eps_tolerance<double> tol(50);
  auto r = boost::math::tools::toms748_solve(fn, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

std::string where(const DiffusionModel& m, const ParamVector& theta) {
  std::ostringstream os;
  os.precision(17);
  os << m.name() << "(";
  for (std::size_t i = 0; i < theta.size(); ++i) os << (i ? "," : "") << theta[i];
  os << ")";
  return os.str();
}

// Walks from `from` toward one side, returning the first probe with
// pred(probe) true. Infinite sides expand geometrically by `step`, finite
// sides halve the remaining distance to the boundary.
template <class Pred>
std::optional<double> probe_side(double from, double boundary, double step, int dir, Pred pred,
                                 double* last = nullptr) {
  const bool finite = std::isfinite(boundary);
  const int limit = finite ? 60 : 400;
  double x = from;
  for (int k = 0; k < limit; ++k) {
    x = finite ? boundary - (boundary - from) * std::ldexp(1.0, -(k + 1))
               : from + dir * step * std::ldexp(1.0, k);
    if (!std::isfinite(x)) break;
    if (pred(x)) return x;
    if (last) *last = x;
  }
  return std::nullopt;
}

std::vector<double> geometric_edges(double boundary, double near, double far, int count) {
  // Edges boundary + d_near * r^k reaching boundary + d_far.
  const double dn = std::abs(near - boundary), df = std::abs(far - boundary);
  const double sign = far > boundary ? 1.0 : -1.0;
  std::vector<double> e;
  e.reserve(count + 1);
  for (int k = 0; k <= count; ++k) {
    const double d = dn * std::pow(df / dn, static_cast<double>(k) / count);
    e.push_back(boundary + sign * d);
  }
  e.front() = near;
  e.back() = far;
  return e;
}

std::vector<double> uniform_edges(double a, double b, int count) {
  std::vector<double> e(count + 1);
  for (int k = 0; k <= count; ++k) e[k] = a + (b - a) * static_cast<double>(k) / count;
  e.back() = b;
  return e;
}

}  // namespace

InvariantMeasure::InvariantMeasure(CompositeGrid grid, std::vector<double> log_density,
                                   double log_normalizer, std::vector<double> drift,
                                   std::vector<double> diffusion, double mode, double tail_mass)
    : grid_(std::move(grid)),
      log_density_(std::move(log_density)),
      log_normalizer_(log_normalizer),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      mode_(mode),
      tail_mass_(tail_mass) {
  const std::size_t n = grid_.size();
  density_.resize(n);
  mass_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    density_[i] = std::exp(log_density_[i] - log_normalizer_);
    mass_[i] = density_[i] * grid_.weights()[i];
  }
  auto cum = grid_.cumulative_left(density_);
  cdf_x_.reserve(n + 2);
  cdf_.reserve(n + 2);
  cdf_x_.push_back(grid_.lower());
  cdf_.push_back(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cdf_x_.push_back(grid_.nodes()[i]);
    cdf_.push_back(std::max(cdf_.back(), cum[i]));
  }
  cdf_x_.push_back(grid_.upper());
  cdf_.push_back(std::max(cdf_.back(), grid_.integrate(density_)));
  const double total = cdf_.back();
  for (auto& c : cdf_) c /= total;
}

double InvariantMeasure::density_at(double x) const {
  if (x < grid_.lower() || x > grid_.upper()) return 0.0;
  return std::exp(grid_.interpolate(log_density_, x) - log_normalizer_);
}

double InvariantMeasure::expect(const std::vector<double>& values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i) s += mass_[i] * values[i];
  return s;
}

double InvariantMeasure::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.begin()) return cdf_x_.front();
  if (it == cdf_.end()) return cdf_x_.back();
  const std::size_t j = static_cast<std::size_t>(it - cdf_.begin());
  const double c0 = cdf_[j - 1], c1 = cdf_[j];
  const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
  return cdf_x_[j - 1] + t * (cdf_x_[j] - cdf_x_[j - 1]);
}

InvariantMeasure invariant_measure(const DiffusionModel& model, const ParamVector& theta,
                                   const QuadratureOptions& options) {
  model.validate(theta);
  const double l = model.state().lower(), r = model.state().upper();
  LogDensity ld{model, theta};
  const std::string tag = where(model, theta);

  double hint = model.location_hint(theta);
  if (!model.state().contains(hint)) {
    if (std::isfinite(l) && std::isfinite(r)) hint = 0.5 * (l + r);
    else if (std::isfinite(l)) hint = l + 1.0;
    else if (std::isfinite(r)) hint = r - 1.0;
    else hint = 0.0;
  }
  const double coarse = 0.1 * std::max(1.0, std::abs(hint));

  // Bracket a zero of the log-density slope with positive slope on the left.
  double lo = hint, hi = hint;
  if (!(ld.slope(hint) > 0.0)) {
    auto found = probe_side(hint, l, coarse, -1, [&](double x) { return ld.slope(x) > 0.0; });
    if (!found) throw NotErgodicError(tag + ": stationary density has no interior mode (left)");
    lo = *found;
  }
  if (!(ld.slope(hint) < 0.0)) {
    auto found = probe_side(hint, r, coarse, +1, [&](double x) { return ld.slope(x) < 0.0; });
    if (!found) throw NotErgodicError(tag + ": speed density not integrable (no confinement on the right)");
    hi = *found;
  }
  if (!(lo < hi)) throw NotErgodicError(tag + ": could not bracket the stationary mode");
  const double mode = refine_root([&](double x) { return ld.slope(x); }, lo, hi);

  // Local scale from the curvature of the log density at the mode.
  double scale = coarse;
  {
    const double h = 1e-4 * std::max(coarse, 1e-8);
    const double room = std::min(mode - l, r - mode);
    const double hh = std::min(h, 0.25 * room);
    const double curv = (ld.slope(mode + hh) - ld.slope(mode - hh)) / (2.0 * hh);
    if (std::isfinite(curv) && curv < 0.0) scale = 1.0 / std::sqrt(-curv);
  }

  const double thr = std::log(options.cut_ratio);
  auto drop = [&](double x) { return ld.delta(mode, x) - thr; };
  auto cut_on = [&](double boundary, int dir) {
    double last = mode;
    auto hit = probe_side(mode, boundary, scale, dir, [&](double x) { return drop(x) <= 0.0; }, &last);
    if (!hit) {
      if (std::isfinite(boundary)) return last;  // density stays above the cut ratio up to the boundary
      throw NotErgodicError(tag + ": speed density does not decay (normalizer diverges)");
    }
    return refine_root(drop, std::min(last, *hit), std::max(last, *hit));
  };
  const double lcut = cut_on(l, -1);
  const double rcut = cut_on(r, +1);
  if (!(lcut < mode && mode < rcut)) throw NotErgodicError(tag + ": degenerate truncation interval");

  const int P = options.panels;
  const int G = std::min(options.graded_panels, P / 2);
  std::vector<double> edges;
  const bool lfin = std::isfinite(l), rfin = std::isfinite(r);
  if (lfin && rfin) {
    edges = geometric_edges(l, lcut, mode, P / 2);
    auto right = geometric_edges(r, rcut, mode, P - P / 2);
    std::reverse(right.begin(), right.end());
    edges.insert(edges.end(), right.begin() + 1, right.end());
  } else if (lfin) {
    edges = geometric_edges(l, lcut, mode, G);
    auto rest = uniform_edges(mode, rcut, P - G);
    edges.insert(edges.end(), rest.begin() + 1, rest.end());
  } else if (rfin) {
    edges = uniform_edges(lcut, mode, P - G);
    auto right = geometric_edges(r, rcut, mode, G);
    std::reverse(right.begin(), right.end());
    edges.insert(edges.end(), right.begin() + 1, right.end());
  } else {
    edges = uniform_edges(lcut, rcut, P);
  }
  CompositeGrid grid(std::move(edges));

  const auto& x = grid.nodes();
  const std::size_t n = x.size();
  std::vector<double> a(n), b(n), ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = model.drift_raw(x[i], theta);
    b[i] = model.diffusion_raw(x[i], theta);
    if (!(b[i] > 0.0) || !std::isfinite(b[i]) || !std::isfinite(a[i])) {
      std::ostringstream os;
      os.precision(17);
      os << tag << ": diffusion coefficient not positive at x=" << x[i];
      throw PreconditionError(os.str());
    }
    ratio[i] = 2.0 * a[i] / (b[i] * b[i]);
  }
  auto scale_int = grid.cumulative_left(ratio);
  std::vector<double> logm(n);
  double top = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    logm[i] = scale_int[i] - 2.0 * std::log(b[i]);
    top = std::max(top, logm[i]);
  }
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    logm[i] -= top;
    m[i] = std::exp(logm[i]);
  }
  const double z = grid.integrate(m);
  if (!(z > 0.0) || !std::isfinite(z))
    throw NotErgodicError(tag + ": speed density normalizer is not finite");

  // Exponential-tail estimate of the mass beyond each cut, relative to z.
  // Node values are relative to their maximum, the cut drops relative to the mode.
  const double mode_level = std::exp(ld.delta(mode, grid.nodes()[0]) - logm[0]);
  double tail = 0.0;
  for (double c : {lcut, rcut}) {
    const double level = std::exp(ld.delta(mode, c)) / mode_level;
    double len = 1.0 / std::abs(ld.slope(c));
    const double bd = c == lcut ? c - l : r - c;
    if (std::isfinite(bd)) len = std::min(len, bd);
    if (std::isfinite(len)) tail += level * len;
  }
  tail /= z;

  return InvariantMeasure(std::move(grid), std::move(logm), std::log(z), std::move(a),
                          std::move(b), mode, tail);
}

double mu_integral(const InvariantMeasure& measure, const SmoothFunction& g) {
  return measure.expect_fn([&](double x) { return g(x); });
}

double mu_integral(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& g) {
  return mu_integral(invariant_measure(model, theta), g);
}

double PredictorMoments::k() const {
  if (!(var > 1e-12)) {
    std::ostringstream os;
    os << "stationary variance of f is " << var << " (<= 1e-12)";
    throw DegeneratePredictorError(os.str());
  }
  return (mu_cLf + mu_bfp2 / 6.0) / var;
}

PredictorMoments predictor_moments(const InvariantMeasure& measure, const SmoothFunction& f) {
  const auto& x = measure.nodes();
  const auto& w = measure.mass();
  const auto& a = measure.drift();
  const auto& b = measure.diffusion();
  const std::size_t n = x.size();
  std::vector<double> fv(n), f1(n), f2(n), lf(n);
  PredictorMoments pm;
  for (std::size_t i = 0; i < n; ++i) {
    fv[i] = f(x[i]);
    f1[i] = f.derivative(1, x[i]);
    f2[i] = f.derivative(2, x[i]);
    lf[i] = a[i] * f1[i] + 0.5 * b[i] * b[i] * f2[i];
    pm.mu_f += w[i] * fv[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double b2 = b[i] * b[i];
    const double c = fv[i] - pm.mu_f;
    pm.mu_f2 += w[i] * fv[i] * fv[i];
    pm.var += w[i] * c * c;
    pm.mu_fLf += w[i] * fv[i] * lf[i];
    pm.mu_cLf += w[i] * c * lf[i];
    pm.mu_Lf += w[i] * lf[i];
    pm.mu_Hf += w[i] * (0.5 * a[i] * f1[i] + b2 * f2[i] / 6.0);
    pm.mu_bfp2 += w[i] * b2 * f1[i] * f1[i];
    pm.mu_fb2fpp += w[i] * fv[i] * b2 * f2[i];
    pm.mu_b2fpp += w[i] * b2 * f2[i];
  }
  return pm;
}

double k_f(const DiffusionModel& model, const ParamVector& theta, const SmoothFunction& f) {
  return predictor_moments(invariant_measure(model, theta), f).k();
}

}  // namespace intdiff
