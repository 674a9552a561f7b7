#include "intdiff/simulate.hpp"

#include <cmath>
#include <sstream>

#include "intdiff/errors.hpp"
#include "intdiff/invariant.hpp"
#include "intdiff/rng.hpp"

namespace intdiff {

namespace {

constexpr double kBoundaryGap = 1e-12;

// Coefficients of one exact OU transition over h, with the Brownian increment
// regressed on the transition noise I = ∫ e^{-α(h-s)} dB_s.
struct OuStep {
  double decay;      // e^{-αh}
  double noise_sd;   // sd of I
  double db_on_i;    // Cov(dB, I) / Var(I)
  double db_resid;   // sd of dB given I

  OuStep(double alpha, double h) {
    const long double a = alpha, hh = h;
    const long double ah = a * hh;
    long double v1, c;
    if (std::fabs(static_cast<double>(ah)) < 1e-8) {
      v1 = hh * (1.0L - ah);
      c = hh * (1.0L - 0.5L * ah);
    } else {
      v1 = -std::expm1(-2.0L * ah) / (2.0L * a);
      c = -std::expm1(-ah) / a;
    }
    long double resid = hh - c * c / v1;
    if (resid < 0) resid = 0;
    decay = static_cast<double>(std::exp(-ah));
    noise_sd = static_cast<double>(std::sqrt(v1));
    db_on_i = static_cast<double>(c / v1);
    db_resid = static_cast<double>(std::sqrt(resid));
  }
};

class WindowAverager {
 public:
  explicit WindowAverager(std::size_t substeps) : k_(substeps) {}

  void start(double x) {
    acc_ = 0.5 * x;
    count_ = 0;
  }
  // Returns true when the window closes; the average is then in value().
  bool push(double x) {
    if (++count_ == k_) {
      acc_ += 0.5 * x;
      value_ = acc_ / static_cast<double>(k_);
      start(x);
      return true;
    }
    acc_ += x;
    return false;
  }
  double value() const { return value_; }

 private:
  std::size_t k_;
  std::size_t count_ = 0;
  double acc_ = 0;
  double value_ = 0;
};

struct Stepping {
  const DiffusionModel& model;
  const ParamVector& theta;
  double h;
  double lower, upper;
  std::size_t hits = 0;

  double milstein(double x, double db, std::size_t step) {
    const double a = model.drift_raw(x, theta);
    const double b = model.diffusion_raw(x, theta);
    double next = x + a * h + b * db;
    const double bp = model.diffusion_dx_raw(x, theta);
    if (bp != 0.0) next += 0.5 * b * bp * (db * db - h);
    return guard(next, step);
  }

  double guard(double next, std::size_t step) {
    if (!std::isfinite(next)) {
      std::ostringstream os;
      os << model.name() << ": non-finite state at fine step " << step;
      throw SimulationDivergedError(step, os.str());
    }
    if (next <= lower) {
      next = lower + kBoundaryGap;
      ++hits;
    } else if (next >= upper) {
      next = upper - kBoundaryGap;
      ++hits;
    }
    return next;
  }
};

bool use_exact(const DiffusionModel& model, const ParamVector& theta, Stepper s) {
  if (s == Stepper::milstein) return false;
  const bool has = model.ou_structure(theta).has_value();
  if (s == Stepper::exact_ou && !has)
    throw PreconditionError(model.name() + ": exact stepper requires OU structure");
  return has;
}

double initial_state(const DiffusionModel& model, const ParamVector& theta, std::uint64_t seed,
                     const SimulationOptions& options) {
  if (options.x0) {
    model.require_inside(*options.x0);
    return *options.x0;
  }
  return draw_stationary(model, theta, derive_seed(seed, {0}));
}

// Runs the fine-grid recursion and reports each new state (and increment if
// wanted) to sink(step, x_next, db). Returns the boundary hit count.
template <class Sink>
std::size_t run(const DiffusionModel& model, const ParamVector& theta, const SamplingScheme& scheme,
                std::uint64_t seed, double x0, bool exact, bool want_db, Sink&& sink) {
  const double h = scheme.fine_dt();
  const std::size_t steps = scheme.n * scheme.substeps;
  Stepping st{model, theta, h, model.state().lower(), model.state().upper()};
  Rng main(derive_seed(seed, {1}));
  double x = x0;
  if (exact) {
    const OuStructure ou = *model.ou_structure(theta);
    const OuStep c(ou.alpha, h);
    Rng aux(derive_seed(seed, {2}));
    for (std::size_t k = 0; k < steps; ++k) {
      const double i_noise = c.noise_sd * main.normal();
      x = st.guard(ou.mean + (x - ou.mean) * c.decay + ou.sigma * i_noise, k);
      double db = 0.0;
      if (want_db) db = c.db_on_i * i_noise + c.db_resid * aux.normal();
      sink(k, x, db);
    }
  } else {
    const double sh = std::sqrt(h);
    for (std::size_t k = 0; k < steps; ++k) {
      const double db = sh * main.normal();
      x = st.milstein(x, db, k);
      sink(k, x, db);
    }
  }
  return st.hits;
}

void fill_bundle(TrajectoryBundle& out) {
  const auto& s = out.scheme;
  out.y = integrate_windows(out.x_fine, s.n, s.substeps);
  out.x_obs.resize(s.n + 1);
  for (std::size_t i = 0; i <= s.n; ++i) out.x_obs[i] = out.x_fine[i * s.substeps];
}

}  // namespace

void SamplingScheme::validate() const {
  if (n < 2) throw PreconditionError("sampling scheme: n must be >= 2");
  if (!(delta > 0) || !std::isfinite(delta)) throw PreconditionError("sampling scheme: delta must be > 0");
  if (substeps < 2) throw PreconditionError("sampling scheme: substeps must be >= 2");
}

double draw_stationary(const DiffusionModel& model, const ParamVector& theta, std::uint64_t seed) {
  Rng rng(seed);
  if (auto ou = model.ou_structure(theta)) {
    model.validate(theta);
    if (!(ou->alpha > 0))
      throw NotErgodicError(model.name() + ": stationary law requires alpha > 0");
    const double sd = ou->sigma / std::sqrt(2.0 * ou->alpha);
    return ou->mean + sd * rng.normal();
  }
  const InvariantMeasure mu = invariant_measure(model, theta);
  return mu.quantile(rng.uniform());
}

std::vector<double> integrate_windows(const std::vector<double>& x_fine, std::size_t n,
                                      std::size_t substeps) {
  std::vector<double> y;
  y.reserve(n);
  WindowAverager avg(substeps);
  avg.start(x_fine.at(0));
  for (std::size_t k = 1; k < x_fine.size() && y.size() < n; ++k)
    if (avg.push(x_fine[k])) y.push_back(avg.value());
  return y;
}

TrajectoryBundle simulate_path(const DiffusionModel& model, const ParamVector& theta,
                               const SamplingScheme& scheme, std::uint64_t seed,
                               const SimulationOptions& options) {
  scheme.validate();
  model.validate(theta);
  const bool exact = use_exact(model, theta, options.stepper);
  TrajectoryBundle out;
  out.scheme = scheme;
  out.seed = seed;
  const std::size_t steps = scheme.n * scheme.substeps;
  out.x_fine.reserve(steps + 1);
  out.db.reserve(steps);
  out.x_fine.push_back(initial_state(model, theta, seed, options));
  out.boundary_hits = run(model, theta, scheme, seed, out.x_fine[0], exact, true,
                          [&](std::size_t, double x, double db) {
                            out.x_fine.push_back(x);
                            out.db.push_back(db);
                          });
  fill_bundle(out);
  return out;
}

std::vector<double> simulate_observations(const DiffusionModel& model, const ParamVector& theta,
                                          const SamplingScheme& scheme, std::uint64_t seed,
                                          const SimulationOptions& options) {
  scheme.validate();
  model.validate(theta);
  const bool exact = use_exact(model, theta, options.stepper);
  std::vector<double> y;
  y.reserve(scheme.n);
  const double x0 = initial_state(model, theta, seed, options);
  WindowAverager avg(scheme.substeps);
  avg.start(x0);
  run(model, theta, scheme, seed, x0, exact, false, [&](std::size_t, double x, double) {
    if (avg.push(x)) y.push_back(avg.value());
  });
  return y;
}

TrajectoryBundle simulate_from_increments(const DiffusionModel& model, const ParamVector& theta,
                                          const SamplingScheme& scheme, double x0,
                                          const std::vector<double>& db) {
  scheme.validate();
  model.validate(theta);
  model.require_inside(x0);
  const std::size_t steps = scheme.n * scheme.substeps;
  if (db.size() != steps) throw PreconditionError("simulate_from_increments: need n*K increments");
  Stepping st{model, theta, scheme.fine_dt(), model.state().lower(), model.state().upper()};
  TrajectoryBundle out;
  out.scheme = scheme;
  out.db = db;
  out.x_fine.reserve(steps + 1);
  out.x_fine.push_back(x0);
  double x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    x = st.milstein(x, db[k], k);
    out.x_fine.push_back(x);
  }
  out.boundary_hits = st.hits;
  fill_bundle(out);
  return out;
}

}  // namespace intdiff
