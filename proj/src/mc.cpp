#include "intdiff/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "intdiff/errors.hpp"
#include "intdiff/euler_ito.hpp"
#include "intdiff/potential.hpp"
#include "intdiff/rng.hpp"

namespace intdiff {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_config(const ExperimentConfig& c) {
  if (c.grid.empty()) throw PreconditionError("study: empty grid");
  if (c.replications < 1) throw PreconditionError("study: need M >= 1");
  if (c.theta0.size() != c.model.dim()) throw PreconditionError("study: theta0 has the wrong dimension");
  if (c.estimator.free.empty()) throw PreconditionError("study: no free parameters");
  for (const auto& g : c.grid) g.scheme().validate();
  if (c.init_rule == InitRule::fixed && c.init.size() != c.estimator.free.size())
    throw PreconditionError("study: init has the wrong dimension");
  c.model.validate(c.theta0);
}

std::vector<double> free_values(const ParamVector& theta, const std::vector<std::size_t>& free) {
  std::vector<double> out;
  for (std::size_t j : free) out.push_back(theta[j]);
  return out;
}

}  // namespace

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t grid_id, std::size_t rep) {
  return derive_seed(master, {grid_id, rep});
}

double ks_normal(std::vector<double> sample) {
  if (sample.empty()) return kNan;
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw DegeneratePredictorError("covariance eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff())))
    throw DegeneratePredictorError("asymptotic covariance is not positive definite");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd theoretical_covariance(const ExperimentConfig& c) {
  const auto& e = c.estimator;
  if (e.q == 0) {
    if (e.free.size() != 1) throw PreconditionError("study: q = 0 needs exactly one free parameter");
    Eigen::MatrixXd s(1, 1);
    s(0, 0) = q0_asymptotic_variance(c.model, c.theta0, e.f, e.free[0]);
    return s;
  }
  if (e.free.size() != 2) throw PreconditionError("study: q = 1 needs exactly two free parameters");
  const auto lo = limit_objects(c.model, c.theta0, c.theta0, e.f, e.free);
  if (!lo.sigma) {
    std::ostringstream os;
    os << "W(theta0) is singular (condition " << lo.w0_condition << ")";
    throw DegeneratePredictorError(os.str());
  }
  return *lo.sigma;
}

StudyReport run_study(const ExperimentConfig& config) {
  check_config(config);
  const auto& free = config.estimator.free;
  const std::size_t d = free.size();

  StudyReport report;
  for (std::size_t j : free) report.free_names.push_back(config.model.param_names().at(j));
  report.theta0_free = free_values(config.theta0, free);
  report.sigma = theoretical_covariance(config);
  report.sigma_inv_sqrt = inverse_sqrt(report.sigma);

  EstimatorSpec spec = config.estimator;
  spec.theta_fixed = config.theta0;
  const std::vector<double> init = config.init_rule == InitRule::truth ? report.theta0_free : config.init;

  const std::size_t m = config.replications;
  const std::size_t total = m * config.grid.size();
  report.records.resize(total);

  // Exact and Monte Carlo providers are shared across replications of one grid point.
  std::vector<std::optional<MomentProvider>> providers(config.grid.size());
  if (spec.q == 1 && spec.mode != CoeffMode::expansion) {
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
      const double delta = config.grid[g].delta;
      if (spec.mode == CoeffMode::exact) {
        providers[g] = exact_provider(config.model, spec.f, delta);
        if (!providers[g])
          throw PreconditionError("no exact moment provider registered for " + config.model.name() +
                                  " and f=" + spec.f.name());
      } else {
        providers[g] = monte_carlo_provider(config.model, spec.f, delta, 100000,
                                            derive_seed(config.seed, {0xC0EFFULL, g}));
      }
    }
  }

  parallel_for(total, config.threads, [&](std::size_t idx) {
    const std::size_t g = idx / m, rep = idx % m;
    const GridPoint& gp = config.grid[g];
    ReplicationRecord& rec = report.records[idx];
    rec.grid_id = g;
    rec.rep = rep;
    rec.seed = replication_seed(config.seed, g, rep);
    rec.z.assign(d, kNan);
    rec.theta_hat.assign(d, kNan);
    try {
      SimulationOptions so;
      so.stepper = config.stepper;
      const auto y = simulate_observations(config.model, config.theta0, gp.scheme(), rec.seed, so);
      const auto est = estimate(config.model, spec, y, gp.delta, init,
                                providers[g] ? &*providers[g] : nullptr);
      rec.theta_hat = est.result.theta_hat;
      rec.converged = est.result.converged;
    } catch (const NoRootError& e) {
      rec.theta_hat = e.best_theta();
      rec.error = e.code();
    } catch (const Error& e) {
      rec.error = e.code();
    }
    if (rec.converged) {
      Eigen::VectorXd diff(d);
      for (std::size_t j = 0; j < d; ++j) diff[j] = rec.theta_hat[j] - report.theta0_free[j];
      const Eigen::VectorXd z = std::sqrt(gp.horizon()) * (report.sigma_inv_sqrt * diff);
      for (std::size_t j = 0; j < d; ++j) rec.z[j] = z[j];
    }
  });

  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    GridSummary s;
    s.grid_id = g;
    s.point = config.grid[g];
    s.replications = m;
    const double nd = s.point.horizon();
    s.n_delta2 = nd * s.point.delta;
    s.n_delta3 = s.n_delta2 * s.point.delta;
    s.horizon_ok = nd >= 10.0;
    s.bias = Eigen::VectorXd::Zero(d);
    s.mean_z = Eigen::VectorXd::Zero(d);
    s.cov_z = Eigen::MatrixXd::Zero(d, d);
    double sq = 0.0;
    std::vector<std::vector<double>> zs(d);
    for (std::size_t rep = 0; rep < m; ++rep) {
      const auto& rec = report.records[g * m + rep];
      if (!rec.converged) continue;
      ++s.converged;
      double r2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double e = rec.theta_hat[j] - report.theta0_free[j];
        s.bias[j] += e;
        r2 += e * e;
        s.mean_z[j] += rec.z[j];
        zs[j].push_back(rec.z[j]);
      }
      sq += r2;
    }
    s.failed = m - s.converged;
    const double k = static_cast<double>(s.converged);
    s.ks = Eigen::VectorXd::Constant(d, kNan);
    if (s.converged > 0) {
      s.bias /= k;
      s.mean_z /= k;
      s.rmse = std::sqrt(sq / k);
    } else {
      s.bias.setConstant(kNan);
      s.mean_z.setConstant(kNan);
      s.rmse = kNan;
    }
    if (s.converged >= 2) {
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
          double acc = 0.0;
          for (std::size_t i = 0; i < zs[a].size(); ++i)
            acc += (zs[a][i] - s.mean_z[a]) * (zs[b][i] - s.mean_z[b]);
          s.cov_z(a, b) = acc / (k - 1.0);
        }
      for (std::size_t j = 0; j < d; ++j) s.ks[j] = ks_normal(zs[j]);
      s.ks_defined = true;
    } else {
      s.cov_z.setConstant(kNan);
    }
    report.grid.push_back(std::move(s));
  }

  for (const auto& s : report.grid) {
    if (static_cast<double>(s.failed) > config.max_failure_rate * static_cast<double>(s.replications)) {
      std::ostringstream os;
      os << "grid point " << s.grid_id << ": " << s.failed << " of " << s.replications
         << " replications failed";
      throw InvalidStudyError(s.grid_id, s.failed, s.replications, os.str());
    }
  }
  return report;
}

double rate_slope(const std::vector<GridSummary>& grid, std::string* regressor) {
  if (grid.size() < 3) throw PreconditionError("rate study: need at least 3 grid points");
  std::vector<double> x, xn, y;
  for (const auto& s : grid) {
    if (!(s.rmse > 0) || !std::isfinite(s.rmse))
      throw DiagnosticsUnreliableError("rate study: RMSE not positive at grid point " + std::to_string(s.grid_id));
    x.push_back(std::log(s.point.horizon()));
    xn.push_back(std::log(static_cast<double>(s.point.n)));
    y.push_back(std::log(s.rmse));
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const bool flat = *hi - *lo < 1e-9;
  if (regressor) *regressor = flat ? "log(n)" : "log(n*delta)";
  return fit_line(flat ? xn : x, y).slope;
}

RateStudy rate_study(const ExperimentConfig& config) {
  if (config.grid.size() < 3) throw PreconditionError("rate study: need at least 3 grid points");
  std::vector<GridPoint> sorted = config.grid;
  std::sort(sorted.begin(), sorted.end(), [](const GridPoint& a, const GridPoint& b) { return a.n < b.n; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const double prev = sorted[k - 1].horizon() * sorted[k - 1].delta * sorted[k - 1].delta;
    const double cur = sorted[k].horizon() * sorted[k].delta * sorted[k].delta;
    if (cur > prev * (1.0 + 1e-12))
      throw PreconditionError("rate study: n*delta^3 must not increase with n");
  }
  RateStudy out;
  out.report = run_study(config);
  out.slope = rate_slope(out.report.grid, &out.regressor);
  return out;
}

FunctionalCltResult functional_clt_check(const DiffusionModel& model, const ParamVector& theta0,
                                         const SmoothFunction& f, const SamplingScheme& scheme,
                                         std::size_t replications, std::uint64_t seed,
                                         unsigned threads) {
  scheme.validate();
  if (replications < 1) throw PreconditionError("functional CLT check: need M >= 1");
  const SmoothFunction fstar = center(model, theta0, f);
  const ScalarAvar av = avar_scalar(model, theta0, fstar);
  if (!(av.v0 > 1e-12)) {
    std::ostringstream os;
    os << "V0(f*) = " << av.v0 << " (<= 1e-12)";
    throw DegeneratePredictorError(os.str());
  }
  FunctionalCltResult out;
  out.v0 = av.v0;
  out.n_delta3 = static_cast<double>(scheme.n) * std::pow(scheme.delta, 3);
  out.z.resize(replications);
  const double scale = std::sqrt(static_cast<double>(scheme.n) * scheme.delta / av.v0);
  parallel_for(replications, threads, [&](std::size_t m) {
    const auto y = simulate_observations(model, theta0, scheme, replication_seed(seed, 0, m));
    double s = 0.0;
    for (double v : y) s += fstar(v);
    out.z[m] = scale * s / static_cast<double>(y.size());
  });
  double sum = 0.0;
  for (double z : out.z) sum += z;
  out.mean_z = sum / static_cast<double>(replications);
  double ss = 0.0;
  for (double z : out.z) ss += (z - out.mean_z) * (z - out.mean_z);
  out.var_z = replications > 1 ? ss / static_cast<double>(replications - 1) : kNan;
  out.ks = ks_normal(out.z);
  return out;
}

}  // namespace intdiff
