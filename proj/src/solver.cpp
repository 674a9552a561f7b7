#include "intdiff/solver.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "intdiff/errors.hpp"

namespace intdiff {

namespace {

struct Run {
  Eigen::VectorXd theta;
  double norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

double safe_norm(const Eigen::VectorXd& g) {
  const double n = g.norm();
  return std::isfinite(n) ? n : std::numeric_limits<double>::infinity();
}

Run newton(const EstimatingFunction& gn, const JacobianFunction& jacobian, Eigen::VectorXd theta,
           const Bounds& bounds, const SolverOptions& opt, double abs_tol) {
  Run run;
  Eigen::VectorXd g = gn(theta);
  run.theta = theta;
  run.norm = safe_norm(g);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (run.norm <= abs_tol) {
      run.converged = true;
      return run;
    }
    if (!std::isfinite(run.norm)) return run;
    const Eigen::MatrixXd j =
        jacobian ? jacobian(theta) : fd_jacobian(gn, theta, g, bounds, opt.fd_relative_step);
    const Eigen::VectorXd step = -j.colPivHouseholderQr().solve(g);
    if (!step.allFinite()) return run;
    double lambda = 1.0;
    bool accepted = false;
    Eigen::VectorXd cand;
    Eigen::VectorXd g_cand;
    for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
      cand = theta + lambda * step;
      if (!bounds.contains(cand)) continue;
      g_cand = gn(cand);
      const double nc = safe_norm(g_cand);
      if (nc < run.norm) {
        accepted = true;
        break;
      }
    }
    ++run.iterations;
    if (!accepted) return run;
    const double moved = (lambda * step).norm();
    theta = cand;
    g = g_cand;
    run.theta = theta;
    run.norm = safe_norm(g);
    if (moved < opt.step_tolerance) {
      run.converged = run.norm <= abs_tol;
      return run;
    }
  }
  run.converged = run.norm <= abs_tol;
  return run;
}

// Bracketed root search for d = 1: sign changes on a uniform scan, the
// bracket nearest to the start is refined with TOMS 748.
std::optional<Run> bracketed(const EstimatingFunction& gn, double start, double lo, double hi,
                             double abs_tol) {
  constexpr int kScan = 64;
  auto g1 = [&](double t) {
    Eigen::VectorXd v(1);
    v[0] = t;
    return gn(v)[0];
  };
  std::vector<double> xs(kScan + 1), gs(kScan + 1);
  for (int k = 0; k <= kScan; ++k) {
    xs[k] = lo + (hi - lo) * static_cast<double>(k) / kScan;
    gs[k] = g1(xs[k]);
  }
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kScan; ++k) {
    if (!std::isfinite(gs[k]) || !std::isfinite(gs[k + 1])) continue;
    if ((gs[k] <= 0.0) == (gs[k + 1] <= 0.0) && gs[k] != 0.0) continue;
    const double d = std::min(std::abs(xs[k] - start), std::abs(xs[k + 1] - start));
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  if (best < 0) return std::nullopt;
  double root;
  int iters = 0;
  if (gs[best] == 0.0) {
    root = xs[best];
  } else {
    boost::uintmax_t max_it = 200;
    boost::math::tools::eps_tolerance<double> tol(52);
    auto r = boost::math::tools::toms748_solve(g1, xs[best], xs[best + 1], gs[best], gs[best + 1],
                                               tol, max_it);
    const double ga = std::abs(g1(r.first)), gb = std::abs(g1(r.second));
    root = ga <= gb ? r.first : r.second;
    iters = static_cast<int>(max_it);
  }
  Run run;
  run.theta = Eigen::VectorXd::Constant(1, root);
  run.norm = std::abs(g1(root));
  run.iterations = iters;
  run.converged = run.norm <= abs_tol;
  return run;
}

}  // namespace

void Bounds::validate(std::size_t dim) const {
  if (lower.size() != dim || upper.size() != dim)
    throw PreconditionError("bounds: dimension does not match the parameter vector");
  for (std::size_t j = 0; j < dim; ++j)
    if (!(lower[j] < upper[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j]))
      throw PreconditionError("bounds: require finite lower < upper");
}

bool Bounds::contains(const Eigen::VectorXd& theta) const {
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (!(theta[j] >= lower[j] && theta[j] <= upper[j])) return false;
  return true;
}

Eigen::MatrixXd fd_jacobian(const EstimatingFunction& gn, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& g_at_theta, const Bounds& bounds,
                            double relative_step) {
  const Eigen::Index d = theta.size();
  Eigen::MatrixXd j(g_at_theta.size(), d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double h = relative_step * std::max(std::abs(theta[c]), 1.0);
    Eigen::VectorXd up = theta, dn = theta;
    up[c] += h;
    dn[c] -= h;
    const bool can_up = up[c] <= bounds.upper[c];
    const bool can_dn = dn[c] >= bounds.lower[c];
    if (can_up && can_dn) {
      j.col(c) = (gn(up) - gn(dn)) / (2.0 * h);
    } else if (can_up) {
      j.col(c) = (gn(up) - g_at_theta) / h;
    } else {
      j.col(c) = (g_at_theta - gn(dn)) / h;
    }
  }
  return j;
}

EstimatorResult solve(const EstimatingFunction& gn, const JacobianFunction& jacobian,
                      const Eigen::VectorXd& theta_init, const Bounds& bounds,
                      const SolverOptions& options) {
  const std::size_t d = static_cast<std::size_t>(theta_init.size());
  if (d == 0) throw PreconditionError("solve: empty parameter vector");
  bounds.validate(d);
  if (!bounds.contains(theta_init)) throw PreconditionError("solve: initial value outside bounds");

  const double abs_tol = options.tolerance * (1.0 + safe_norm(gn(theta_init)));

  std::vector<Eigen::VectorXd> starts{theta_init};
  {
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= 3;
    for (std::size_t idx = 0; idx < total; ++idx) {
      Eigen::VectorXd s(d);
      std::size_t r = idx;
      for (std::size_t j = 0; j < d; ++j) {
        const double q = 0.25 * static_cast<double>(r % 3 + 1);
        s[j] = bounds.lower[j] + q * (bounds.upper[j] - bounds.lower[j]);
        r /= 3;
      }
      starts.push_back(s);
    }
  }

  std::vector<std::pair<Run, int>> runs;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    Run run = newton(gn, jacobian, starts[k], bounds, options, abs_tol);
    if (!run.converged && d == 1) {
      if (auto b = bracketed(gn, starts[k][0], bounds.lower[0], bounds.upper[0], abs_tol)) {
        b->iterations += run.iterations;
        if (b->converged || b->norm < run.norm) run = *b;
      }
    }
    runs.emplace_back(run, static_cast<int>(k));
    if (!options.full_multistart && k == 0 && run.converged) break;
  }

  const std::pair<Run, int>* pick = nullptr;
  auto dist = [&](const Run& r) { return (r.theta - theta_init).norm(); };
  for (const auto& cand : runs) {
    if (!cand.first.converged) continue;
    if (!pick) {
      pick = &cand;
      continue;
    }
    const double dc = dist(cand.first), dp = dist(pick->first);
    const double tie = 1e-6 * (1.0 + theta_init.norm());
    bool better;
    if (std::abs(dc - dp) > tie) {
      better = dc < dp;
    } else if (cand.first.norm != pick->first.norm) {
      better = cand.first.norm < pick->first.norm;
    } else {
      better = std::lexicographical_compare(cand.first.theta.begin(), cand.first.theta.end(),
                                            pick->first.theta.begin(), pick->first.theta.end());
    }
    if (better) pick = &cand;
  }
  if (!pick) {
    const std::pair<Run, int>* best = &runs.front();
    for (const auto& cand : runs)
      if (cand.first.norm < best->first.norm) best = &cand;
    std::vector<double> th(best->first.theta.data(), best->first.theta.data() + d);
    std::ostringstream os;
    os << "no converged root from " << runs.size() << " starts; best |G| = " << best->first.norm;
    throw NoRootError(std::move(th), best->first.norm, os.str());
  }
  EstimatorResult out;
  out.theta_hat.assign(pick->first.theta.data(), pick->first.theta.data() + d);
  out.gn_norm = pick->first.norm;
  out.iterations = pick->first.iterations;
  out.converged = true;
  out.multistart_origin = pick->second;
  return out;
}

}  // namespace intdiff
