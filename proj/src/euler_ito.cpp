#include "intdiff/euler_ito.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "intdiff/errors.hpp"
#include "intdiff/invariant.hpp"
#include "intdiff/rng.hpp"

namespace intdiff {

namespace {

void require_increments(const TrajectoryBundle& bundle) {
  const auto& s = bundle.scheme;
  if (bundle.db.size() != s.n * s.substeps || bundle.x_obs.size() != s.n + 1 ||
      bundle.y.size() != s.n)
    throw PreconditionError("Euler-Ito decomposition: bundle lacks increments or observations");
}

}  // namespace

double xi1_variance(std::size_t substeps) {
  const double k = static_cast<double>(substeps);
  return 1.0 / 3.0 - 1.0 / (12.0 * k * k);
}

std::vector<EulerItoRecord> euler_ito_decompose_x(const TrajectoryBundle& bundle,
                                                  const SmoothFunction& f,
                                                  const DiffusionModel& model,
                                                  const ParamVector& theta) {
  require_increments(bundle);
  const auto& s = bundle.scheme;
  const double sd = std::sqrt(s.delta);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<EulerItoRecord> out(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    double w = 0.0;
    for (std::size_t k = 0; k < s.substeps; ++k) w += bundle.db[i * s.substeps + k];
    const double x0 = bundle.x_obs[i];
    const double lead = sd * f.derivative(1, x0) * model.diffusion(x0, theta);
    const double eps1 = w / sd;
    out[i] = {eps1, f(bundle.x_obs[i + 1]) - f(x0) - lead * eps1, nan, nan};
  }
  return out;
}

std::vector<EulerItoRecord> euler_ito_decompose_y(const TrajectoryBundle& bundle,
                                                  const SmoothFunction& f,
                                                  const DiffusionModel& model,
                                                  const ParamVector& theta) {
  auto out = euler_ito_decompose_x(bundle, f, model, theta);
  const auto& s = bundle.scheme;
  const double sd = std::sqrt(s.delta);
  const double kk = static_cast<double>(s.substeps);
  for (std::size_t i = 0; i < s.n; ++i) {
    // Δ^{-3/2} Σ (iΔ - mid_k) db_k with iΔ - mid_k = h (K - k - 1/2)
    double acc = 0.0;
    for (std::size_t k = 0; k < s.substeps; ++k)
      acc += (kk - static_cast<double>(k) - 0.5) * bundle.db[i * s.substeps + k];
    const double xi1 = acc / (kk * sd);
    const double x0 = bundle.x_obs[i];
    const double lead = sd * f.derivative(1, x0) * model.diffusion(x0, theta);
    out[i].xi1 = xi1;
    out[i].xi2 = f(bundle.y[i]) - f(x0) - lead * xi1;
  }
  return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("fit_line: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw PreconditionError("fit_line: abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

RemainderFit remainder_order_fit(const DiffusionModel& model, const ParamVector& theta,
                                 const SmoothFunction& f, const std::vector<double>& deltas,
                                 std::size_t n_per_delta, std::uint64_t seed,
                                 const RemainderFitOptions& options) {
  if (deltas.size() < 4) throw PreconditionError("remainder_order_fit: need >= 4 deltas");
  for (double d : deltas)
    if (!(d > 0)) throw PreconditionError("remainder_order_fit: deltas must be > 0");
  const double ratio = deltas[0] / deltas[1];
  for (std::size_t j = 0; j + 1 < deltas.size(); ++j) {
    const double r = deltas[j] / deltas[j + 1];
    if (!(ratio != 1.0) || std::abs(r / ratio - 1.0) > 1e-6)
      throw PreconditionError("remainder_order_fit: deltas must be distinct and geometrically spaced");
  }
  if (options.bins < 1 || options.chunk < 2)
    throw PreconditionError("remainder_order_fit: invalid bin or chunk settings");

  const InvariantMeasure mu = invariant_measure(model, theta);
  std::vector<double> edges(options.bins - 1);
  for (std::size_t b = 1; b < options.bins; ++b)
    edges[b - 1] = mu.quantile(static_cast<double>(b) / static_cast<double>(options.bins));

  RemainderFit fit;
  fit.deltas = deltas;
  std::vector<double> logd, log1, log2;
  const double vxi = xi1_variance(options.substeps);
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    const double delta = deltas[j];
    std::vector<double> sum_r(options.bins, 0.0), sum_sq(options.bins, 0.0);
    std::vector<std::size_t> count(options.bins, 0);
    std::size_t done = 0;
    for (std::uint64_t c = 0; done < n_per_delta; ++c) {
      const std::size_t n = std::max<std::size_t>(2, std::min(options.chunk, n_per_delta - done));
      SamplingScheme scheme{n, delta, options.substeps};
      auto bundle = simulate_path(model, theta, scheme, derive_seed(seed, {j, c}));
      auto rec = euler_ito_decompose_y(bundle, f, model, theta);
      for (std::size_t i = 0; i < n; ++i) {
        const double x = bundle.x_obs[i];
        const std::size_t bin =
            static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
        const double b = model.diffusion(x, theta);
        // Zero-mean control variate: the f'' (sqrt(Δ) b xi1)^2 / 2 term.
        const double cv = 0.5 * f.derivative(2, x) * b * b * delta * (rec[i].xi1 * rec[i].xi1 - vxi);
        sum_r[bin] += rec[i].xi2 - delta * h_operator_apply(model, f, x, theta) - cv;
        sum_sq[bin] += rec[i].xi2 * rec[i].xi2;
        ++count[bin];
      }
      done += n;
    }
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t b = 0; b < options.bins; ++b) {
      if (count[b] < options.min_per_bin) {
        std::ostringstream os;
        os << "remainder_order_fit: bin " << b << " has " << count[b] << " samples (< "
           << options.min_per_bin << ") at delta=" << delta;
        throw DiagnosticsUnreliableError(os.str());
      }
      const double nb = static_cast<double>(count[b]);
      e1 += std::abs(sum_r[b] / nb);
      e2 += sum_sq[b] / nb;
    }
    e1 /= static_cast<double>(options.bins);
    e2 /= static_cast<double>(options.bins);
    fit.first_error.push_back(e1);
    fit.second_moment.push_back(e2);
    logd.push_back(std::log(delta));
    log1.push_back(std::log(e1));
    log2.push_back(std::log(e2));
  }
  fit.first = fit_line(logd, log1);
  fit.second = fit_line(logd, log2);
  return fit;
}

WindowMoments window_moments(const std::vector<EulerItoRecord>& records) {
  WindowMoments m;
  m.windows = records.size();
  if (records.empty()) return m;
  const double n = static_cast<double>(records.size());
  double se = 0, see = 0, sx = 0, sxx = 0, sex = 0;
  for (const auto& r : records) {
    se += r.eps1;
    sx += r.xi1;
    see += r.eps1 * r.eps1;
    sxx += r.xi1 * r.xi1;
    sex += r.eps1 * r.xi1;
  }
  m.mean_eps1 = se / n;
  m.var_eps1 = see / n - m.mean_eps1 * m.mean_eps1;
  m.var_xi1 = sxx / n - (sx / n) * (sx / n);
  m.mean_eps1_xi1 = sex / n;
  return m;
}

}  // namespace intdiff
