// Acceptance run: one PASS/FAIL line per criterion. Criterion numbers on the
// command line restrict the run. Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "intdiff/config.hpp"
#include "intdiff/dispatch.hpp"
#include "intdiff/euler_ito.hpp"
#include "intdiff/invariant.hpp"
#include "intdiff/mc.hpp"
#include "intdiff/pbef.hpp"
#include "intdiff/potential.hpp"
#include "intdiff/rng.hpp"
#include "intdiff/simulate.hpp"

using namespace intdiff;

namespace {

constexpr std::uint64_t kSeed = 20261015;
const ParamVector kOu{1.0, 0.0, 1.0};

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;
std::vector<int> selected;  // empty: run everything

bool wanted(int id) { return selected.empty() || std::find(selected.begin(), selected.end(), id) != selected.end(); }

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  if (!wanted(id)) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %2d %-28s %s  %s  [%.1fs]\n", id, name.c_str(), o.pass ? "PASS" : "FAIL",
              o.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !o.pass;
}

void info(const std::string& line) {
  std::printf("             %s\n", line.c_str());
  std::fflush(stdout);
}

Outcome euler_ito_moments() {
  const auto b = simulate_path(ou_model(), kOu, SamplingScheme{100000, 0.01, 64}, derive_seed(kSeed, {1}));
  const auto m = window_moments(euler_ito_decompose_y(b, SmoothFunction::monomial(2), ou_model(), kOu));
  const bool ok = std::abs(m.var_eps1 - 1.0) <= 0.02 && std::abs(m.var_xi1 - 1.0 / 3.0) <= 0.02 &&
                  std::abs(m.mean_eps1_xi1 - 0.5) <= 0.02;
  return {ok, fmt("windows=%zu var_eps1=%.4f var_xi1=%.4f mean_eps1_xi1=%.4f", m.windows, m.var_eps1, m.var_xi1,
                  m.mean_eps1_xi1)};
}

Outcome remainder_orders() {
  RemainderFitOptions o;
  o.substeps = 64;
  const auto fit = remainder_order_fit(ou_model(), kOu, SmoothFunction::monomial(2), {0.02, 0.01, 0.005, 0.0025},
                                       100000, derive_seed(kSeed, {2}), o);
  return {fit.first.slope >= 1.4 && fit.second.slope >= 1.9,
          fmt("slope_first=%.3f (>=1.4) slope_second=%.3f (>=1.9)", fit.first.slope, fit.second.slope)};
}

Outcome variance_identity() {
  const ParamVector cir{2.0, 1.0, 1.0};
  double worst = 0.0;
  auto check = [&](const DiffusionModel& m, const ParamVector& th, const SmoothFunction& f) {
    const auto a = avar_scalar(m, th, f);
    worst = std::max(worst, std::abs(a.v0 - a.v0_alt) / std::abs(a.v0_alt));
    return a;
  };
  for (int k : {1, 3}) check(ou_model(), kOu, SmoothFunction::monomial(k));
  const auto x2 = check(ou_model(), kOu, SmoothFunction::monomial(2));
  for (int k : {1, 2}) check(cir_model(), cir, SmoothFunction::monomial(k));
  const double closed = std::max(std::abs(x2.v0 - 0.5), std::abs(x2.v0_alt - 0.5)) / 0.5;
  return {worst <= 1e-5 && closed <= 1e-5,
          fmt("max rel gap=%.2e  OU x^2: %.10f / %.10f (closed form 0.5)", worst, x2.v0, x2.v0_alt)};
}

Outcome functional_clt() {
  const auto f = SmoothFunction::polynomial({-0.5, 0.0, 1.0});
  const auto r = functional_clt_check(ou_model(), kOu, f, SamplingScheme{20000, 0.01, 16}, 500, kSeed, threads());
  return {r.var_z >= 0.85 && r.var_z <= 1.15 && r.ks <= 0.08,
          fmt("var_z=%.4f ks=%.4f mean_z=%.4f n*delta^3=%.3g", r.var_z, r.ks, r.mean_z, r.n_delta3)};
}

Outcome coefficient_expansion() {
  std::vector<double> lx, ly;
  for (double d : {0.04, 0.02, 0.01, 0.005}) {
    const auto ex = coeffs_exact(*exact_provider(ou_model(), SmoothFunction::monomial(1), d), kOu);
    const auto ap = coeffs_expansion(ou_model(), kOu, d, SmoothFunction::monomial(1));
    lx.push_back(std::log(d));
    ly.push_back(std::log(std::abs(ex.a1 - ap.a1)));
  }
  const double slope = fit_line(lx, ly).slope;
  const double k1 = k_f(ou_model(), kOu, SmoothFunction::monomial(1));
  const double k2 = k_f(ou_model(), kOu, SmoothFunction::monomial(2));
  const bool ok = slope >= 1.4 && std::abs(k1 + 2.0 / 3.0) <= 1e-6 && std::abs(k2 + 4.0 / 3.0) <= 1e-6;
  return {ok, fmt("slope=%.3f (>=1.4) K_x=%.9f K_x2=%.9f", slope, k1, k2)};
}

RunConfig q0_config() {
  auto rc = parse_config(R"({
    "command": "study", "model": "ou", "theta": [1, 0, 1], "f": "x^2",
    "estimator": {"q": 0, "free": ["alpha"], "bounds": {"alpha": [0.2, 5]}},
    "grid": [{"n": 20000, "delta": 0.01}], "M": 500, "K": 16, "seed": 20261015})");
  rc.threads = threads();
  return rc;
}

Outcome simple_clt() {
  const auto r = run_study(experiment_config(q0_config()));
  const auto& s = r.grid[0];
  std::vector<double> raw;
  for (const auto& rec : r.records)
    if (rec.converged) raw.push_back(std::sqrt(s.point.horizon()) * (rec.theta_hat[0] - 1.0));
  double mean = 0.0, var = 0.0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(raw.size());
  for (double v : raw) var += (v - mean) * (v - mean);
  var /= static_cast<double>(raw.size() - 1);
  const double fail_rate = static_cast<double>(s.failed) / static_cast<double>(s.replications);
  const bool ok = var >= 0.85 * 2.0 && var <= 1.15 * 2.0 && std::abs(mean) <= 0.15 * std::sqrt(2.0) &&
                  fail_rate <= 0.05 && std::abs(r.sigma(0, 0) - 2.0) <= 1e-6;
  return {ok, fmt("sigma=%.6f var=%.4f mean=%.4f failed=%zu/%zu ks=%.4f", r.sigma(0, 0), var, mean, s.failed,
                  s.replications, s.ks[0])};
}

struct OnelagRun {
  double ks0, ks1, frob, mean0, mean1, fail_rate;
};

OnelagRun onelag_study(std::size_t n, double delta) {
  ExperimentConfig c;
  c.theta0 = kOu;
  c.estimator.q = 1;
  c.estimator.free = {0, 2};
  c.estimator.bounds = {{0.2, 0.2}, {5.0, 3.0}};
  c.grid = {GridPoint{n, delta, 16}};
  c.replications = 500;
  c.seed = kSeed;
  c.threads = threads();
  const auto r = run_study(c);
  const auto& s = r.grid[0];
  const double frob = (s.cov_z - Eigen::Matrix2d::Identity()).norm() / std::sqrt(2.0);
  return {s.ks[0], s.ks[1], frob, s.mean_z[0], s.mean_z[1],
          static_cast<double>(s.failed) / static_cast<double>(s.replications)};
}

Outcome onelag_clt() {
  const auto r = onelag_study(40000, 0.005);
  const bool ok = r.ks0 <= 0.08 && r.ks1 <= 0.08 && r.frob <= 0.2 && r.fail_rate <= 0.05;
  Outcome o{ok, fmt("n=40000 delta=0.005: ks=(%.4f, %.4f) cov_rel_frob=%.4f mean_z=(%.3f, %.3f) failed=%.3f", r.ks0,
                    r.ks1, r.frob, r.mean0, r.mean1, r.fail_rate)};
  return o;
}

void onelag_documented_runs() {
  for (auto [n, d] : {std::pair<std::size_t, double>{160000, 0.0025}, {100000, 0.002}}) {
    try {
      const auto r = onelag_study(n, d);
      info(fmt("(documented) n=%zu delta=%g n*delta^2=%.2f: ks=(%.4f, %.4f) cov_rel_frob=%.4f mean_z=(%.3f, %.3f)", n,
               d, static_cast<double>(n) * d * d, r.ks0, r.ks1, r.frob, r.mean0, r.mean1));
    } catch (const std::exception& e) {
      info(std::string("(documented) run failed: ") + e.what());
    }
  }
}

Outcome estimating_function_limit() {
  const ParamVector theta{2.0, 0.0, 1.0};
  const std::size_t n = 40000, m = 200;
  const double delta = 0.005;
  const auto f = SmoothFunction::monomial(2);
  std::vector<Eigen::Vector2d> g(m);
  parallel_for(m, threads(), [&](std::size_t k) {
    const auto y = simulate_observations(ou_model(), kOu, SamplingScheme{n, delta, 16}, replication_seed(kSeed, 0, k));
    g[k] = gn_onelag(theta, y, delta, ou_model(), f, CoeffMode::expansion) / (static_cast<double>(n) * delta);
  });
  Eigen::Vector2d mean = Eigen::Vector2d::Zero(), var = Eigen::Vector2d::Zero();
  for (const auto& v : g) mean += v;
  mean /= static_cast<double>(m);
  for (const auto& v : g) var += (v - mean).cwiseAbs2();
  const Eigen::Vector2d se = (var / static_cast<double>(m - 1) / static_cast<double>(m)).cwiseSqrt();
  const Eigen::Vector2d oracle(2.0 / 3.0, 1.0);
  const Eigen::Vector2d module = limit_objects(ou_model(), kOu, theta, f, {0, 2}).gamma;
  const bool ok = std::abs(mean[0] - oracle[0]) <= 3.0 * se[0] && std::abs(mean[1] - oracle[1]) <= 3.0 * se[1];
  return {ok, fmt("mean=(%.4f, %.4f) se=(%.4f, %.4f) oracle=(%.4f, %.4f) quadrature=(%.6f, %.6f)", mean[0], mean[1],
                  se[0], se[1], oracle[0], oracle[1], module[0], module[1])};
}

Outcome rate_check() {
  auto c = experiment_config(q0_config());
  // Δ ∝ n^(-2/3): n grows by 8 while Δ shrinks by 4.
  c.grid = {GridPoint{5000, 0.02, 16}, GridPoint{40000, 0.005, 16}, GridPoint{320000, 0.00125, 16}};
  const auto r = rate_study(c);
  std::string rmse;
  for (const auto& s : r.report.grid) rmse += fmt(" %.4f", s.rmse);
  return {std::abs(r.slope + 0.5) <= 0.1, fmt("slope=%.4f regressor=%s rmse=%s", r.slope, r.regressor.c_str(),
                                               rmse.c_str())};
}

std::string replications_csv(const RunConfig& rc) {
  const ArtifactSet out = run_command(rc);
  for (const auto& [name, content] : out.files())
    if (name == "replications.csv") return content;
  return {};
}

Outcome determinism() {
  auto rc = q0_config();
  rc.threads = 4;
  const auto a = replications_csv(rc);
  rc.threads = 1;
  const auto b = replications_csv(rc);
  return {!a.empty() && a == b, fmt("replications.csv %zu bytes, identical=%s", a.size(), a == b ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  std::printf("acceptance run, master seed %llu, %u threads\n", static_cast<unsigned long long>(kSeed), threads());
  criterion(1, "euler-ito moments", euler_ito_moments);
  criterion(2, "remainder orders", remainder_orders);
  criterion(3, "variance identity", variance_identity);
  criterion(4, "functional clt", functional_clt);
  criterion(5, "coefficient expansion", coefficient_expansion);
  criterion(6, "q=0 asymptotic normality", simple_clt);
  criterion(7, "q=1 asymptotic normality", onelag_clt);
  if (wanted(7)) onelag_documented_runs();
  criterion(8, "estimating function limit", estimating_function_limit);
  criterion(9, "rate of convergence", rate_check);
  criterion(10, "determinism", determinism);
  std::printf("%d of %zu criteria failed\n", failures, selected.empty() ? std::size_t{10} : selected.size());
  return std::min(failures, 100);
}
