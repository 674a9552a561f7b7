#include <algorithm>
#include <cmath>

#include "intdiff/errors.hpp"
#include "intdiff/invariant.hpp"
#include "intdiff/pbef.hpp"
#include "intdiff/potential.hpp"
#include "intdiff/simulate.hpp"
#include "support.hpp"

using namespace intdiff;
using intdiff::testing::for_all;
using intdiff::testing::Gen;

TEST(SamplingScheme, Validation) {
  EXPECT_THROW((SamplingScheme{1, 0.1, 16}.validate()), PreconditionError);
  EXPECT_THROW((SamplingScheme{10, 0.0, 16}.validate()), PreconditionError);
  EXPECT_THROW((SamplingScheme{10, 0.1, 1}.validate()), PreconditionError);
  EXPECT_NO_THROW((SamplingScheme{2, 0.1, 2}.validate()));
}

TEST(SimulatePath, BundleStructure) {
  const auto b = simulate_path(ou_model(), ParamVector{1.0, 0.0, 1.0}, SamplingScheme{4, 0.25, 8}, 42);
  EXPECT_EQ(b.x_fine.size(), 33u);
  EXPECT_EQ(b.db.size(), 32u);
  EXPECT_EQ(b.y.size(), 4u);
  EXPECT_EQ(b.x_obs.size(), 5u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto first = b.x_fine.begin() + static_cast<std::ptrdiff_t>(i * 8);
    const auto [lo, hi] = std::minmax_element(first, first + 9);
    EXPECT_GE(b.y[i], *lo);
    EXPECT_LE(b.y[i], *hi);
  }
  for (std::size_t i = 0; i <= 4; ++i) EXPECT_EQ(b.x_obs[i], b.x_fine[i * 8]);
}

TEST(SimulatePath, DeterministicInSeed) {
  const auto m = cir_model();
  const ParamVector th{2.0, 1.0, 1.0};
  const SamplingScheme s{50, 0.1, 16};
  const auto a = simulate_path(m, th, s, 9);
  const auto b = simulate_path(m, th, s, 9);
  const auto c = simulate_path(m, th, s, 10);
  EXPECT_EQ(a.x_fine, b.x_fine);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
}

TEST(SimulatePath, StreamingObservationsAreIdentical) {
  for (const auto& m : {ou_model(), cir_model()}) {
    const ParamVector th{2.0, 1.0, 1.0};
    const SamplingScheme s{200, 0.05, 16};
    EXPECT_EQ(simulate_path(m, th, s, 77).y, simulate_observations(m, th, s, 77)) << m.name();
  }
}

TEST(SimulatePath, DegenerateOuFollowsTheOde) {
  SimulationOptions opt;
  opt.x0 = 1.0;
  const double delta = 0.1;
  const auto b = simulate_path(ou_model(), ParamVector{1.0, 0.0, 0.0}, SamplingScheme{20, delta, 64}, 1, opt);
  for (std::size_t i = 0; i < b.y.size(); ++i) {
    const double t0 = static_cast<double>(i) * delta, t1 = t0 + delta;
    const double exact = (std::exp(-t0) - std::exp(-t1)) / delta;
    EXPECT_LE(intdiff::testing::rel_err(b.y[i], exact), 1e-3);
  }
}

TEST(SimulatePath, MilsteinAndExactAgreeOnOuMoments) {
  // Stationary integrated-OU variance 2v(tau - 1 + e^-tau)/tau^2 with v = 1/2.
  const ParamVector th{1.0, 0.0, 1.0};
  const double delta = 0.1;
  const auto g = integrated_ou_moments(1.0, 0.0, 1.0, delta);
  for (auto stepper : {Stepper::milstein, Stepper::exact_ou}) {
    SimulationOptions opt;
    opt.stepper = stepper;
    const auto y = simulate_observations(ou_model(), th, SamplingScheme{200000, delta, 8}, 5, opt);
    double s = 0, ss = 0;
    for (double v : y) {
      s += v;
      ss += v * v;
    }
    const double n = static_cast<double>(y.size());
    const double var = ss / n - (s / n) * (s / n);
    EXPECT_NEAR(var, g.var, 0.02);
  }
}

TEST(SimulatePath, ExactOuStepperNeedsOuStructure) {
  SimulationOptions opt;
  opt.stepper = Stepper::exact_ou;
  EXPECT_THROW(simulate_path(cir_model(), ParamVector{2.0, 1.0, 1.0}, SamplingScheme{5, 0.1, 4}, 1, opt),
               PreconditionError);
}

TEST(SimulatePath, CirStaysPositive) {
  // Boundary attainable: 2 kappa beta < sigma^2.
  SimulationOptions opt;
  opt.x0 = 0.2;
  const auto b = simulate_path(cir_model(), ParamVector{0.5, 0.2, 1.0}, SamplingScheme{2000, 0.05, 16}, 3, opt);
  for (double x : b.x_fine) EXPECT_GT(x, 0.0);
  EXPECT_GT(b.boundary_hits, 0u);
}

TEST(SimulatePath, DivergenceIsReported) {
  DiffusionModel::Spec s;
  s.name = "cubic";
  s.state = StateSpace(-INFINITY, INFINITY);
  s.dim = 1;
  s.param_names = {"c"};
  s.drift = [](double x, const ParamVector& t) { return t[0] * x * x * x; };
  s.diffusion = [](double, const ParamVector&) { return 1.0; };
  const DiffusionModel m(s);
  SimulationOptions opt;
  opt.x0 = 10.0;
  try {
    simulate_path(m, ParamVector{1.0}, SamplingScheme{100, 1.0, 4}, 1, opt);
    FAIL() << "expected divergence";
  } catch (const SimulationDivergedError& e) {
    EXPECT_GT(e.step(), 0u);
    EXPECT_EQ(e.code(), "simulation-diverged");
  }
}

TEST(SimulatePath, IncrementDrivenPathMatchesMilstein) {
  const ParamVector th{2.0, 1.0, 1.0};
  const SamplingScheme s{30, 0.1, 8};
  SimulationOptions opt;
  opt.stepper = Stepper::milstein;
  const auto a = simulate_path(cir_model(), th, s, 4, opt);
  const auto b = simulate_from_increments(cir_model(), th, s, a.x_fine.front(), a.db);
  EXPECT_EQ(a.x_fine, b.x_fine);
  EXPECT_EQ(a.y, b.y);
}

// Halving the substep roughly halves the RMS change of y.
TEST(SimulateProperty, RefiningSubstepsConverges) {
  const ParamVector th{1.0, 0.0, 1.0};
  const std::size_t n = 200, kf = 256;
  const double delta = 0.1;
  SimulationOptions opt;
  opt.stepper = Stepper::milstein;
  const auto fine = simulate_path(ou_model(), th, SamplingScheme{n, delta, kf}, 8, opt);
  auto coarse_y = [&](std::size_t k) {
    std::vector<double> db(n * k, 0.0);
    const std::size_t r = kf / k;
    for (std::size_t j = 0; j < n * kf; ++j) db[j / r] += fine.db[j];
    return simulate_from_increments(ou_model(), th, SamplingScheme{n, delta, k}, fine.x_fine.front(), db).y;
  };
  auto rms = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
  };
  const auto y8 = coarse_y(8), y16 = coarse_y(16), y32 = coarse_y(32);
  const double ratio = rms(y8, y16) / rms(y16, y32);
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 2.5);
}

// Ergodic averages of f(Y) stay within 4 standard deviations of μ(f).
TEST(SimulateProperty, LawOfLargeNumbersAcrossSeeds) {
  const auto ou = ou_model();
  const ParamVector th{1.0, 0.0, 1.0};
  const std::size_t n = 20000;
  const double delta = 0.01;
  for (int k : {1, 2}) {
    const auto f = SmoothFunction::monomial(k);
    const double mu = mu_integral(ou, th, f);
    const double v0 = avar_scalar(ou, th, f).v0;
    int inside = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
      const auto y = simulate_observations(ou, th, SamplingScheme{n, delta, 8}, 1000 + static_cast<std::uint64_t>(s));
      double m = 0;
      for (double v : y) m += f(v);
      m /= static_cast<double>(n);
      if (std::abs(m - mu) <= 4.0 * std::sqrt(v0 / (static_cast<double>(n) * delta))) ++inside;
    }
    EXPECT_GE(inside, static_cast<int>(0.95 * seeds)) << f.name();
  }
}

TEST(DrawStationary, MatchesInvariantLaw) {
  for (const auto& [m, th, mean] : {std::tuple{ou_model(), ParamVector{1.0, 2.0, 1.0}, 2.0},
                                    std::tuple{cir_model(), ParamVector{2.0, 1.0, 1.0}, 1.0}}) {
    double s = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) s += draw_stationary(m, th, static_cast<std::uint64_t>(i));
    EXPECT_NEAR(s / n, mean, 0.03) << m.name();
  }
}
