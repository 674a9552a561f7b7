#include <cmath>

#include "intdiff/errors.hpp"
#include "intdiff/euler_ito.hpp"
#include "intdiff/pbef.hpp"
#include "intdiff/potential.hpp"
#include "intdiff/simulate.hpp"
#include "support.hpp"

using namespace intdiff;
using intdiff::testing::for_all;
using intdiff::testing::Gen;

namespace {
const ParamVector kUnit{1.0, 0.0, 1.0};
}

TEST(MomentExpansions, LinearFunctionOnOu) {
  const auto e = moment_expansions(ou_model(), kUnit, 0.01, SmoothFunction::monomial(1));
  EXPECT_NEAR(e.m0, 0.0, 1e-9);
  EXPECT_NEAR(e.m1, -1.0 / 6.0, 1e-8);
  EXPECT_NEAR(e.m2, -0.5, 1e-8);
}

TEST(MomentExpansions, ZeroDeltaGivesStationaryMoments) {
  const auto e = moment_expansions(ou_model(), kUnit, 0.0, SmoothFunction::monomial(2));
  EXPECT_NEAR(e.ef_sq, 0.25, 1e-9);
  EXPECT_NEAR(e.ef2, 0.75, 1e-9);
  EXPECT_NEAR(e.eff, 0.75, 1e-9);
}

TEST(MomentExpansionsProperty, DifferenceOverVarianceIsK) {
  for_all(20, 606, [](Gen& g, int) {
    const bool ou = g.integer(0, 1) == 0;
    const DiffusionModel m = ou ? ou_model() : cir_model();
    const ParamVector th = ou ? ParamVector{g.log_uniform(0.3, 3.0), g.uniform(-1, 1), g.log_uniform(0.3, 2.0)}
                              : ParamVector{g.log_uniform(1.0, 3.0), g.uniform(1.0, 2.0), g.log_uniform(0.3, 1.0)};
    const auto f = SmoothFunction::monomial(g.integer(1, 3));
    const auto pm = predictor_moments(invariant_measure(m, th), f);
    const auto e = moment_expansions(pm, 0.01);
    EXPECT_LE(std::abs((e.m2 - e.m1) / pm.var - pm.k()) / std::max(1.0, std::abs(pm.k())), 1e-8);
  });
}

TEST(CoeffsExpansion, Examples) {
  const auto c = coeffs_expansion(ou_model(), kUnit, 0.01, SmoothFunction::monomial(2));
  EXPECT_NEAR(c.a1, 1.0 - 4.0 / 300.0, 1e-9);
  EXPECT_NEAR(c.a0, 1.0 / 150.0, 1e-9);
  const auto z = coeffs_expansion(ou_model(), kUnit, 0.0, SmoothFunction::monomial(2));
  EXPECT_EQ(z.a0, 0.0);
  EXPECT_EQ(z.a1, 1.0);
  for (double d : {0.001, 0.01, 0.1}) EXPECT_NEAR(coeffs_expansion(ou_model(), kUnit, d, SmoothFunction::monomial(1)).a0, 0.0, 1e-10);
}

TEST(IntegratedOu, SmallAndLargeTauBranchesAgree) {
  const auto a = integrated_ou_moments(1.0, 0.0, 1.0, 0.00999999);
  const auto b = integrated_ou_moments(1.0, 0.0, 1.0, 0.01000001);
  EXPECT_NEAR(a.var, b.var, 1e-8);
  EXPECT_NEAR(a.cov, b.cov, 1e-8);
  EXPECT_THROW(integrated_ou_moments(-1.0, 0.0, 1.0, 0.1), NotErgodicError);
}

TEST(CoeffsExact, LinearOuMatchesClosedForm) {
  // Values from the independent high-precision oracle.
  const std::vector<std::pair<double, double>> cases{{0.04, 0.97377237844412053},
                                                     {0.02, 0.98677709959176682},
                                                     {0.01, 0.99336102613230375},
                                                     {0.005, 0.99667360047587445}};
  for (const auto& [d, a1] : cases) {
    const auto p = exact_provider(ou_model(), SmoothFunction::monomial(1), d);
    ASSERT_TRUE(p.has_value());
    const auto c = coeffs_exact(*p, kUnit);
    EXPECT_NEAR(c.a1, a1, 1e-13);
    EXPECT_NEAR(c.a0, 0.0, 1e-15);
    EXPECT_LE(std::abs(c.a1 - (1.0 - 2.0 * d / 3.0)), 5e-4);
  }
}

TEST(CoeffsExact, UncorrelatedProviderGivesZeroSlope) {
  MomentProvider p;
  p.delta = 0.1;
  p.moments = [](const ParamVector&) { return YMoments{2.0, 5.0, 4.0}; };
  const auto c = coeffs_exact(p, kUnit);
  EXPECT_EQ(c.a1, 0.0);
  EXPECT_EQ(c.a0, 2.0);
}

TEST(CoeffsExact, DegenerateVarianceIsRejected) {
  EXPECT_THROW(coeffs_from_moments(YMoments{1.0, 1.0, 1.0}, 0.1, CoeffMode::exact), DegeneratePredictorError);
}

TEST(CoeffsExact, NoProviderForCir) {
  EXPECT_FALSE(exact_provider(cir_model(), SmoothFunction::monomial(1), 0.1).has_value());
  EXPECT_FALSE(exact_provider(ou_model(), SmoothFunction::monomial(3), 0.1).has_value());
  EXPECT_THROW(coefficients(cir_model(), ParamVector{2.0, 1.0, 1.0}, 0.1, SmoothFunction::monomial(1), CoeffMode::exact),
               PreconditionError);
}

TEST(CoeffsExact, ProviderMomentsAreConsistent) {
  for_all(20, 707, [](Gen& g, int) {
    const ParamVector th{g.log_uniform(0.3, 3.0), g.uniform(-1.0, 1.0), g.log_uniform(0.3, 2.0)};
    const auto f = SmoothFunction::polynomial({g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1)});
    const auto p = exact_provider(ou_model(), f, g.log_uniform(0.001, 0.5));
    const auto m = p->moments(th);
    EXPECT_GE(m.ef2, m.ef * m.ef - 1e-10);
  });
}

TEST(MonteCarloProvider, ReproducesExactMoments) {
  const double delta = 0.1;
  const auto f = SmoothFunction::monomial(2);
  const auto mc = monte_carlo_moments(ou_model(), kUnit, f, delta, 1000000, 99);
  const auto ex = exact_provider(ou_model(), f, delta)->moments(kUnit);
  EXPECT_LE(std::abs(mc.m.ef - ex.ef), 3.0 * mc.se.ef);
  EXPECT_LE(std::abs(mc.m.ef2 - ex.ef2), 3.0 * mc.se.ef2);
  EXPECT_LE(std::abs(mc.m.eff - ex.eff), 3.0 * mc.se.eff);
}

// |a1 exact - a1 expansion| = O(Δ^{3/2}) or better.
TEST(CoefficientProperty, ExpansionErrorOrder) {
  for (int k : {1, 2}) {
    const auto f = SmoothFunction::monomial(k);
    std::vector<double> lx, ly;
    for (double d : {0.04, 0.02, 0.01, 0.005}) {
      const double ex = coeffs_exact(*exact_provider(ou_model(), f, d), kUnit).a1;
      const double ap = coeffs_expansion(ou_model(), kUnit, d, f).a1;
      lx.push_back(std::log(d));
      ly.push_back(std::log(std::abs(ex - ap)));
    }
    EXPECT_GE(fit_line(lx, ly).slope, 1.4) << f.name();
  }
}

TEST(GnSimple, ZeroWhenDataSitAtTheMean) {
  const auto f = SmoothFunction::monomial(1);
  const double m = simple_mean(ou_model(), ParamVector{1.0, 0.3, 1.0}, 0.01, f);
  EXPECT_NEAR(gn_simple(ParamVector{1.0, 0.3, 1.0}, std::vector<double>(50, m), 0.01, ou_model(), f), 0.0, 1e-12);
}

TEST(GnSimple, CorrectedMeanAddsHTerm) {
  const auto f = SmoothFunction::monomial(2);
  // μ(H f) = -μ(b^2 f'')/12 = -1/6 for OU(1,0,1).
  EXPECT_NEAR(simple_mean(ou_model(), kUnit, 0.01, f, true), 0.5 - 0.01 / 6.0, 1e-9);
  EXPECT_NEAR(simple_mean(ou_model(), kUnit, 0.01, f, false), 0.5, 1e-9);
}

TEST(GnSimple, MeanIsDecreasingInAlpha) {
  const auto f = SmoothFunction::monomial(2);
  double prev = INFINITY;
  for (double a = 0.5; a <= 2.0; a += 0.1) {
    const double m = simple_mean(ou_model(), ParamVector{a, 0.0, 1.0}, 0.01, f);
    EXPECT_LT(m, prev);
    prev = m;
  }
}

TEST(GnOnelag, ZeroOnTheRegressionLine) {
  const auto f = SmoothFunction::monomial(1);
  CoefficientVector c;
  c.a0 = 0.2;
  c.a1 = 0.5;
  std::vector<double> y{1.0};
  for (int i = 0; i < 20; ++i) y.push_back(c.a0 + c.a1 * y.back());
  const auto g = gn_onelag_direct(y, f, c);
  EXPECT_NEAR(g.norm(), 0.0, 1e-14);
  EXPECT_NEAR(gn_onelag(OnelagStats::from(y, f), c).norm(), 0.0, 1e-13);
}

TEST(GnOnelag, SufficientStatisticsMatchDirectSum) {
  for_all(10, 808, [](Gen& g, int) {
    const auto y = simulate_observations(ou_model(), kUnit, SamplingScheme{1000, 0.05, 8}, g.seed());
    const auto f = SmoothFunction::monomial(g.integer(1, 3));
    CoefficientVector c;
    c.a0 = g.uniform(-1, 1);
    c.a1 = g.uniform(0, 1);
    const auto a = gn_onelag_direct(y, f, c);
    const auto b = gn_onelag(OnelagStats::from(y, f), c);
    EXPECT_LE((a - b).norm(), 1e-9 * (1.0 + a.norm()));
  });
}

TEST(GnOnelag, NeedsThreeObservations) {
  EXPECT_THROW(OnelagStats::from({1.0, 2.0}, SmoothFunction::monomial(1)), PreconditionError);
}

TEST(GnOnelag, ScaledFunctionAtTruthIsSmall) {
  const double delta = 0.01;
  const std::size_t n = 40000;
  const auto f = SmoothFunction::monomial(2);
  const auto lo = limit_objects(ou_model(), kUnit, kUnit, f, {0, 2});
  const double bound = 4.0 * std::sqrt(lo.v0.trace() / (static_cast<double>(n) * delta));
  const auto y = simulate_observations(ou_model(), kUnit, SamplingScheme{n, delta, 16}, 31);
  const auto g = gn_onelag(kUnit, y, delta, ou_model(), f, CoeffMode::expansion) / (static_cast<double>(n) * delta);
  EXPECT_LE(g.norm(), bound);
}

namespace {

double coverage(int q, int seeds) {
  const auto f = SmoothFunction::monomial(2);
  EstimatorSpec spec;
  spec.f = f;
  spec.q = q;
  spec.theta_fixed = kUnit;
  if (q == 0) {
    spec.free = {0};
    spec.bounds = {{0.2}, {5.0}};
  } else {
    spec.free = {0, 2};
    spec.bounds = {{0.2, 0.2}, {5.0, 3.0}};
  }
  int ok = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto y = simulate_observations(ou_model(), kUnit, SamplingScheme{20000, 0.01, 16}, 500 + static_cast<std::uint64_t>(s));
    try {
      const auto e = estimate(ou_model(), spec, y, 0.01, q == 0 ? std::vector<double>{1.0} : std::vector<double>{1.0, 1.0});
      const bool in = q == 0 ? std::abs(e.theta[0] - 1.0) <= 0.2
                             : std::abs(e.theta[0] - 1.0) <= 0.3 && std::abs(e.theta[2] - 1.0) <= 0.15;
      ok += in;
    } catch (const NoRootError&) {
    }
  }
  return static_cast<double>(ok) / seeds;
}

}  // namespace

TEST(Estimate, SimpleEstimatorIsAccurateForMostSeeds) { EXPECT_GE(coverage(0, 40), 0.9); }

TEST(Estimate, OneLagEstimatorIsAccurateForMostSeeds) { EXPECT_GE(coverage(1, 40), 0.9); }

TEST(Estimate, ExactModeAgreesWithExpansionAtSmallDelta) {
  const auto y = simulate_observations(ou_model(), kUnit, SamplingScheme{20000, 0.005, 16}, 4);
  EstimatorSpec spec;
  spec.theta_fixed = kUnit;
  spec.free = {0, 2};
  spec.bounds = {{0.2, 0.2}, {5.0, 3.0}};
  const auto a = estimate(ou_model(), spec, y, 0.005, {1.0, 1.0});
  spec.mode = CoeffMode::exact;
  const auto b = estimate(ou_model(), spec, y, 0.005, {1.0, 1.0});
  EXPECT_NEAR(a.theta[0], b.theta[0], 0.02);
  EXPECT_NEAR(a.theta[2], b.theta[2], 0.02);
}

TEST(Estimate, WrongFreeCountIsRejected) {
  EstimatorSpec spec;
  spec.theta_fixed = kUnit;
  spec.q = 1;
  spec.free = {0};
  spec.bounds = {{0.2}, {5.0}};
  EXPECT_THROW(estimate(ou_model(), spec, std::vector<double>(10, 0.0), 0.01, {1.0}), PreconditionError);
}

TEST(CoeffModeNames, RoundTrip) {
  for (auto m : {CoeffMode::exact, CoeffMode::expansion, CoeffMode::monte_carlo})
    EXPECT_EQ(coeff_mode_from_string(to_string(m)), m);
  EXPECT_THROW(coeff_mode_from_string("magic"), std::invalid_argument);
}
