#include <cmath>

#include "intdiff/quadrature.hpp"
#include "support.hpp"

using namespace intdiff;

TEST(PanelRule, IntegratesPolynomialsExactly) {
  const auto& r = PanelRule::instance();
  for (int p = 0; p <= 31; ++p) {
    double s = 0.0;
    for (int j = 0; j < PanelRule::kPoints; ++j) s += r.weights()[j] * std::pow(r.nodes()[j], p);
    const double exact = p % 2 == 1 ? 0.0 : 2.0 / (p + 1);
    EXPECT_NEAR(s, exact, 1e-14) << "degree " << p;
  }
}

TEST(CompositeGrid, CumulativeAndDerivative) {
  const CompositeGrid g({0.0, 0.5, 1.5, 3.0});
  EXPECT_EQ(g.size(), 3u * PanelRule::kPoints);
  std::vector<double> v, dv;
  for (double x : g.nodes()) {
    v.push_back(std::cos(x));
    dv.push_back(-std::sin(x));
  }
  EXPECT_NEAR(g.integrate(v), std::sin(3.0), 1e-13);
  const auto left = g.cumulative_left(v);
  const auto right = g.cumulative_right(v);
  const auto d = g.differentiate(v);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.nodes()[i];
    EXPECT_NEAR(left[i], std::sin(x), 1e-12);
    EXPECT_NEAR(right[i], std::sin(3.0) - std::sin(x), 1e-12);
    EXPECT_NEAR(d[i], dv[i], 1e-9);
  }
  EXPECT_NEAR(g.interpolate(v, 1.234), std::cos(1.234), 1e-10);
  EXPECT_NEAR(g.interpolate(v, -1.0), std::cos(0.0), 1e-10);
}
