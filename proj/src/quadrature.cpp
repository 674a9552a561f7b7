#include "intdiff/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <stdexcept>

namespace intdiff {

namespace {

constexpr int P = PanelRule::kPoints;

// Lagrange basis values l_k(s) for all k, using barycentric weights.
Eigen::VectorXd basis_at(const Eigen::VectorXd& t, const Eigen::VectorXd& lambda, double s) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    if (s == t[k]) {
      out[k] = 1.0;
      return out;
    }
  }
  double denom = 0.0;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    out[k] = lambda[k] / (s - t[k]);
    denom += out[k];
  }
  return out / denom;
}

}  // namespace

const PanelRule& PanelRule::instance() {
  static const PanelRule rule;
  return rule;
}

PanelRule::PanelRule() : t_(P), w_(P), lambda_(P), left_(P, P), right_(P, P), diff_(P, P) {
  using G = boost::math::quadrature::gauss<double, P>;
  const auto& a = G::abscissa();
  const auto& wt = G::weights();
  // Boost stores the nonnegative half; rebuild ascending order.
  const int half = P / 2;
  for (int i = 0; i < half; ++i) {
    t_[half - 1 - i] = -a[i];
    w_[half - 1 - i] = wt[i];
    t_[half + i] = a[i];
    w_[half + i] = wt[i];
  }
  for (int k = 0; k < P; ++k) {
    double prod = 1.0;
    for (int m = 0; m < P; ++m)
      if (m != k) prod *= (t_[k] - t_[m]);
    lambda_[k] = 1.0 / prod;
  }
  // Integral of each basis over [-1, t_j]: map the rule onto that interval.
  // The basis has degree P-1, so the P-point rule is exact.
  for (int j = 0; j < P; ++j) {
    const double half_len = 0.5 * (t_[j] + 1.0);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(P);
    for (int m = 0; m < P; ++m) {
      const double s = -1.0 + half_len * (t_[m] + 1.0);
      acc += w_[m] * half_len * basis_at(t_, lambda_, s);
    }
    left_.row(j) = acc.transpose();
    right_.row(j) = (w_ - acc).transpose();
  }
  for (int j = 0; j < P; ++j) {
    double diag = 0.0;
    for (int k = 0; k < P; ++k) {
      if (k == j) continue;
      diff_(j, k) = (lambda_[k] / lambda_[j]) / (t_[j] - t_[k]);
      diag -= diff_(j, k);
    }
    diff_(j, j) = diag;
  }
}

double PanelRule::interpolate(const double* values, double t) const {
  double num = 0.0, den = 0.0;
  for (int k = 0; k < P; ++k) {
    const double d = t - t_[k];
    if (d == 0.0) return values[k];
    const double c = lambda_[k] / d;
    num += c * values[k];
    den += c;
  }
  return num / den;
}

CompositeGrid::CompositeGrid(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) throw std::invalid_argument("CompositeGrid: need at least one panel");
  for (std::size_t p = 0; p + 1 < edges_.size(); ++p) {
    if (!std::isfinite(edges_[p]) || !std::isfinite(edges_[p + 1]) || !(edges_[p] < edges_[p + 1]))
      throw std::invalid_argument("CompositeGrid: edges must be finite and increasing");
  }
  const auto& rule = PanelRule::instance();
  x_.reserve(panels() * P);
  w_.reserve(panels() * P);
  for (std::size_t p = 0; p < panels(); ++p) {
    const double c = 0.5 * (edges_[p] + edges_[p + 1]);
    const double h = 0.5 * (edges_[p + 1] - edges_[p]);
    for (int k = 0; k < P; ++k) {
      x_.push_back(c + h * rule.nodes()[k]);
      w_.push_back(h * rule.weights()[k]);
    }
  }
}

double CompositeGrid::integrate(const std::vector<double>& values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * values[i];
  return s;
}

std::vector<double> CompositeGrid::cumulative_left(const std::vector<double>& values) const {
  const auto& rule = PanelRule::instance();
  std::vector<double> out(size());
  double offset = 0.0;
  for (std::size_t p = 0; p < panels(); ++p) {
    const double h = 0.5 * (edges_[p + 1] - edges_[p]);
    Eigen::Map<const Eigen::VectorXd> v(values.data() + p * P, P);
    Eigen::VectorXd part = h * (rule.integrate_left() * v);
    for (int k = 0; k < P; ++k) out[p * P + k] = offset + part[k];
    offset += h * rule.weights().dot(v);
  }
  return out;
}

std::vector<double> CompositeGrid::cumulative_right(const std::vector<double>& values) const {
  const auto& rule = PanelRule::instance();
  std::vector<double> out(size());
  double offset = 0.0;
  for (std::size_t q = panels(); q-- > 0;) {
    const double h = 0.5 * (edges_[q + 1] - edges_[q]);
    Eigen::Map<const Eigen::VectorXd> v(values.data() + q * P, P);
    Eigen::VectorXd part = h * (rule.integrate_right() * v);
    for (int k = 0; k < P; ++k) out[q * P + k] = offset + part[k];
    offset += h * rule.weights().dot(v);
  }
  return out;
}

std::vector<double> CompositeGrid::differentiate(const std::vector<double>& values) const {
  const auto& rule = PanelRule::instance();
  std::vector<double> out(size());
  for (std::size_t p = 0; p < panels(); ++p) {
    const double h = 0.5 * (edges_[p + 1] - edges_[p]);
    Eigen::Map<const Eigen::VectorXd> v(values.data() + p * P, P);
    Eigen::VectorXd d = (rule.differentiate() * v) / h;
    for (int k = 0; k < P; ++k) out[p * P + k] = d[k];
  }
  return out;
}

std::size_t CompositeGrid::panel_of(double x) const {
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  std::size_t p = it == edges_.begin() ? 0 : static_cast<std::size_t>(it - edges_.begin()) - 1;
  return std::min(p, panels() - 1);
}

double CompositeGrid::interpolate(const std::vector<double>& values, double x) const {
  x = std::clamp(x, lower(), upper());
  const std::size_t p = panel_of(x);
  const double c = 0.5 * (edges_[p] + edges_[p + 1]);
  const double h = 0.5 * (edges_[p + 1] - edges_[p]);
  return PanelRule::instance().interpolate(values.data() + p * P, (x - c) / h);
}

}  // namespace intdiff
