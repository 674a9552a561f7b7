#pragma once

#include <Eigen/Dense>
#include <vector>

namespace intdiff {

/// Gauss-Legendre rule on [-1, 1] together with the spectral matrices that act
/// on nodal values: left/right cumulative integration and differentiation of
/// the interpolating polynomial.
class PanelRule {
 public:
  static constexpr int kPoints = 16;

  static const PanelRule& instance();

  const Eigen::VectorXd& nodes() const noexcept { return t_; }
  const Eigen::VectorXd& weights() const noexcept { return w_; }
  /// S(j, k) = integral of the k-th Lagrange basis over [-1, t_j].
  const Eigen::MatrixXd& integrate_left() const noexcept { return left_; }
  /// integral over [t_j, 1].
  const Eigen::MatrixXd& integrate_right() const noexcept { return right_; }
  /// D(j, k) = derivative of the k-th basis at t_j.
  const Eigen::MatrixXd& differentiate() const noexcept { return diff_; }

  /// Barycentric interpolation of nodal values at t in [-1, 1].
  double interpolate(const double* values, double t) const;

 private:
  PanelRule();

  Eigen::VectorXd t_, w_, lambda_;
  Eigen::MatrixXd left_, right_, diff_;
};

/// Composite Gauss-Legendre grid over panels [e_0, e_1], ..., [e_{P-1}, e_P].
class CompositeGrid {
 public:
  explicit CompositeGrid(std::vector<double> edges);

  std::size_t panels() const noexcept { return edges_.size() - 1; }
  std::size_t size() const noexcept { return x_.size(); }
  double lower() const noexcept { return edges_.front(); }
  double upper() const noexcept { return edges_.back(); }
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& nodes() const noexcept { return x_; }
  const std::vector<double>& weights() const noexcept { return w_; }

  double integrate(const std::vector<double>& values) const;
  /// Integral from lower() to each node.
  std::vector<double> cumulative_left(const std::vector<double>& values) const;
  /// Integral from each node to upper().
  std::vector<double> cumulative_right(const std::vector<double>& values) const;
  /// Derivative of the panelwise interpolant at each node.
  std::vector<double> differentiate(const std::vector<double>& values) const;
  /// Panelwise interpolant at x; x is clamped to [lower(), upper()].
  double interpolate(const std::vector<double>& values, double x) const;

 private:
  std::size_t panel_of(double x) const;

  std::vector<double> edges_;
  std::vector<double> x_, w_;
};

}  // namespace intdiff
