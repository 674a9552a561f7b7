#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace intdiff {

/// A real function of one variable with derivatives up to order four.
///
/// Derivatives are analytic when supplied, otherwise central finite
/// differences with a step scaled to the derivative order. Polynomial growth
/// of f and its derivatives is assumed by the theory but not checked here.
class SmoothFunction {
 public:
  using Fn = std::function<double(double)>;
  static constexpr int kMaxOrder = 4;

  /// `derivatives[k]` is the (k+1)-th derivative; missing entries fall back
  /// to finite differences.
  SmoothFunction(std::string name, Fn eval, std::vector<Fn> derivatives = {});

  static SmoothFunction constant(double c);
  /// c[0] + c[1] x + c[2] x^2 + ...
  static SmoothFunction polynomial(std::vector<double> coefficients, std::string name = {});
  static SmoothFunction monomial(int power);
  static SmoothFunction exp_neg();

  double operator()(double x) const { return eval_(x); }

  /// Derivative of the given order (0..4).
  double derivative(int order, double x) const;
  double fd_derivative(int order, double x) const;
  bool has_analytic_derivative(int order) const;

  const std::string& name() const noexcept { return name_; }
  const std::optional<std::vector<double>>& polynomial_coefficients() const noexcept {
    return poly_;
  }

  /// f + c, derivatives unchanged.
  SmoothFunction shifted(double c) const;
  /// c * f
  SmoothFunction scaled(double c) const;

 private:
  std::string name_;
  Fn eval_;
  std::array<Fn, kMaxOrder> derivs_{};
  std::optional<std::vector<double>> poly_;
};

/// Finite-difference step used for a derivative of `order` at `x`.
double fd_step(int order, double x);

/// Central-difference derivative of `fn` of order 1..4 with step `h`.
double central_difference(const std::function<double(double)>& fn, int order, double x,
                          double h);

/// Builds one of the CLI's registered functions: "x", "x^2", "x^3",
/// "exp(-x)". Throws std::invalid_argument for anything else.
SmoothFunction registered_function(const std::string& name);

}  // namespace intdiff
