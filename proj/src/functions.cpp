#include "intdiff/functions.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace intdiff {

namespace {

double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::vector<double> differentiate(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

std::string poly_name(const std::vector<double>& c) {
  std::ostringstream os;
  os.precision(17);
  os << "poly[";
  for (std::size_t k = 0; k < c.size(); ++k) os << (k ? "," : "") << c[k];
  os << "]";
  return os.str();
}

}  // namespace

double fd_step(int order, double x) {
  // eps^(1/(order+2)) balances truncation against rounding for a central
  // stencil of that order.
  const double eps = std::numeric_limits<double>::epsilon();
  const double base = std::pow(eps, 1.0 / (order + 2));
  return base * std::max(1.0, std::abs(x));
}

double central_difference(const std::function<double(double)>& fn, int order, double x,
                          double h) {
  switch (order) {
    case 1:
      return (fn(x + h) - fn(x - h)) / (2.0 * h);
    case 2:
      return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / (h * h);
    case 3:
      return (fn(x + 2 * h) - 2.0 * fn(x + h) + 2.0 * fn(x - h) - fn(x - 2 * h)) /
             (2.0 * h * h * h);
    case 4:
      return (fn(x + 2 * h) - 4.0 * fn(x + h) + 6.0 * fn(x) - 4.0 * fn(x - h) +
              fn(x - 2 * h)) /
             (h * h * h * h);
    default:
      throw std::invalid_argument("central_difference: order must be 1..4");
  }
}

SmoothFunction::SmoothFunction(std::string name, Fn eval, std::vector<Fn> derivatives)
    : name_(std::move(name)), eval_(std::move(eval)) {
  if (!eval_) throw std::invalid_argument("SmoothFunction: empty evaluator");
  if (derivatives.size() > kMaxOrder)
    throw std::invalid_argument("SmoothFunction: at most four derivatives");
  for (std::size_t k = 0; k < derivatives.size(); ++k) derivs_[k] = std::move(derivatives[k]);
}

SmoothFunction SmoothFunction::constant(double c) {
  return polynomial({c}, "const");
}

SmoothFunction SmoothFunction::polynomial(std::vector<double> coefficients, std::string name) {
  if (coefficients.empty()) coefficients.push_back(0.0);
  std::vector<Fn> derivs;
  std::vector<double> c = coefficients;
  for (int k = 0; k < kMaxOrder; ++k) {
    c = differentiate(c);
    derivs.emplace_back([c](double x) { return horner(c, x); });
  }
  if (name.empty()) name = poly_name(coefficients);
  SmoothFunction f(std::move(name), [coefficients](double x) { return horner(coefficients, x); },
                   std::move(derivs));
  f.poly_ = std::move(coefficients);
  return f;
}

SmoothFunction SmoothFunction::monomial(int power) {
  if (power < 0) throw std::invalid_argument("monomial: negative power");
  std::vector<double> c(static_cast<std::size_t>(power) + 1, 0.0);
  c.back() = 1.0;
  std::string name = power == 0 ? "1" : power == 1 ? "x" : "x^" + std::to_string(power);
  return polynomial(std::move(c), std::move(name));
}

SmoothFunction SmoothFunction::exp_neg() {
  auto e = [](double x) { return std::exp(-x); };
  auto me = [](double x) { return -std::exp(-x); };
  return SmoothFunction("exp(-x)", e, {me, e, me, e});
}

double SmoothFunction::derivative(int order, double x) const {
  if (order == 0) return eval_(x);
  if (order < 0 || order > kMaxOrder)
    throw std::invalid_argument("SmoothFunction::derivative: order must be 0..4");
  if (const auto& d = derivs_[order - 1]) return d(x);
  return fd_derivative(order, x);
}

double SmoothFunction::fd_derivative(int order, double x) const {
  if (order == 0) return eval_(x);
  return central_difference(eval_, order, x, fd_step(order, x));
}

bool SmoothFunction::has_analytic_derivative(int order) const {
  if (order == 0) return true;
  if (order < 0 || order > kMaxOrder) return false;
  return static_cast<bool>(derivs_[order - 1]);
}

SmoothFunction SmoothFunction::shifted(double c) const {
  if (poly_) {
    auto coeffs = *poly_;
    coeffs[0] += c;
    return polynomial(std::move(coeffs));
  }
  std::vector<Fn> derivs;
  for (const auto& d : derivs_) {
    if (!d) break;
    derivs.push_back(d);
  }
  auto base = eval_;
  return SmoothFunction(name_ + "+c", [base, c](double x) { return base(x) + c; },
                        std::move(derivs));
}

SmoothFunction SmoothFunction::scaled(double c) const {
  if (poly_) {
    auto coeffs = *poly_;
    for (auto& v : coeffs) v *= c;
    return polynomial(std::move(coeffs));
  }
  std::vector<Fn> derivs;
  for (const auto& d : derivs_) {
    if (!d) break;
    derivs.push_back([d, c](double x) { return c * d(x); });
  }
  auto base = eval_;
  return SmoothFunction(name_ + "*c", [base, c](double x) { return c * base(x); },
                        std::move(derivs));
}

SmoothFunction registered_function(const std::string& name) {
  if (name == "x") return SmoothFunction::monomial(1);
  if (name == "x^2") return SmoothFunction::monomial(2);
  if (name == "x^3") return SmoothFunction::monomial(3);
  if (name == "exp(-x)") return SmoothFunction::exp_neg();
  throw std::invalid_argument("unknown function '" + name + "'");
}

}  // namespace intdiff
