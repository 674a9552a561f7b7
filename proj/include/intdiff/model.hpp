#pragma once

#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "intdiff/functions.hpp"

namespace intdiff {

/// Open interval (l, r); either end may be infinite.
class StateSpace {
 public:
  StateSpace(double lower, double upper);

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  bool contains(double x) const noexcept { return x > lower_ && x < upper_; }

 private:
  double lower_;
  double upper_;
};

class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::initializer_list<double> values) : values_(values) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_.at(i); }
  double& operator[](std::size_t i) { return values_.at(i); }
  const std::vector<double>& values() const noexcept { return values_; }

  ParamVector with(std::size_t i, double v) const {
    ParamVector p = *this;
    p[i] = v;
    return p;
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

/// dX = -alpha (X - mean) dt + sigma dB. Models that are OU in disguise
/// expose this so the exact sampler and moment formulas can be used.
struct OuStructure {
  double alpha;
  double mean;
  double sigma;
};

class DiffusionModel {
 public:
  using Coef = std::function<double(double, const ParamVector&)>;

  struct Spec {
    std::string name;
    StateSpace state{-1.0, 1.0};
    std::size_t dim = 0;
    std::vector<std::string> param_names;
    Coef drift;
    Coef diffusion;
    Coef drift_dx;
    Coef diffusion_dx;
    Coef diffusion_dxx;
    /// Throws PreconditionError for invalid θ; returns warnings otherwise.
    std::function<std::vector<std::string>(const ParamVector&)> validate;
    /// A point of high stationary density, used to seed the truncation search.
    std::function<double(const ParamVector&)> location_hint;
    std::function<std::optional<OuStructure>(const ParamVector&)> ou;
  };

  explicit DiffusionModel(Spec spec);

  const std::string& name() const noexcept { return spec_.name; }
  const StateSpace& state() const noexcept { return spec_.state; }
  std::size_t dim() const noexcept { return spec_.dim; }
  const std::vector<std::string>& param_names() const noexcept { return spec_.param_names; }

  /// Dimension and model-specific checks. Returns warnings.
  std::vector<std::string> validate(const ParamVector& theta) const;

  // Checked evaluation: throws DomainError outside (l, r).
  double drift(double x, const ParamVector& theta) const;
  double diffusion(double x, const ParamVector& theta) const;
  double drift_dx(double x, const ParamVector& theta) const;
  double diffusion_dx(double x, const ParamVector& theta) const;
  double diffusion_dxx(double x, const ParamVector& theta) const;

  // Unchecked evaluation for inner loops where x is known to be inside.
  double drift_raw(double x, const ParamVector& theta) const { return spec_.drift(x, theta); }
  double diffusion_raw(double x, const ParamVector& theta) const {
    return spec_.diffusion(x, theta);
  }
  double diffusion_dx_raw(double x, const ParamVector& theta) const;

  bool has_analytic_diffusion_dx() const noexcept { return static_cast<bool>(spec_.diffusion_dx); }
  double location_hint(const ParamVector& theta) const;
  std::optional<OuStructure> ou_structure(const ParamVector& theta) const;
  bool has_ou_structure() const noexcept { return static_cast<bool>(spec_.ou); }

  void require_inside(double x) const;

 private:
  double fd_first(const Coef& fn, double x, const ParamVector& theta) const;

  Spec spec_;
};

/// a = -alpha (x - m), b = sigma on the real line; θ = (alpha, m, sigma).
DiffusionModel ou_model();
/// a = kappa (beta - x), b = sigma sqrt(x) on (0, inf); θ = (kappa, beta, sigma).
DiffusionModel cir_model();
/// Registry lookup: "ou" or "cir". Throws std::invalid_argument otherwise.
DiffusionModel make_model(const std::string& name);

/// a f' + b^2 f'' / 2
double generator_apply(const DiffusionModel& model, const SmoothFunction& f, double x,
                       const ParamVector& theta);
/// L f / 2 - b^2 f'' / 12
double h_operator_apply(const DiffusionModel& model, const SmoothFunction& f, double x,
                        const ParamVector& theta);

}  // namespace intdiff
