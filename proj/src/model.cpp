#include "intdiff/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "intdiff/errors.hpp"

namespace intdiff {

StateSpace::StateSpace(double lower, double upper) : lower_(lower), upper_(upper) {
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper))
    throw std::invalid_argument("StateSpace: require lower < upper");
}

DiffusionModel::DiffusionModel(Spec spec) : spec_(std::move(spec)) {
  if (!spec_.drift || !spec_.diffusion)
    throw std::invalid_argument("DiffusionModel: drift and diffusion are required");
  if (spec_.dim == 0) throw std::invalid_argument("DiffusionModel: parameter dimension must be >= 1");
  if (spec_.param_names.empty()) {
    for (std::size_t i = 0; i < spec_.dim; ++i) spec_.param_names.push_back("theta" + std::to_string(i + 1));
  }
  if (spec_.param_names.size() != spec_.dim)
    throw std::invalid_argument("DiffusionModel: param_names size must equal dim");
}

std::vector<std::string> DiffusionModel::validate(const ParamVector& theta) const {
  if (theta.size() != spec_.dim) {
    std::ostringstream os;
    os << name() << ": expected " << spec_.dim << " parameters, got " << theta.size();
    throw PreconditionError(os.str());
  }
  for (double v : theta.values())
    if (!std::isfinite(v)) throw PreconditionError(name() + ": non-finite parameter");
  if (spec_.validate) return spec_.validate(theta);
  return {};
}

void DiffusionModel::require_inside(double x) const {
  if (!spec_.state.contains(x)) {
    std::ostringstream os;
    os.precision(17);
    os << name() << ": x=" << x << " outside state space (" << spec_.state.lower() << ", "
       << spec_.state.upper() << ")";
    throw DomainError(os.str());
  }
}

double DiffusionModel::drift(double x, const ParamVector& theta) const {
  require_inside(x);
  return spec_.drift(x, theta);
}

double DiffusionModel::diffusion(double x, const ParamVector& theta) const {
  require_inside(x);
  return spec_.diffusion(x, theta);
}

double DiffusionModel::fd_first(const Coef& fn, double x, const ParamVector& theta) const {
  double h = std::max(1e-6, 1e-6 * std::abs(x));
  // Keep the stencil inside the state space near a finite boundary.
  const double room = std::min(x - spec_.state.lower(), spec_.state.upper() - x);
  if (h >= room) h = 0.5 * room;
  return (fn(x + h, theta) - fn(x - h, theta)) / (2.0 * h);
}

double DiffusionModel::drift_dx(double x, const ParamVector& theta) const {
  require_inside(x);
  if (spec_.drift_dx) return spec_.drift_dx(x, theta);
  return fd_first(spec_.drift, x, theta);
}

double DiffusionModel::diffusion_dx(double x, const ParamVector& theta) const {
  require_inside(x);
  return diffusion_dx_raw(x, theta);
}

double DiffusionModel::diffusion_dx_raw(double x, const ParamVector& theta) const {
  if (spec_.diffusion_dx) return spec_.diffusion_dx(x, theta);
  return fd_first(spec_.diffusion, x, theta);
}

double DiffusionModel::diffusion_dxx(double x, const ParamVector& theta) const {
  require_inside(x);
  if (spec_.diffusion_dxx) return spec_.diffusion_dxx(x, theta);
  double h = std::pow(std::numeric_limits<double>::epsilon(), 0.25) * std::max(1.0, std::abs(x));
  const double room = std::min(x - spec_.state.lower(), spec_.state.upper() - x);
  if (h >= room) h = 0.5 * room;
  const auto& b = spec_.diffusion;
  return (b(x + h, theta) - 2.0 * b(x, theta) + b(x - h, theta)) / (h * h);
}

double DiffusionModel::location_hint(const ParamVector& theta) const {
  if (spec_.location_hint) return spec_.location_hint(theta);
  const double l = spec_.state.lower(), r = spec_.state.upper();
  if (std::isfinite(l) && std::isfinite(r)) return 0.5 * (l + r);
  if (std::isfinite(l)) return l + 1.0;
  if (std::isfinite(r)) return r - 1.0;
  return 0.0;
}

std::optional<OuStructure> DiffusionModel::ou_structure(const ParamVector& theta) const {
  if (!spec_.ou) return std::nullopt;
  return spec_.ou(theta);
}

DiffusionModel ou_model() {
  DiffusionModel::Spec s;
  s.name = "ou";
  s.state = StateSpace(-std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity());
  s.dim = 3;
  s.param_names = {"alpha", "m", "sigma"};
  s.drift = [](double x, const ParamVector& t) { return -t[0] * (x - t[1]); };
  s.diffusion = [](double, const ParamVector& t) { return t[2]; };
  s.drift_dx = [](double, const ParamVector& t) { return -t[0]; };
  s.diffusion_dx = [](double, const ParamVector&) { return 0.0; };
  s.diffusion_dxx = [](double, const ParamVector&) { return 0.0; };
  s.validate = [](const ParamVector& t) -> std::vector<std::string> {
    if (!(t[2] >= 0)) throw PreconditionError("ou: sigma must be >= 0");
    return {};
  };
  s.location_hint = [](const ParamVector& t) { return t[1]; };
  s.ou = [](const ParamVector& t) -> std::optional<OuStructure> {
    return OuStructure{t[0], t[1], t[2]};
  };
  return DiffusionModel(std::move(s));
}

DiffusionModel cir_model() {
  DiffusionModel::Spec s;
  s.name = "cir";
  s.state = StateSpace(0.0, std::numeric_limits<double>::infinity());
  s.dim = 3;
  s.param_names = {"kappa", "beta", "sigma"};
  s.drift = [](double x, const ParamVector& t) { return t[0] * (t[1] - x); };
  s.diffusion = [](double x, const ParamVector& t) { return t[2] * std::sqrt(x); };
  s.drift_dx = [](double, const ParamVector& t) { return -t[0]; };
  s.diffusion_dx = [](double x, const ParamVector& t) { return 0.5 * t[2] / std::sqrt(x); };
  s.diffusion_dxx = [](double x, const ParamVector& t) {
    return -0.25 * t[2] / (x * std::sqrt(x));
  };
  s.validate = [](const ParamVector& t) {
    if (!(t[1] > 0)) throw PreconditionError("cir: beta must be > 0");
    if (!(t[2] >= 0)) throw PreconditionError("cir: sigma must be >= 0");
    std::vector<std::string> warnings;
    if (2.0 * t[0] * t[1] < t[2] * t[2])
      warnings.emplace_back("cir: 2*kappa*beta < sigma^2, boundary 0 is attainable");
    return warnings;
  };
  s.location_hint = [](const ParamVector& t) { return t[1]; };
  return DiffusionModel(std::move(s));
}

DiffusionModel make_model(const std::string& name) {
  if (name == "ou") return ou_model();
  if (name == "cir") return cir_model();
  throw std::invalid_argument("unknown model '" + name + "'");
}

double generator_apply(const DiffusionModel& model, const SmoothFunction& f, double x,
                       const ParamVector& theta) {
  const double a = model.drift(x, theta);
  const double b = model.diffusion(x, theta);
  return a * f.derivative(1, x) + 0.5 * b * b * f.derivative(2, x);
}

double h_operator_apply(const DiffusionModel& model, const SmoothFunction& f, double x,
                        const ParamVector& theta) {
  const double a = model.drift(x, theta);
  const double b = model.diffusion(x, theta);
  const double f1 = f.derivative(1, x), f2 = f.derivative(2, x);
  // L f / 2 - b^2 f'' / 12 = a f' / 2 + b^2 f'' / 6
  return 0.5 * a * f1 + b * b * f2 / 6.0;
}

}  // namespace intdiff
