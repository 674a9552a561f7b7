#include "intdiff/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "intdiff/errors.hpp"

namespace intdiff {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Best effort: line of the first occurrence of "key" in the source text.
int line_of_key(const std::string& text, const std::string& field) {
  const auto dot = field.find_last_of('.');
  std::string key = dot == std::string::npos ? field : field.substr(dot + 1);
  if (const auto br = key.find('['); br != std::string::npos) key = key.substr(0, br);
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(field, field + ": " + what, line_of_key(text_, field));
  }

  void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k)) {
        const std::string field = where.empty() ? k : where + "." + k;
        fail(field, "unknown key");
      }
    }
  }

  double number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "must be finite");
    return x;
  }

  std::size_t count(const json& v, const std::string& field, std::size_t min) const {
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x != std::floor(x)) fail(field, "expected an integer");
      if (x < static_cast<double>(min)) fail(field, "must be >= " + std::to_string(min));
      return static_cast<std::size_t>(x);
    }
    if (!v.is_number_integer()) fail(field, "expected an integer");
    if (v.is_number_unsigned()) {
      const auto x = v.get<std::uint64_t>();
      if (x < min) fail(field, "must be >= " + std::to_string(min));
      return static_cast<std::size_t>(x);
    }
    const auto x = v.get<std::int64_t>();
    if (x < static_cast<std::int64_t>(min)) fail(field, "must be >= " + std::to_string(min));
    return static_cast<std::size_t>(x);
  }

  std::uint64_t seed(const json& v, const std::string& field) const {
    if (!v.is_number_unsigned()) fail(field, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  double positive(const json& v, const std::string& field) const {
    const double x = number(v, field);
    if (!(x > 0)) fail(field, "must be > 0");
    return x;
  }

  std::vector<double> numbers(const json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::string string(const json& v, const std::string& field) const {
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const json& v, const std::string& field) const {
    if (!v.is_boolean()) fail(field, "expected true or false");
    return v.get<bool>();
  }

 private:
  const std::string& text_;
};

std::size_t param_index(const Reader& r, const DiffusionModel& m, const std::string& name,
                        const std::string& field) {
  const auto& names = m.param_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) r.fail(field, "unknown parameter '" + name + "' for model " + m.name());
  return static_cast<std::size_t>(it - names.begin());
}

std::string poly_name(const std::vector<double>& c) {
  std::ostringstream os;
  os.precision(17);
  os << "poly(";
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
  os << ")";
  return os.str();
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m{
      {"simulate", Command::simulate},     {"verify-expansion", Command::verify_expansion},
      {"avar", Command::avar},             {"estimate", Command::estimate},
      {"study", Command::study},           {"rate-study", Command::rate_study}};
  return m;
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& [k, v] : commands())
    if (v == c) return k;
  return "simulate";
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what(),
                      line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  Reader r(text);
  if (!doc.is_object()) r.fail("", "top level must be an object");
  if (!doc.contains("command")) r.fail("command", "missing");
  const std::string cmd = r.string(doc["command"], "command");
  if (!commands().count(cmd)) r.fail("command", "unknown command '" + cmd + "'");

  RunConfig rc;
  rc.command = commands().at(cmd);
  ojson echo;
  echo["command"] = cmd;

  std::set<std::string> allowed{"command", "model", "theta", "seed", "threads", "output"};
  switch (rc.command) {
    case Command::simulate:
      allowed.insert({"n", "delta", "K", "stepper", "x0"});
      break;
    case Command::verify_expansion:
      allowed.insert({"f", "n", "delta", "K", "deltas"});
      break;
    case Command::avar:
      allowed.insert({"f", "free", "gamma_grid"});
      break;
    case Command::estimate:
      allowed.insert({"f", "estimator", "data", "n", "delta", "K", "stepper"});
      break;
    case Command::study:
    case Command::rate_study:
      allowed.insert({"f", "estimator", "grid", "M", "K", "stepper"});
      break;
  }
  r.only_keys(doc, "", allowed);

  rc.model_name = doc.contains("model") ? r.string(doc["model"], "model") : "ou";
  try {
    rc.model = make_model(rc.model_name);
  } catch (const std::invalid_argument&) {
    r.fail("model", "unknown model '" + rc.model_name + "'");
  }
  echo["model"] = rc.model_name;

  if (!doc.contains("theta")) r.fail("theta", "missing");
  rc.theta = ParamVector(r.numbers(doc["theta"], "theta"));
  if (rc.theta.size() != rc.model.dim())
    r.fail("theta", "expected " + std::to_string(rc.model.dim()) + " values for model " + rc.model_name);
  try {
    rc.model.validate(rc.theta);
  } catch (const Error& e) {
    r.fail("theta", e.what());
  }
  echo["theta"] = rc.theta.values();

  if (doc.contains("f")) {
    const auto& fv = doc["f"];
    if (fv.is_string()) {
      rc.f_spec = fv.get<std::string>();
      try {
        rc.f = registered_function(rc.f_spec);
      } catch (const std::invalid_argument&) {
        r.fail("f", "unknown function '" + rc.f_spec + "' (use x, x^2, x^3, exp(-x) or {\"coefficients\": [...]})");
      }
    } else if (fv.is_object()) {
      r.only_keys(fv, "f", {"coefficients"});
      if (!fv.contains("coefficients")) r.fail("f.coefficients", "missing");
      const auto c = r.numbers(fv["coefficients"], "f.coefficients");
      if (c.empty()) r.fail("f.coefficients", "must not be empty");
      rc.f_spec = poly_name(c);
      rc.f = SmoothFunction::polynomial(c, rc.f_spec);
    } else {
      r.fail("f", "expected a registered name or {\"coefficients\": [...]}");
    }
  }
  if (rc.command != Command::simulate) echo["f"] = rc.f_spec;

  rc.substeps = doc.contains("K") ? r.count(doc["K"], "K", 2) : 16;

  auto read_stepper = [&] {
    if (!doc.contains("stepper")) return;
    const std::string s = r.string(doc["stepper"], "stepper");
    if (s == "auto") rc.stepper = Stepper::automatic;
    else if (s == "milstein") rc.stepper = Stepper::milstein;
    else if (s == "exact_ou") rc.stepper = Stepper::exact_ou;
    else r.fail("stepper", "expected auto, milstein or exact_ou");
  };
  auto stepper_name = [&] {
    switch (rc.stepper) {
      case Stepper::milstein: return "milstein";
      case Stepper::exact_ou: return "exact_ou";
      default: return "auto";
    }
  };

  auto read_estimator = [&] {
    EstimatorConfig ec;
    const json e = doc.contains("estimator") ? doc["estimator"] : json::object();
    r.only_keys(e, "estimator", {"q", "mode", "corrected_mean", "free", "bounds", "init", "multistart"});
    if (e.contains("q")) {
      const auto q = r.count(e["q"], "estimator.q", 0);
      if (q > 1) r.fail("estimator.q", "must be 0 or 1");
      ec.q = static_cast<int>(q);
    }
    if (e.contains("mode")) {
      const std::string m = r.string(e["mode"], "estimator.mode");
      try {
        ec.mode = coeff_mode_from_string(m);
      } catch (const std::invalid_argument&) {
        r.fail("estimator.mode", "expected exact, expansion or monte_carlo");
      }
    }
    if (e.contains("corrected_mean")) ec.corrected_mean = r.boolean(e["corrected_mean"], "estimator.corrected_mean");
    if (e.contains("multistart")) ec.full_multistart = r.boolean(e["multistart"], "estimator.multistart");
    if (e.contains("free")) {
      const auto& fr = e["free"];
      if (!fr.is_array() || fr.empty()) r.fail("estimator.free", "expected a non-empty array of parameter names");
      for (const auto& v : fr) ec.free.push_back(param_index(r, rc.model, r.string(v, "estimator.free"), "estimator.free"));
      std::set<std::size_t> uniq(ec.free.begin(), ec.free.end());
      if (uniq.size() != ec.free.size()) r.fail("estimator.free", "duplicate parameter");
    } else if (ec.q == 0) {
      ec.free = {0};
    } else {
      ec.free = {0, rc.model.dim() - 1};
    }
    const std::size_t need = ec.q == 0 ? 1 : 2;
    if (ec.free.size() != need)
      r.fail("estimator.free", "q = " + std::to_string(ec.q) + " needs exactly " + std::to_string(need) + " free parameters");
    for (std::size_t j : ec.free) {
      const std::string& name = rc.model.param_names()[j];
      if (!e.contains("bounds") || !e["bounds"].is_object() || !e["bounds"].contains(name))
        r.fail("estimator.bounds", "missing [lower, upper] for free parameter " + name);
      double lo = 0, hi = 0;
      {
        const auto& b = e["bounds"];
        if (!b.is_object()) r.fail("estimator.bounds", "expected an object of name: [lower, upper]");
        for (const auto& [k, v] : b.items()) {
          const auto idx = param_index(r, rc.model, k, "estimator.bounds." + k);
          if (std::find(ec.free.begin(), ec.free.end(), idx) == ec.free.end())
            r.fail("estimator.bounds." + k, "bounds given for a parameter that is not free");
        }
        if (b.contains(name)) {
          const auto lu = r.numbers(b[name], "estimator.bounds." + name);
          if (lu.size() != 2 || !(lu[0] < lu[1])) r.fail("estimator.bounds." + name, "expected [lower, upper] with lower < upper");
          lo = lu[0];
          hi = lu[1];
        }
      }
      ec.bounds.lower.push_back(lo);
      ec.bounds.upper.push_back(hi);
    }
    if (e.contains("init")) {
      const auto& in = e["init"];
      if (in.is_string()) {
        if (in.get<std::string>() != "truth") r.fail("estimator.init", "expected \"truth\" or an array");
      } else {
        ec.init_rule = InitRule::fixed;
        ec.init = r.numbers(in, "estimator.init");
        if (ec.init.size() != ec.free.size()) r.fail("estimator.init", "one value per free parameter");
      }
    }
    for (std::size_t c = 0; c < ec.free.size(); ++c) {
      const double v = ec.init_rule == InitRule::fixed ? ec.init[c] : rc.theta[ec.free[c]];
      if (!(v >= ec.bounds.lower[c] && v <= ec.bounds.upper[c]))
        r.fail(ec.init_rule == InitRule::fixed ? "estimator.init" : "estimator.bounds", "initial value outside bounds");
    }
    ojson eo;
    eo["q"] = ec.q;
    eo["mode"] = to_string(ec.mode);
    eo["corrected_mean"] = ec.corrected_mean;
    eo["multistart"] = ec.full_multistart;
    eo["free"] = ojson::array();
    eo["bounds"] = ojson::object();
    for (std::size_t c = 0; c < ec.free.size(); ++c) {
      const auto& name = rc.model.param_names()[ec.free[c]];
      eo["free"].push_back(name);
      eo["bounds"][name] = {ec.bounds.lower[c], ec.bounds.upper[c]};
    }
    if (ec.init_rule == InitRule::truth) eo["init"] = "truth";
    else eo["init"] = ec.init;
    echo["estimator"] = eo;
    rc.estimator = ec;
  };

  switch (rc.command) {
    case Command::simulate:
      if (!doc.contains("n")) r.fail("n", "missing");
      if (!doc.contains("delta")) r.fail("delta", "missing");
      rc.n = r.count(doc["n"], "n", 2);
      rc.delta = r.positive(doc["delta"], "delta");
      read_stepper();
      if (doc.contains("x0")) {
        rc.x0 = r.number(doc["x0"], "x0");
        if (!rc.model.state().contains(*rc.x0)) r.fail("x0", "outside the state space");
      }
      echo["n"] = rc.n;
      echo["delta"] = rc.delta;
      echo["K"] = rc.substeps;
      echo["stepper"] = stepper_name();
      if (rc.x0) echo["x0"] = *rc.x0;
      break;
    case Command::verify_expansion:
      rc.n = doc.contains("n") ? r.count(doc["n"], "n", 2) : 100000;
      rc.delta = doc.contains("delta") ? r.positive(doc["delta"], "delta") : 0.01;
      rc.deltas = doc.contains("deltas") ? r.numbers(doc["deltas"], "deltas")
                                         : std::vector<double>{0.02, 0.01, 0.005, 0.0025};
      if (rc.deltas.size() < 4) r.fail("deltas", "need at least 4 values");
      for (double d : rc.deltas)
        if (!(d > 0)) r.fail("deltas", "values must be > 0");
      echo["n"] = rc.n;
      echo["delta"] = rc.delta;
      echo["K"] = rc.substeps;
      echo["deltas"] = rc.deltas;
      break;
    case Command::avar:
      if (doc.contains("free")) {
        const auto& fr = doc["free"];
        if (!fr.is_array() || fr.empty()) r.fail("free", "expected a non-empty array of parameter names");
        EstimatorConfig ec;
        for (const auto& v : fr) ec.free.push_back(param_index(r, rc.model, r.string(v, "free"), "free"));
        rc.estimator = ec;
      }
      if (doc.contains("gamma_grid")) {
        const auto& g = doc["gamma_grid"];
        r.only_keys(g, "gamma_grid", {"halfwidth", "points"});
        rc.gamma_halfwidth = g.contains("halfwidth") ? r.positive(g["halfwidth"], "gamma_grid.halfwidth") : 0.5;
        rc.gamma_points = g.contains("points") ? r.count(g["points"], "gamma_grid.points", 2) : 5;
        echo["gamma_grid"] = {{"halfwidth", *rc.gamma_halfwidth}, {"points", rc.gamma_points}};
      }
      if (rc.estimator) {
        echo["free"] = ojson::array();
        for (std::size_t j : rc.estimator->free) echo["free"].push_back(rc.model.param_names()[j]);
      }
      break;
    case Command::estimate:
      read_estimator();
      if (doc.contains("data")) {
        rc.data_path = r.string(doc["data"], "data");
        if (!doc.contains("delta")) r.fail("delta", "missing (sampling interval of the data)");
        rc.delta = r.positive(doc["delta"], "delta");
        if (doc.contains("n")) r.fail("n", "not allowed together with data");
        echo["data"] = *rc.data_path;
        echo["delta"] = rc.delta;
      } else {
        if (!doc.contains("n")) r.fail("n", "missing");
        if (!doc.contains("delta")) r.fail("delta", "missing");
        rc.n = r.count(doc["n"], "n", 2);
        rc.delta = r.positive(doc["delta"], "delta");
        read_stepper();
        echo["n"] = rc.n;
        echo["delta"] = rc.delta;
        echo["K"] = rc.substeps;
        echo["stepper"] = stepper_name();
      }
      break;
    case Command::study:
    case Command::rate_study: {
      read_estimator();
      read_stepper();
      if (!doc.contains("grid")) r.fail("grid", "missing");
      const auto& g = doc["grid"];
      if (!g.is_array() || g.empty()) r.fail("grid", "expected a non-empty array");
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::string w = "grid[" + std::to_string(i) + "]";
        r.only_keys(g[i], w, {"n", "delta", "K"});
        if (!g[i].contains("n")) r.fail(w + ".n", "missing");
        if (!g[i].contains("delta")) r.fail(w + ".delta", "missing");
        GridPoint p;
        p.n = r.count(g[i]["n"], w + ".n", 2);
        p.delta = r.positive(g[i]["delta"], w + ".delta");
        p.substeps = g[i].contains("K") ? r.count(g[i]["K"], w + ".K", 2) : rc.substeps;
        rc.grid.push_back(p);
      }
      if (rc.command == Command::rate_study && rc.grid.size() < 3)
        r.fail("grid", "rate study needs at least 3 grid points");
      rc.replications = doc.contains("M") ? r.count(doc["M"], "M", 1) : 500;
      echo["grid"] = ojson::array();
      for (const auto& p : rc.grid) echo["grid"].push_back({{"n", p.n}, {"delta", p.delta}, {"K", p.substeps}});
      echo["M"] = rc.replications;
      echo["stepper"] = stepper_name();
      break;
    }
  }

  if (doc.contains("seed")) rc.seed = r.seed(doc["seed"], "seed");
  if (doc.contains("threads")) rc.threads = static_cast<unsigned>(r.count(doc["threads"], "threads", 1));
  if (doc.contains("output")) rc.output = r.string(doc["output"], "output");
  echo["seed"] = rc.seed;
  echo["threads"] = rc.threads;
  echo["output"] = rc.output;
  rc.echo = std::move(echo);
  return rc;
}

EstimatorSpec estimator_spec(const RunConfig& rc) {
  if (!rc.estimator) throw PreconditionError("configuration has no estimator");
  const auto& ec = *rc.estimator;
  EstimatorSpec s;
  s.f = rc.f;
  s.q = ec.q;
  s.mode = ec.mode;
  s.corrected_mean = ec.corrected_mean;
  s.theta_fixed = rc.theta;
  s.free = ec.free;
  s.bounds = ec.bounds;
  s.solver.full_multistart = ec.full_multistart;
  return s;
}

ExperimentConfig experiment_config(const RunConfig& rc) {
  ExperimentConfig c;
  c.model = rc.model;
  c.theta0 = rc.theta;
  c.estimator = estimator_spec(rc);
  c.grid = rc.grid;
  c.replications = rc.replications;
  c.seed = rc.seed;
  c.init_rule = rc.estimator->init_rule;
  c.init = rc.estimator->init;
  c.threads = rc.threads;
  c.stepper = rc.stepper;
  return c;
}

}  // namespace intdiff
