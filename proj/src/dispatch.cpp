#include "intdiff/dispatch.hpp"

#include <cmath>
#include <sstream>

#include "intdiff/euler_ito.hpp"
#include "intdiff/mc.hpp"
#include "intdiff/potential.hpp"
#include "intdiff/rng.hpp"
#include "intdiff/simulate.hpp"

namespace intdiff {

using ojson = nlohmann::ordered_json;

namespace {

void dump_into(std::ostringstream& os, const ojson& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{" << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << "," << nl;
        first = false;
        os << pad << ojson(it.key()).dump() << sep;
        dump_into(os, it.value(), indent, depth + 1);
      }
      os << nl << close << "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      os << "[";
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << (flat ? ", " : ",");
        if (!flat) os << nl << pad;
        first = false;
        dump_into(os, v, indent, depth + 1);
      }
      if (!flat) os << nl << close;
      os << "]";
      return;
    }
    case ojson::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v)) os << fmt17(v);
      else os << "null";
      return;
    }
    default:
      os << j.dump();
  }
}

ojson vec(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ojson mat(const Eigen::MatrixXd& m) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

ojson header(const RunConfig& rc) {
  ojson h;
  h["command"] = to_string(rc.command);
  h["config"] = rc.echo;
  return h;
}

std::vector<std::string> free_names(const RunConfig& rc, const std::vector<std::size_t>& free) {
  std::vector<std::string> out;
  for (std::size_t j : free) out.push_back(rc.model.param_names()[j]);
  return out;
}

ArtifactSet run_simulate(const RunConfig& rc) {
  SimulationOptions opt;
  opt.stepper = rc.stepper;
  opt.x0 = rc.x0;
  const SamplingScheme scheme{rc.n, rc.delta, rc.substeps};
  const auto bundle = simulate_path(rc.model, rc.theta, scheme, rc.seed, opt);

  std::string path = "t,x\n";
  path.reserve(bundle.x_fine.size() * 48);
  const double h = scheme.fine_dt();
  for (std::size_t k = 0; k < bundle.x_fine.size(); ++k)
    path += fmt17(static_cast<double>(k) * h) + "," + fmt17(bundle.x_fine[k]) + "\n";
  std::string obs = "i,y\n";
  for (std::size_t i = 0; i < bundle.y.size(); ++i) obs += std::to_string(i + 1) + "," + fmt17(bundle.y[i]) + "\n";

  double mean = 0.0;
  for (double v : bundle.y) mean += v;
  mean /= static_cast<double>(bundle.y.size());
  double var = 0.0;
  for (double v : bundle.y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(bundle.y.size() - 1);

  ojson rep = header(rc);
  rep["model"] = rc.model_name;
  rep["theta"] = rc.theta.values();
  rep["n"] = rc.n;
  rep["delta"] = rc.delta;
  rep["K"] = rc.substeps;
  rep["seed"] = rc.seed;
  rep["boundary_hits"] = bundle.boundary_hits;
  rep["warnings"] = rc.model.validate(rc.theta);
  rep["mean_y"] = mean;
  rep["var_y"] = var;

  ArtifactSet out;
  out.add("path.csv", std::move(path));
  out.add("observations.csv", std::move(obs));
  out.add("report.json", dump_json(rep) + "\n");
  return out;
}

ArtifactSet run_verify_expansion(const RunConfig& rc) {
  const SamplingScheme scheme{rc.n, rc.delta, rc.substeps};
  const auto bundle = simulate_path(rc.model, rc.theta, scheme, derive_seed(rc.seed, {0}));
  const auto records = euler_ito_decompose_y(bundle, rc.f, rc.model, rc.theta);
  const auto wm = window_moments(records);

  RemainderFitOptions fo;
  fo.substeps = rc.substeps;
  const auto fit = remainder_order_fit(rc.model, rc.theta, rc.f, rc.deltas, rc.n, derive_seed(rc.seed, {1}), fo);

  ojson rep = header(rc);
  rep["model"] = rc.model_name;
  rep["theta"] = rc.theta.values();
  rep["f"] = rc.f_spec;
  rep["windows"] = wm.windows;
  rep["var_eps1"] = wm.var_eps1;
  rep["var_xi1"] = wm.var_xi1;
  rep["var_xi1_theory"] = xi1_variance(rc.substeps);
  rep["cov_eps_xi"] = wm.mean_eps1_xi1;
  rep["deltas"] = fit.deltas;
  rep["xi2_mean_error"] = fit.first_error;
  rep["xi2_second_moment"] = fit.second_moment;
  rep["slope_xi2_mean"] = fit.first.slope;
  rep["slope_xi2_sq"] = fit.second.slope;
  ArtifactSet out;
  out.add("report.json", dump_json(rep) + "\n");
  return out;
}

ArtifactSet run_avar(const RunConfig& rc) {
  std::vector<std::size_t> free;
  if (rc.estimator) free = rc.estimator->free;
  else
    for (std::size_t j = 0; j < rc.model.dim(); ++j) free.push_back(j);

  const auto sc = avar_scalar(rc.model, rc.theta, rc.f);
  const auto lo = limit_objects(rc.model, rc.theta, rc.theta, rc.f, free);

  ojson rep = header(rc);
  rep["model"] = rc.model_name;
  rep["theta"] = rc.theta.values();
  rep["f"] = rc.f_spec;
  rep["free"] = free_names(rc, free);
  rep["mu_f"] = sc.mu_f;
  rep["v0_scalar"] = sc.v0;
  rep["v0_scalar_alt"] = sc.v0_alt;
  rep["poisson_residual"] = std::max(sc.poisson_residual, lo.poisson_residual);
  rep["k_f"] = lo.k0;
  rep["v0_matrix"] = mat(lo.v0);
  rep["w"] = mat(lo.w0);
  rep["w_condition"] = lo.w0_condition;
  rep["w_singular"] = lo.w0_singular;
  if (lo.sigma) rep["sigma"] = mat(*lo.sigma);
  if (free.size() == 1) rep["q0_avar"] = q0_asymptotic_variance(rc.model, rc.theta, rc.f, free[0]);
  if (rc.gamma_halfwidth) {
    ojson g = ojson::array();
    for (const auto& p : gamma_scan(rc.model, rc.theta, rc.f, free, *rc.gamma_halfwidth, rc.gamma_points))
      g.push_back({{"theta", p.theta}, {"gamma", vec(p.gamma)}});
    rep["gamma_grid"] = g;
  }
  ArtifactSet out;
  out.add("report.json", dump_json(rep) + "\n");
  return out;
}

ArtifactSet run_estimate(const RunConfig& rc) {
  const EstimatorSpec spec = estimator_spec(rc);
  std::vector<double> y;
  std::size_t n = 0;
  if (rc.data_path) {
    y = read_observations_csv(*rc.data_path);
    if (y.size() < 2) throw ConfigError("data", "data file needs at least 2 observations");
  } else {
    SimulationOptions opt;
    opt.stepper = rc.stepper;
    y = simulate_observations(rc.model, rc.theta, SamplingScheme{rc.n, rc.delta, rc.substeps}, rc.seed, opt);
  }
  n = y.size();
  std::vector<double> init;
  if (rc.estimator->init_rule == InitRule::fixed) init = rc.estimator->init;
  else
    for (std::size_t j : spec.free) init.push_back(rc.theta[j]);

  const auto est = estimate(rc.model, spec, y, rc.delta, init);

  ojson rep = header(rc);
  rep["free"] = free_names(rc, spec.free);
  rep["theta_hat"] = est.result.theta_hat;
  rep["theta_full"] = est.theta.values();
  rep["gn_norm"] = est.result.gn_norm;
  rep["iterations"] = est.result.iterations;
  rep["converged"] = est.result.converged;
  rep["multistart_origin"] = est.result.multistart_origin;
  rep["mode"] = to_string(spec.mode);
  rep["q"] = spec.q;
  rep["n"] = n;
  rep["delta"] = rc.delta;
  rep["seed"] = rc.seed;
  ArtifactSet out;
  out.add("report.json", dump_json(rep) + "\n");
  return out;
}

ojson grid_json(const GridSummary& s) {
  ojson g;
  g["grid_id"] = s.grid_id;
  g["n"] = s.point.n;
  g["delta"] = s.point.delta;
  g["K"] = s.point.substeps;
  g["M"] = s.replications;
  g["converged"] = s.converged;
  g["failed"] = s.failed;
  g["failure_rate"] = static_cast<double>(s.failed) / static_cast<double>(s.replications);
  g["n_delta"] = s.point.horizon();
  g["n_delta2"] = s.n_delta2;
  g["n_delta3"] = s.n_delta3;
  g["horizon_ok"] = s.horizon_ok;
  g["bias"] = vec(s.bias);
  g["rmse"] = s.rmse;
  g["mean_z"] = vec(s.mean_z);
  g["cov_z"] = mat(s.cov_z);
  g["ks"] = vec(s.ks);
  g["ks_defined"] = s.ks_defined;
  return g;
}

void add_study_artifacts(ArtifactSet& out, ojson rep, const StudyReport& r) {
  const std::size_t d = r.free_names.size();
  rep["free"] = r.free_names;
  rep["theta0"] = r.theta0_free;
  rep["sigma"] = mat(r.sigma);
  ojson grid = ojson::array();
  for (const auto& s : r.grid) grid.push_back(grid_json(s));
  rep["grid"] = grid;

  std::ostringstream csv;
  csv << "grid_id,n,delta,M,failed";
  for (std::size_t j = 1; j <= d; ++j) csv << ",bias_" << j;
  for (std::size_t j = 1; j <= d; ++j) csv << ",ks_" << j;
  csv << ",K,converged,rmse";
  for (std::size_t j = 1; j <= d; ++j) csv << ",mean_z_" << j;
  for (std::size_t j = 1; j <= d; ++j) csv << ",var_z_" << j;
  csv << "\n";
  for (const auto& s : r.grid) {
    csv << s.grid_id << "," << s.point.n << "," << fmt17(s.point.delta) << "," << s.replications << "," << s.failed;
    for (std::size_t j = 0; j < d; ++j) csv << "," << fmt17(s.bias[j]);
    for (std::size_t j = 0; j < d; ++j) csv << "," << fmt17(s.ks[j]);
    csv << "," << s.point.substeps << "," << s.converged << "," << fmt17(s.rmse);
    for (std::size_t j = 0; j < d; ++j) csv << "," << fmt17(s.mean_z[j]);
    for (std::size_t j = 0; j < d; ++j) csv << "," << fmt17(s.cov_z(j, j));
    csv << "\n";
  }

  std::ostringstream reps;
  reps << "grid_id,rep,seed";
  for (std::size_t j = 1; j <= d; ++j) reps << ",theta_" << j;
  for (std::size_t j = 1; j <= d; ++j) reps << ",z_" << j;
  reps << ",converged\n";
  for (const auto& rec : r.records) {
    reps << rec.grid_id << "," << rec.rep << "," << rec.seed;
    for (double v : rec.theta_hat) reps << "," << fmt17(v);
    for (double v : rec.z) reps << "," << fmt17(v);
    reps << "," << (rec.converged ? 1 : 0) << "\n";
  }

  out.add("report.json", dump_json(rep) + "\n");
  out.add("report.csv", csv.str());
  out.add("replications.csv", reps.str());
}

ArtifactSet run_study_command(const RunConfig& rc) {
  const auto cfg = experiment_config(rc);
  ArtifactSet out;
  if (rc.command == Command::rate_study) {
    const auto rs = rate_study(cfg);
    ojson rep = header(rc);
    rep["slope"] = rs.slope;
    rep["regressor"] = rs.regressor;
    add_study_artifacts(out, rep, rs.report);
  } else {
    add_study_artifacts(out, header(rc), run_study(cfg));
  }
  return out;
}

}  // namespace

std::string dump_json(const ojson& j, int indent) {
  std::ostringstream os;
  dump_into(os, j, indent, 0);
  return os.str();
}

ojson error_json(const Error& e) {
  ojson j;
  j["error"] = e.code();
  j["message"] = e.what();
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    j["field"] = c->field();
    if (c->line() > 0) j["line"] = c->line();
  } else if (const auto* s = dynamic_cast<const SimulationDivergedError*>(&e)) {
    j["step"] = s->step();
  } else if (const auto* r = dynamic_cast<const NoRootError*>(&e)) {
    j["best_theta"] = r->best_theta();
    j["best_norm"] = r->best_norm();
  } else if (const auto* v = dynamic_cast<const InvalidStudyError*>(&e)) {
    j["grid_id"] = v->grid_id();
    j["failed"] = v->failed();
    j["replications"] = v->replications();
  }
  return j;
}

int exit_code_for(const Error& e) { return dynamic_cast<const ConfigError*>(&e) ? 2 : 1; }

ArtifactSet run_command(const RunConfig& rc) {
  switch (rc.command) {
    case Command::simulate:
      return run_simulate(rc);
    case Command::verify_expansion:
      return run_verify_expansion(rc);
    case Command::avar:
      return run_avar(rc);
    case Command::estimate:
      return run_estimate(rc);
    case Command::study:
    case Command::rate_study:
      return run_study_command(rc);
  }
  throw PreconditionError("unknown command");
}

int dispatch(const RunConfig& rc, std::ostream& err) {
  try {
    run_command(rc).commit(rc.output);
    return 0;
  } catch (const Error& e) {
    err << dump_json(error_json(e), 0) << std::endl;
    return exit_code_for(e);
  } catch (const std::exception& e) {
    ojson j;
    j["error"] = "io";
    j["message"] = e.what();
    err << dump_json(j, 0) << std::endl;
    return 1;
  }
}

}  // namespace intdiff
