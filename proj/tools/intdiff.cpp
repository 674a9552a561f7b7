#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "intdiff/config.hpp"
#include "intdiff/dispatch.hpp"
#include "intdiff/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Integrated diffusion simulation and prediction-based estimation"};
  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  app.add_option("config", config_path, "JSON run configuration")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides config)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (overrides config)")
                          ->check(CLI::Range(1u, 1024u));
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const intdiff::ConfigError err("argv", e.what());
    std::cerr << intdiff::dump_json(intdiff::error_json(err), 0) << std::endl;
    return 2;
  }

  try {
    std::ifstream in(config_path);
    if (!in) throw intdiff::ConfigError("config", "cannot read " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto rc = intdiff::parse_config(buf.str());
    if (*out_opt) {
      rc.output = out_dir;
      rc.echo["output"] = out_dir;
    }
    if (*threads_opt) {
      rc.threads = threads;
      rc.echo["threads"] = threads;
    }
    if (*seed_opt) {
      rc.seed = seed;
      rc.echo["seed"] = seed;
    }
    return intdiff::dispatch(rc, std::cerr);
  } catch (const intdiff::Error& e) {
    std::cerr << intdiff::dump_json(intdiff::error_json(e), 0) << std::endl;
    return intdiff::exit_code_for(e);
  }
}
