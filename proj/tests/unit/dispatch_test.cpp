#include <filesystem>
#include <fstream>
#include <sstream>

#include "intdiff/dispatch.hpp"
#include "intdiff/io.hpp"
#include "support.hpp"

using namespace intdiff;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("intdiff_dispatch_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Fmt17, SeventeenDigits) {
  EXPECT_EQ(fmt17(0.1), "0.10000000000000001");
  EXPECT_EQ(fmt17(2.0), "2");
  EXPECT_EQ(fmt17(std::nan("")), "nan");
}

TEST(DumpJson, FloatsAndNonFinite) {
  nlohmann::ordered_json j;
  j["a"] = 0.1;
  j["b"] = std::numeric_limits<double>::infinity();
  j["c"] = {1.0, 2.5};
  j["d"] = 3;
  EXPECT_EQ(dump_json(j, 0), R"({"a":0.10000000000000001,"b":null,"c":[1, 2.5],"d":3})");
  const auto back = nlohmann::json::parse(dump_json(j));
  EXPECT_DOUBLE_EQ(back["a"].get<double>(), 0.1);
  EXPECT_TRUE(back["b"].is_null());
}

TEST(ErrorJson, CarriesStructuredFields) {
  const auto c = error_json(ConfigError("n", "n: must be >= 2", 3));
  EXPECT_EQ(c["error"], "config");
  EXPECT_EQ(c["field"], "n");
  EXPECT_EQ(c["line"], 3);
  const auto r = error_json(NoRootError({1.5}, 0.25, "none"));
  EXPECT_EQ(r["error"], "no-root");
  EXPECT_EQ(r["best_theta"][0], 1.5);
  EXPECT_EQ(dump_json(r, 0).find('\n'), std::string::npos);
}

TEST(ExitCodes, ConfigVersusComputation) {
  EXPECT_EQ(exit_code_for(ConfigError("x", "bad")), 2);
  EXPECT_EQ(exit_code_for(PreconditionError("bad")), 1);
  EXPECT_EQ(exit_code_for(NoRootError({}, 1.0, "none")), 1);
}

TEST(Dispatch, SimulateWritesArtifacts) {
  const auto dir = scratch_dir("sim");
  auto rc = parse_config(R"({"command": "simulate", "theta": [1, 0, 1], "n": 50, "delta": 0.1, "K": 4, "seed": 3})");
  rc.output = dir.string();
  std::ostringstream err;
  ASSERT_EQ(dispatch(rc, err), 0) << err.str();
  EXPECT_TRUE(fs::exists(dir / "path.csv"));
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  const auto y = read_observations_csv(dir / "observations.csv");
  ASSERT_EQ(y.size(), 50u);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["config"]["seed"], 3);

  // Same seed, same bytes.
  const auto dir2 = scratch_dir("sim2");
  rc.output = dir2.string();
  ASSERT_EQ(dispatch(rc, err), 0);
  EXPECT_EQ(slurp(dir / "observations.csv"), slurp(dir2 / "observations.csv"));
}

TEST(Dispatch, FailureLeavesNoArtifacts) {
  const auto dir = scratch_dir("fail");
  // The bounds exclude every root.
  auto rc = parse_config(R"({"command": "estimate", "theta": [1, 0, 1], "n": 2000, "delta": 0.02, "K": 4,
                             "estimator": {"q": 0, "bounds": {"alpha": [4.999, 5]}, "init": [5],
                                           "multistart": false}})");
  rc.output = dir.string();
  std::ostringstream err;
  EXPECT_EQ(dispatch(rc, err), 1);
  EXPECT_TRUE(fs::is_empty(dir));
  const auto j = nlohmann::json::parse(err.str());
  EXPECT_EQ(j["error"], "no-root");
}

TEST(ArtifactSetTest, CommitPublishesAllFiles) {
  const auto dir = scratch_dir("set");
  ArtifactSet s;
  s.add("a.txt", "1");
  s.add("b.txt", "2");
  s.commit(dir);
  EXPECT_EQ(slurp(dir / "a.txt"), "1");
  EXPECT_EQ(slurp(dir / "b.txt"), "2");
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().filename().string().front(), '.');
}

TEST(ReadObservations, RejectsMissingColumn) {
  const auto dir = scratch_dir("csv");
  std::ofstream(dir / "x.csv") << "i,z\n0,1\n";
  EXPECT_THROW(read_observations_csv(dir / "x.csv"), Error);
  EXPECT_THROW(read_observations_csv(dir / "missing.csv"), Error);
}
