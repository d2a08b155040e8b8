#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "piso/cli.hpp"

using namespace piso;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "piso");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("piso_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Cli, SpectrumEightModes) {
  auto d = fresh_dir("spectrum");
  auto r = cli({"spectrum", "--modes", "8", "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(d / "spectrum.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 8);
  auto flags = nlohmann::json::parse(slurp(d / "spectrum.json"));
  EXPECT_TRUE(flags["monotone_ok"].get<bool>());
  EXPECT_TRUE(flags["omega1_negative"].get<bool>());
  auto m = nlohmann::json::parse(slurp(d / "spectrum.manifest.json"));
  EXPECT_EQ(m["command"], "spectrum");
  EXPECT_TRUE(m["passed"].get<bool>());
  EXPECT_EQ(m["checks"][0]["setup"]["problem"]["eps"], 0.0);
}

TEST(Cli, VerifyTiSmallGrid) {
  auto d = fresh_dir("ti");
  auto r = cli({"run", "verify-ti", "--grid", "64", "--steps", "128", "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("PASS deficit_sweep_ti"), std::string::npos);
  auto m = nlohmann::json::parse(slurp(d / "verify-ti.manifest.json"));
  for (const auto& c : m["checks"]) {
    EXPECT_TRUE(c.contains("check_name"));
    EXPECT_TRUE(c.contains("margin"));
    EXPECT_EQ(c["seed"], 42);
    EXPECT_EQ(c["setup"]["geometry"]["M"], 64);
  }
}

TEST(Cli, TimeDependentSweepNeedsPositiveEps) {
  auto d = fresh_dir("eps0");
  auto r = cli({"verify-td", "--eps", "0", "--grid", "32", "--steps", "64", "--out", d.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("problem.eps"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"run", "bogus"}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"spectrum", "--grid", "abc"}).code, 2);
  EXPECT_EQ(cli({"spectrum", "--nope"}).code, 2);
  auto r = cli({"sweep", "--families", "annulus,triangle", "--out", fresh_dir("fam").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("triangle"), std::string::npos);
}

TEST(Cli, InvalidConfigNamesField) {
  auto d = fresh_dir("config");
  put(d / "bad.json", R"({"geometry": {"M": 2}})");
  auto r = cli({"spectrum", "--config", (d / "bad.json").string(), "--out", d.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("geometry.M"), std::string::npos);

  put(d / "typo.json", R"({"time": {"steps": 10}})");
  r = cli({"spectrum", "--config", (d / "typo.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("time.steps"), std::string::npos);

  put(d / "type.json", R"({"problem": {"eps": "big"}})");
  r = cli({"spectrum", "--config", (d / "type.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("problem.eps"), std::string::npos);

  put(d / "geo.json", R"({"geometry": {"V0": 10.0}})");
  r = cli({"spectrum", "--config", (d / "geo.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("geometry.V0"), std::string::npos);

  EXPECT_EQ(cli({"spectrum", "--config", (d / "missing.json").string()}).code, 2);
}

TEST(Cli, ConfigRoundTripAndFlagsOverride) {
  RunConfig c;
  c.setup.M = 96;
  c.families = {"annulus"};
  c.deltas = {0.01, 0.02};
  c.seed = 7;
  auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());

  auto d = fresh_dir("override");
  put(d / "cfg.json", R"({"geometry": {"M": 48}, "time": {"N": 64}, "experiment": {"modes": 2}})");
  auto r = cli({"spectrum", "--config", (d / "cfg.json").string(), "--modes", "3", "--out",
                d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = nlohmann::json::parse(slurp(d / "spectrum.manifest.json"));
  EXPECT_EQ(m["config"]["experiment"]["modes"], 3);
  EXPECT_EQ(m["checks"][0]["setup"]["geometry"]["M"], 48);
}

TEST(Cli, OutputDirFromEnvironment) {
  auto d = fresh_dir("env");
  ::setenv("PISO_OUT_DIR", d.string().c_str(), 1);
  auto r = cli({"spectrum", "--modes", "2", "--grid", "32", "--steps", "32"});
  ::unsetenv("PISO_OUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "spectrum.csv"));
}

TEST(Cli, DeterministicCsv) {
  auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  const std::vector<std::string> common{"sweep", "--grid", "48", "--steps", "64", "--deltas",
                                        "0.01,0.05", "--seed", "3"};
  auto ra = common, rb = common;
  ra.insert(ra.end(), {"--out", a.string()});
  rb.insert(rb.end(), {"--out", b.string()});
  ASSERT_EQ(cli(ra).code, 0);
  ASSERT_EQ(cli(rb).code, 0);
  for (const char* f : {"sweep-ti.csv", "sweep-td.csv", "sweep.manifest.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Report, EmptyDirectory) {
  auto d = fresh_dir("report_empty");
  auto r = cli({"report", d.string()});
  EXPECT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["entries"].empty());
  EXPECT_EQ(j["totals"]["manifests"], 0);
}

TEST(Report, ThreeManifestsAndCorrupt) {
  auto d = fresh_dir("report");
  auto manifest = [](const std::string& cmd, bool ok) {
    nlohmann::json m;
    m["command"] = cmd;
    m["passed"] = ok;
    m["checks"] = {{{"check_name", cmd + "_check"}, {"passed", ok}, {"margin", 1.0}}};
    m["artifacts"] = nlohmann::json::array();
    return m.dump();
  };
  put(d / "a.manifest.json", manifest("a", true));
  put(d / "b.manifest.json", manifest("b", false));
  put(d / "c.manifest.json", manifest("c", true));
  put(d / "notes.txt", "ignored");
  auto j = nlohmann::json::parse(build_report(d.string()));
  EXPECT_EQ(j["entries"].size(), 3u);
  EXPECT_EQ(j["totals"]["failed"], 1);
  EXPECT_EQ(j["totals"]["passed"], 2);

  put(d / "c.manifest.json", "{ not json");
  int warnings = 0;
  j = nlohmann::json::parse(build_report(d.string(), &warnings));
  EXPECT_EQ(j["entries"].size(), 2u);
  EXPECT_EQ(warnings, 1);
  EXPECT_EQ(j["warnings"].size(), 1u);
  EXPECT_EQ(cli({"report", d.string()}).code, 0);
  // keys come out sorted, so the text is stable
  EXPECT_EQ(build_report(d.string()), build_report(d.string()));
}

TEST(Report, MissingDirectory) {
  EXPECT_EQ(cli({"report", "/nonexistent/piso"}).code, 2);
  EXPECT_EQ(cli({"report"}).code, 2);
}
