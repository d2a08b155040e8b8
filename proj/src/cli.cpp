#include "piso/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "piso/shape_hessian.hpp"

namespace piso {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands{"verify-ti", "verify-td", "spectrum", "talenti",
                                         "bathtub",   "optimize",  "sweep",    "all"};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- config

template <class T>
T field(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: " + path + ": wrong type (" + j.type_name() + ")");
  }
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("config: " + (path.empty() ? "<root>" : path) +
                                        ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw ConfigError("config: " + (path.empty() ? "" : path + ".") + it.key() + ": unknown key");
}

template <class T>
void read(const json& j, const char* key, const std::string& path, T& dst) {
  if (j.contains(key)) dst = field<T>(j.at(key), path + "." + key);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0')
      throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write " + p.string());
  o << text;
}

ProblemSetup build_setup(const RunConfig& c) {
  auto o = c.setup;
  if (c.u0_family == "zero") o.u0_amplitude = 0.0;
  try {
    return make_setup(o);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ProblemSetup with_eps(ProblemSetup s, double eps) {
  s.eps = eps;
  return s;
}

// ---------------------------------------------------------------- commands

struct Context {
  RunConfig cfg;
  fs::path dir;
  std::ostream& out;
};

SweepOptions sweep_options(const RunConfig& c, SweepKind kind) {
  SweepOptions o;
  o.seed = c.seed;
  o.deltas = c.deltas;
  const auto known = default_families(kind);
  for (const auto& f : c.families)
    if (std::find(known.begin(), known.end(), f) != known.end()) o.families.push_back(f);
  if (!c.families.empty() && o.families.empty()) o.families = {"<none>"};
  return o;
}

CommandResult cmd_sweep(Context& ctx, SweepKind kind, const std::string& name) {
  CommandResult r;
  r.command = name;
  auto s = build_setup(ctx.cfg);
  if (kind == SweepKind::ti) s.eps = 0.0;
  r.record(s);
  auto o = sweep_options(ctx.cfg, kind);
  if (o.families == std::vector<std::string>{"<none>"}) return r;
  if (kind == SweepKind::td) {
    if (!(s.eps > 0.0)) throw ConfigError("config: problem.eps: the time-dependent sweep needs eps > 0");
    r.checks.push_back(check_switch_nondegenerate(s.eps, 0.5 * s.grid->star_radius(), s));
  } else {
    r.checks.push_back(check_radial_monotonicity(with_eps(s, 0.0)));
  }
  auto sw = sweep_deficit(kind, o, s);
  const std::string csv = name + (name == "sweep" ? (kind == SweepKind::ti ? "-ti" : "-td") : "") +
                          ".csv";
  write_file(ctx.dir / csv, sw.csv());
  sw.check.artifacts.push_back(csv);
  r.artifacts.push_back(csv);
  for (const auto& n : sw.notes) ctx.out << "note: " << n << "\n";
  r.checks.push_back(sw.check);
  return r;
}

CommandResult cmd_spectrum(Context& ctx) {
  CommandResult r;
  r.command = "spectrum";
  auto s = with_eps(build_setup(ctx.cfg), 0.0);
  if (s.grid->dimension() != 2) throw ConfigError("config: geometry.n: spectrum needs n = 2");
  r.record(s);
  const auto ref = compute_reference(s);
  SpectrumReport sp;
  try {
    sp = compute_spectrum(ctx.cfg.modes, s, &ref);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: experiment.modes: ") + e.what());
  }

  CheckResult flags;
  flags.name = "spectrum_flags";
  flags.passed = sp.omega1_negative && sp.monotone_ok && sp.sign_ok && sp.comparison_ok;
  double gap = -sp.omegas[0];
  for (size_t i = 1; i < sp.omegas.size(); ++i) gap = std::min(gap, sp.omegas[i - 1] - sp.omegas[i]);
  flags.margin = gap;
  flags.details = std::string("omega1_negative=") + (sp.omega1_negative ? "true" : "false") +
                  " monotone_ok=" + (sp.monotone_ok ? "true" : "false") +
                  " sign_ok=" + (sp.sign_ok ? "true" : "false") +
                  " comparison_ok=" + (sp.comparison_ok ? "true" : "false");

  // FD cross-check on the low modes
  const std::vector<double> taus{4e-3, 2e-3, 1e-3};
  CheckResult fd;
  fd.name = "hessian_fd";
  double worst = 0.0;
  const int kfd = std::min(4, sp.size());
  for (int k = 1; k <= kfd; ++k) {
    auto res = fd_hessian_check(DeformationCoeffs::single(k, 1.0), taus, s, sp, &ref);
    sp.fd_errors.push_back(res.rel_errors.back());
    worst = std::max(worst, res.rel_errors.back());
  }
  fd.passed = worst <= 0.02;
  fd.margin = 0.02 - worst;
  fd.details = "modes 1.." + std::to_string(kfd) + " tau=1e-3 worst rel error " + g17(worst);

  write_file(ctx.dir / "spectrum.csv", sp.csv());
  write_file(ctx.dir / "spectrum.json", json::parse(sp.to_json()).dump(2) + "\n");
  r.artifacts = {"spectrum.csv", "spectrum.json"};
  flags.artifacts = r.artifacts;
  r.checks = {flags, fd};
  return r;
}

CommandResult cmd_talenti(Context& ctx) {
  CommandResult r;
  r.command = "talenti";
  auto s = build_setup(ctx.cfg);
  r.record(s);
  TalentiOptions o;
  o.n_samples = ctx.cfg.samples;
  o.seed = ctx.cfg.seed;
  r.checks.push_back(run_talenti_battery(o, s));
  return r;
}

CommandResult cmd_bathtub(Context& ctx) {
  CommandResult r;
  r.command = "bathtub";
  auto c = ctx.cfg;
  c.setup.M = c.bathtub_grid;
  c.setup.N = std::min(c.setup.N, 2 * c.bathtub_grid);
  auto s = build_setup(c);
  r.record(s);
  const int n = ctx.cfg.competitors;
  r.checks.push_back(check_bathtub_dominance(n, s, ctx.cfg.seed));
  // same budget again for the annulus, split over three asymmetries
  const std::vector<double> fr{0.01, 0.1, 0.3};
  for (double f : fr)
    r.checks.push_back(check_penalized_optimality(f * s.spec.V0, n / static_cast<int>(fr.size()), s,
                                                  ctx.cfg.seed));
  return r;
}

CommandResult cmd_optimize(Context& ctx) {
  CommandResult r;
  r.command = "optimize";
  auto s = build_setup(ctx.cfg);
  r.record(s);
  const double tol = 1e-3;
  std::string csv = "start,iteration,objective,distance,step\n";
  CheckResult c;
  c.name = "fixed_point_convergence";
  c.passed = true;
  c.margin = 1e300;
  int n_conv = 0, total = 0;
  auto run = [&](const std::string& label, const Control& start) {
    auto res = optimize_fixed_point(start, s, 50, tol);
    for (size_t i = 0; i < res.objective.size(); ++i) {
      csv += label + "," + std::to_string(i) + "," + g17(res.objective[i]) + "," +
             g17(res.distance[i]) + "," + (i == 0 ? std::string() : g17(res.steps[i - 1])) + "\n";
    }
    ++total;
    n_conv += res.converged ? 1 : 0;
    c.passed = c.passed && res.converged && res.monotone;
    c.margin = std::min(c.margin, tol * s.grid->volume() - res.distance.back());
  };
  run("uniform", radial_control(RadialField(s.grid, s.spec.V0 / s.grid->volume())));
  std::mt19937_64 rng(ctx.cfg.seed);
  std::uniform_real_distribution<double> U(0.05, 0.9);
  for (int i = 0; i < ctx.cfg.starts; ++i) {
    SampleRequest req;
    req.delta_opts.anywhere = true;
    req.delta0 = U(rng) * max_asymmetry(s.spec, *s.grid);
    req.kind = i % 2 ? SampleKind::smooth : SampleKind::bangbang_radial;
    run("random-" + std::to_string(i), sample_random_admissible(rng(), req, s.spec, s.grid));
  }
  c.details = std::to_string(n_conv) + "/" + std::to_string(total) + " starts converged";
  write_file(ctx.dir / "optimize.csv", csv);
  r.artifacts = {"optimize.csv"};
  c.artifacts = r.artifacts;
  r.checks.push_back(c);
  return r;
}

std::vector<CommandResult> dispatch(Context& ctx, const std::string& cmd) {
  if (cmd == "verify-ti") return {cmd_sweep(ctx, SweepKind::ti, cmd)};
  if (cmd == "verify-td") return {cmd_sweep(ctx, SweepKind::td, cmd)};
  if (cmd == "spectrum") return {cmd_spectrum(ctx)};
  if (cmd == "talenti") return {cmd_talenti(ctx)};
  if (cmd == "bathtub") return {cmd_bathtub(ctx)};
  if (cmd == "optimize") return {cmd_optimize(ctx)};
  if (cmd == "sweep") {
    const auto ti = default_families(SweepKind::ti), td = default_families(SweepKind::td);
    for (const auto& f : ctx.cfg.families)
      if (std::find(ti.begin(), ti.end(), f) == ti.end() &&
          std::find(td.begin(), td.end(), f) == td.end())
        throw ConfigError("config: experiment.families: unknown family '" + f + "'");
    auto a = cmd_sweep(ctx, SweepKind::ti, "sweep");
    auto b = cmd_sweep(ctx, SweepKind::td, "sweep");
    a.checks.insert(a.checks.end(), b.checks.begin(), b.checks.end());
    a.artifacts.insert(a.artifacts.end(), b.artifacts.begin(), b.artifacts.end());
    return {a};
  }
  std::vector<CommandResult> all;
  for (const char* c : {"verify-ti", "verify-td", "spectrum", "talenti", "bathtub", "optimize"}) {
    auto part = dispatch(ctx, c);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

std::string manifest(const CommandResult& r, const RunConfig& cfg) {
  json m;
  m["command"] = r.command;
  json setup = json::parse(r.setup_json);
  setup["hash"] = r.setup_hash;
  m["checks"] = json::array();
  for (const auto& c : r.checks) {
    json e;
    e["check_name"] = c.name;
    e["passed"] = c.passed;
    e["informational"] = c.informational;
    e["margin"] = c.margin;
    e["details"] = c.details;
    e["seed"] = cfg.seed;
    e["setup"] = setup;
    m["checks"].push_back(e);
  }
  m["passed"] = r.passed();
  m["artifacts"] = r.artifacts;
  m["config"] = json::parse(cfg.to_json());
  m["config"].erase("output");  // keeps manifests comparable across directories
  return m.dump(2) + "\n";
}

}  // namespace

// ---------------------------------------------------------------- RunConfig

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  RunConfig c;
  only_keys(j, "", {"geometry", "time", "problem", "experiment", "output"});
  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    only_keys(g, "geometry", {"R", "M", "n", "V0"});
    read(g, "R", "geometry", c.setup.R);
    read(g, "M", "geometry", c.setup.M);
    read(g, "n", "geometry", c.setup.n);
    read(g, "V0", "geometry", c.setup.V0);
  }
  if (j.contains("time")) {
    const auto& t = j["time"];
    only_keys(t, "time", {"T", "N", "theta"});
    read(t, "T", "time", c.setup.T);
    read(t, "N", "time", c.setup.N);
    read(t, "theta", "time", c.setup.theta);
  }
  if (j.contains("problem")) {
    const auto& p = j["problem"];
    only_keys(p, "problem", {"eps", "u0"});
    read(p, "eps", "problem", c.setup.eps);
    if (p.contains("u0")) {
      const auto& u = p["u0"];
      only_keys(u, "problem.u0", {"family", "amplitude"});
      read(u, "family", "problem.u0", c.u0_family);
      read(u, "amplitude", "problem.u0", c.setup.u0_amplitude);
    }
  }
  if (j.contains("experiment")) {
    const auto& e = j["experiment"];
    only_keys(e, "experiment",
              {"families", "deltas", "modes", "seed", "samples", "competitors", "bathtub_grid",
               "starts"});
    read(e, "families", "experiment", c.families);
    read(e, "deltas", "experiment", c.deltas);
    read(e, "modes", "experiment", c.modes);
    read(e, "seed", "experiment", c.seed);
    read(e, "samples", "experiment", c.samples);
    read(e, "competitors", "experiment", c.competitors);
    read(e, "bathtub_grid", "experiment", c.bathtub_grid);
    read(e, "starts", "experiment", c.starts);
  }
  if (j.contains("output")) c.output = field<std::string>(j["output"], "output");
  c.validate();
  return c;
}

std::string RunConfig::to_json() const {
  json j;
  j["geometry"] = {{"R", setup.R}, {"M", setup.M}, {"n", setup.n}, {"V0", setup.V0}};
  j["time"] = {{"T", setup.T}, {"N", setup.N}, {"theta", setup.theta}};
  j["problem"] = {{"eps", setup.eps},
                  {"u0", {{"family", u0_family}, {"amplitude", setup.u0_amplitude}}}};
  j["experiment"] = {{"families", families}, {"deltas", deltas},   {"modes", modes},
                     {"seed", seed},         {"samples", samples}, {"competitors", competitors},
                     {"bathtub_grid", bathtub_grid}, {"starts", starts}};
  j["output"] = output;
  return j.dump();
}

void RunConfig::validate() const {
  auto fail = [](const std::string& f, const std::string& why) {
    throw ConfigError("config: " + f + ": " + why);
  };
  if (!(setup.R > 0.0)) fail("geometry.R", "must be > 0");
  if (setup.M < 4) fail("geometry.M", "must be >= 4");
  if (setup.n < 1) fail("geometry.n", "must be >= 1");
  if (!(setup.V0 > 0.0)) fail("geometry.V0", "must be > 0");
  if (!(setup.T > 0.0)) fail("time.T", "must be > 0");
  if (setup.N < 1) fail("time.N", "must be >= 1");
  if (!(setup.theta >= 0.5 && setup.theta <= 1.0)) fail("time.theta", "must lie in [0.5, 1]");
  if (!(setup.eps >= 0.0)) fail("problem.eps", "must be >= 0");
  if (u0_family != "zero" && u0_family != "parabolic")
    fail("problem.u0.family", "must be 'zero' or 'parabolic'");
  if (!(setup.u0_amplitude >= 0.0)) fail("problem.u0.amplitude", "must be >= 0 (u0 nonincreasing)");
  if (modes < 1) fail("experiment.modes", "must be >= 1");
  for (double d : deltas)
    if (!(d > 0.0 && d < 2.0)) fail("experiment.deltas", "fractions of V0 must lie in (0, 2)");
  if (samples < 1) fail("experiment.samples", "must be >= 1");
  if (competitors < 3) fail("experiment.competitors", "must be >= 3");
  if (bathtub_grid < 4) fail("experiment.bathtub_grid", "must be >= 4");
  if (starts < 0) fail("experiment.starts", "must be >= 0");
}

void CommandResult::record(const ProblemSetup& s) {
  setup_json = s.to_json();
  setup_hash = s.hash();
}

bool CommandResult::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.informational || c.passed; });
}

// ---------------------------------------------------------------- report

std::string build_report(const std::string& dir, int* n_warnings) {
  if (!fs::is_directory(dir)) throw ConfigError("report: '" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    const std::string suf = ".manifest.json";
    if (e.is_regular_file() && name.size() > suf.size() &&
        name.compare(name.size() - suf.size(), suf.size(), suf) == 0)
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  json entries = json::object();
  json warnings = json::array();
  int checks = 0, passed = 0, failed = 0, info = 0, mpass = 0;
  for (const auto& f : files) {
    const auto name = f.filename().string();
    try {
      auto m = json::parse(slurp(f));
      if (!m.is_object() || !m.contains("checks") || !m["checks"].is_array() ||
          !m.contains("passed"))
        throw std::runtime_error("missing 'checks' or 'passed'");
      json e;
      e["command"] = m.value("command", "");
      e["passed"] = m["passed"].get<bool>();
      e["checks"] = json::object();
      for (const auto& c : m["checks"]) {
        const bool inf = c.value("informational", false);
        const bool ok = c.at("passed").get<bool>();
        e["checks"][c.at("check_name").get<std::string>()] = {
            {"passed", ok}, {"informational", inf}, {"margin", c.value("margin", json())}};
        ++checks;
        if (inf)
          ++info;
        else if (ok)
          ++passed;
        else
          ++failed;
      }
      mpass += e["passed"].get<bool>() ? 1 : 0;
      entries[name] = e;
    } catch (const std::exception& ex) {
      warnings.push_back(name + ": " + ex.what());
    }
  }
  json rep;
  rep["entries"] = entries;
  rep["warnings"] = warnings;
  rep["totals"] = {{"manifests", entries.size()}, {"manifests_passed", mpass},
                   {"checks", checks},            {"passed", passed},
                   {"failed", failed},            {"informational", info},
                   {"warnings", warnings.size()}};
  if (n_warnings) *n_warnings = static_cast<int>(warnings.size());
  return rep.dump(2) + "\n";
}

// ---------------------------------------------------------------- entry point

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks of quantitative parabolic isoperimetric inequalities", "piso"};
  std::vector<std::string> words;
  std::string config_path, out_dir, families, deltas;
  std::optional<std::uint64_t> seed;
  std::optional<int> modes, grid, steps;
  std::optional<double> eps;
  app.add_option("command", words, "verify-ti | verify-td | spectrum | talenti | bathtub | "
                                   "optimize | sweep | all | report DIR | run COMMAND")
      ->required();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory (default $PISO_OUT_DIR or ./piso-out)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--modes", modes, "number of angular modes K");
  app.add_option("--eps", eps, "terminal penalty epsilon");
  app.add_option("--grid", grid, "radial cells M");
  app.add_option("--steps", steps, "time steps N");
  app.add_option("--families", families, "comma separated competitor families");
  app.add_option("--deltas", deltas, "comma separated asymmetries (fractions of V0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }

  if (!words.empty() && words[0] == "run") words.erase(words.begin());
  if (words.empty()) {
    err << "usage error: missing command\n";
    return 2;
  }
  const std::string cmd = words[0];

  if (cmd == "report") {
    if (words.size() != 2) {
      err << "usage error: report needs exactly one directory\n";
      return 2;
    }
    try {
      int nw = 0;
      const auto text = build_report(words[1], &nw);
      write_file(fs::path(words[1]) / "summary.json", text);
      out << text;
      if (nw) err << "warning: " << nw << " manifest(s) could not be read\n";
      return 0;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }
  if (std::find(kCommands.begin(), kCommands.end(), cmd) == kCommands.end() || words.size() != 1) {
    err << "usage error: unknown command '" << cmd << "'\n";
    return 2;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::string text;
      try {
        text = slurp(config_path);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
      cfg = RunConfig::from_json(text);
    }
    if (seed) cfg.seed = *seed;
    if (modes) cfg.modes = *modes;
    if (eps) cfg.setup.eps = *eps;
    if (grid) cfg.setup.M = *grid;
    if (steps) cfg.setup.N = *steps;
    if (!families.empty()) cfg.families = split_list(families);
    if (!deltas.empty()) cfg.deltas = parse_doubles(deltas, "config: experiment.deltas");
    if (!out_dir.empty()) cfg.output = out_dir;
    if (cfg.output.empty()) {
      const char* env = std::getenv("PISO_OUT_DIR");
      cfg.output = env && *env ? env : "piso-out";
    }
    cfg.validate();
    const auto ti = default_families(SweepKind::ti), td = default_families(SweepKind::td);
    for (const auto& f : cfg.families)
      if (std::find(ti.begin(), ti.end(), f) == ti.end() &&
          std::find(td.begin(), td.end(), f) == td.end())
        throw ConfigError("config: experiment.families: unknown family '" + f + "'");
    build_setup(cfg);  // geometry errors before any solve
    fs::create_directories(cfg.output);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  Context ctx{cfg, fs::path(cfg.output), out};
  std::vector<CommandResult> results;
  try {
    results = dispatch(ctx, cmd);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << cmd << " failed: " << e.what() << "\n";
    return 1;
  }

  bool ok = true;
  for (const auto& r : results) {
    for (const auto& c : r.checks) out << c.summary_line() << "\n";
    write_file(ctx.dir / (r.command + ".manifest.json"), manifest(r, cfg));
    ok = ok && r.passed();
  }
  out << (ok ? "ALL PASS" : "SOME CHECKS FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace piso
