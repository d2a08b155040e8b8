#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "piso/verifier.hpp"

namespace piso {

/// Bad configuration or usage; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command needs. Every field has a JSON key and most have a flag.
struct RunConfig {
  SetupOptions setup;
  std::string u0_family = "zero";  // zero | parabolic

  std::vector<std::string> families;  // empty: the sweep defaults
  std::vector<double> deltas;         // fractions of V0; empty: the defaults
  int modes = 16;
  std::uint64_t seed = 42;
  int samples = 50;        // Talenti controls
  int competitors = 2000;  // bathtub battery size
  int bathtub_grid = 64;   // M used by the bathtub battery
  int starts = 10;         // optimizer random starts

  std::string output;  // empty: $PISO_OUT_DIR, then "piso-out"

  /// Throws ConfigError naming the field for unknown keys or bad values.
  static RunConfig from_json(const std::string& text);
  std::string to_json() const;
  void validate() const;
};

struct CommandResult {
  std::string command;
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;  // file names relative to the output dir
  std::string setup_json = "{}";      // the setup the checks actually ran on
  std::string setup_hash;

  void record(const ProblemSetup& s);

  bool passed() const;
};

/// Merge every *.manifest.json of dir into one summary with sorted keys.
/// Corrupt manifests are listed under "warnings".
std::string build_report(const std::string& dir, int* n_warnings = nullptr);

/// piso <command> [options]. Returns 0 if every check passes, 1 if one
/// fails, 2 for usage or configuration errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace piso
