#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "piso/functionals.hpp"

namespace piso {

/// Outcome of one battery. margin is the signed distance to failure
/// (positive = passing), documented per check.
struct CheckResult {
  std::string name;
  bool passed = false;
  /// reported without a pass/fail verdict
  bool informational = false;
  double margin = 0.0;
  std::string details;
  std::vector<std::string> artifacts;

  /// "PASS name margin=... details" (INFO for informational checks)
  std::string summary_line() const;
  std::string to_json() const;
};

/// margin = min over t_m > 0 and nodes of (u*_j - u*_{j+1}) / h.
/// Throws std::invalid_argument if u0 is not nonincreasing.
CheckResult check_radial_monotonicity(const ProblemSetup& s, const Reference* ref = nullptr);

/// margin = min over time nodes and r_j in [y0, R) of -dp*/dr (forward
/// differences), with eps replacing s.eps. eps = 0 is informational.
CheckResult check_switch_nondegenerate(double eps, double y0, const ProblemSetup& s);

/// Solution of the state equation sampled on the polar grid at slice m.
PolarField sample_state(const std::vector<ModeField>& u, int m, int L);

struct TalentiOptions {
  int n_samples = 50;  // half radial bang-bang in time, half moving balls
  int n_times = 8;
  int L = 256;
  int shifted = 5;     // extra shifted balls for the strict J < J* check
  std::uint64_t seed = 42;
};

/// precedes(u(t), u*(t)) for random admissible controls at n_times slices;
/// margin = worst precedes margin (tolerance 1e-6 Vol(Omega) applies).
CheckResult run_talenti_battery(const TalentiOptions& o, const ProblemSetup& s);

enum class SweepKind { ti, td };

struct SweepOptions {
  /// ti: annulus, shifted-ball, bangbang; td: oscillating-annulus, td-bangbang
  std::vector<std::string> families;
  /// multiples of V0
  std::vector<double> deltas;
  int bangbang_per_delta = 20;
  int td_bangbang_per_delta = 8;
  std::vector<int> oscillations{1, 2, 4};
  double max_spread = 5.0;
  std::uint64_t seed = 42;
};

/// Ten log-spaced fractions of V0 in [1e-3, 1e-1].
std::vector<double> default_delta_fractions();
std::vector<std::string> default_families(SweepKind kind);

struct SweepResult {
  CheckResult check;
  std::vector<DeficitReport> rows;
  std::map<std::string, double> spread;     // max/min ratio per family
  std::map<std::string, double> min_ratio;  // per family
  std::vector<std::string> notes;           // skipped points

  std::string csv() const;
};

/// Deficit ratios over a competitor grid. Passes iff every ratio is positive
/// and every family's spread is at most max_spread. margin = min ratio.
SweepResult sweep_deficit(SweepKind kind, const SweepOptions& o, const ProblemSetup& s);

struct OptimizeResult {
  std::vector<double> objective;  // J^eps of every iterate, start first
  std::vector<double> distance;   // ||f_m - f*||_1
  std::vector<double> steps;
  Control final;
  int iterations = 0;
  bool converged = false;
  bool monotone = true;
};

/// Conditional-gradient ascent: g_m = bathtub(Psi_{f_m}), f_{m+1} = f_m +
/// s (g_m - f_m) with s maximising the exact quadratic on [0, 1]. Radial,
/// time-independent starts only.
OptimizeResult optimize_fixed_point(const Control& start, const ProblemSetup& s, int max_iter = 50,
                                    double tol = 1e-3);

/// J^eps(A_delta) >= J^eps(g) for random time-dependent g at distance delta
/// from f* on every slice; margin = min relative gap.
CheckResult check_penalized_optimality(double delta, int n_random, const ProblemSetup& s,
                                       std::uint64_t seed = 42);

/// f* = bathtub(Psi*) against random admissible competitors: both the
/// linearised value <f, Psi*> and J^eps itself; margin = min relative gap.
CheckResult check_bathtub_dominance(int n_random, const ProblemSetup& s, std::uint64_t seed = 42);

}  // namespace piso
