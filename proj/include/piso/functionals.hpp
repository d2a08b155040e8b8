#pragma once

#include <optional>
#include <string>
#include <vector>

#include "piso/controls.hpp"
#include "piso/radial_pde.hpp"

namespace piso {

/// Everything a solve needs: grids, the volume constraint, the terminal
/// penalty and the (radial, nonincreasing) initial state.
struct ProblemSetup {
  GridPtr grid;
  TimeGrid tgrid;
  AdmissibleSpec spec;
  double eps = 0.0;
  RadialField u0;  // empty means zero
  int K = 16;      // angular channels for geometric controls
  int L = 1024;    // polar samples for L1 distances of modal controls
  /// a (1 - (r/R)^2); recorded for provenance only
  double u0_amplitude = 0.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Short stable digest of every numeric input.
  std::string hash() const;
  std::string to_json() const;
};

struct SetupOptions {
  double R = 1.0;
  int M = 256;
  int n = 2;
  double V0 = 0.785398163397448310;  // pi/4, r* = 1/2
  double T = 1.0;
  int N = 512;
  double theta = 0.5;
  double eps = 0.1;
  double u0_amplitude = 0.0;
  int K = 16;
  int L = 1024;
};

/// Builds the grid around r* = radius_of_volume(V0). r* is moved to the
/// nearest node and V0 is replaced by the volume of the snapped ball, so
/// that f* stays an admissible indicator on the grid.
ProblemSetup make_setup(const SetupOptions& o = {});

/// u0(r) = a (1 - (r/R)^2).
RadialField parabolic_initial_state(GridPtr grid, double amplitude);

/// Parseval weight of an angular channel: |S^{n-1}| for k = 0, pi for k >= 1.
double angular_factor(const RadialGrid& grid, int k);

/// State (or switch) of one angular channel.
struct ModeField {
  int k = 0;
  bool sine = false;
  SpaceTimeField field;
};

/// u_f channel by channel; the radial channel always carries u0.
std::vector<ModeField> solve_state(const Control& f, const ProblemSetup& s);

/// J_T = 1/2 \iint u^2.
double evaluate_jt(const Control& f, const ProblemSetup& s);
/// J_T + (eps/2) \int u(T)^2.
double evaluate_jt_eps(const Control& f, const ProblemSetup& s);
double objective_from_state(const std::vector<ModeField>& u, const ProblemSetup& s, double eps);

struct Switch {
  std::vector<ModeField> p;
  /// \int_0^T p for each channel, same order as p
  std::vector<RadialField> Psi;

  const ModeField* mode(int k, bool sine) const;
  /// k = 0 part of Psi (zero if absent).
  RadialField radial_psi() const;
};

/// Adjoint of the state with source u_f and terminal data eps u_f(T), turned
/// into the switch so that the pairing with a source perturbation is exact.
Switch adjoint_switch(const Control& f, const ProblemSetup& s);
Switch switch_from_state(const std::vector<ModeField>& u, const ProblemSetup& s);

/// \iint h p_f (with the Parseval weights). Throws unless every slice of h
/// has |\int h| <= 1e-8.
double gateaux(const Control& f, const Control& h, const ProblemSetup& s);
double pair_with_switch(const Control& h, const Switch& sw, const ProblemSetup& s);

struct ExpansionCheck {
  double j_f = 0.0;
  double j_fh = 0.0;
  double first = 0.0;      // \iint h p_f
  double curvature = 0.0;  // \iint (du)^2 + eps \int du(T)^2
  double residual = 0.0;   // |J(f+h) - J(f) - first - curvature/2|
  double relative = 0.0;   // residual / |J(f)|
};

/// Exact second-order expansion of J^eps around f in the direction h.
ExpansionCheck quadratic_expansion_check(const Control& f, const Control& h,
                                         const ProblemSetup& s);

/// f*, its state and switch for one setup.
struct Reference {
  Control fstar;
  SpaceTimeField u;
  SpaceTimeField p;
  RadialField Psi;
  double J = 0.0;  // J_T^eps(f*)
  /// a_eps(t_m) = -dp*/dr at r*, mean of both one-sided differences
  std::vector<double> weight;
};

Reference compute_reference(const ProblemSetup& s);

struct DeficitReport {
  std::string id;
  std::string family;
  std::string params;
  double j_f = 0.0;
  double j_star = 0.0;
  double deficit = 0.0;     // J(f*) - J(f)
  double l1_sq = 0.0;       // ||f - f*||^2 or \int a ||f(t) - f*||^2
  double weight_min = 0.0;  // min_t a_eps(t); 0 for the time-independent case
  double ratio = 0.0;
  double delta = 0.0;       // ||f - f*||_1 (max over t if time dependent)

  static std::string csv_header();
  std::string csv_row() const;
  std::string to_json(const ProblemSetup& s) const;
};

/// Time-independent deficit (eps must be 0).
DeficitReport deficit_ti(const Control& f, const ProblemSetup& s,
                         const Reference* ref = nullptr);
/// Weighted time-dependent deficit (eps > 0).
DeficitReport deficit_td(const Control& f, const ProblemSetup& s,
                         const Reference* ref = nullptr);

/// ||f(t_m) - f*||_1 using exact geometry where available.
double distance_to_ball(const Control& f, int m, const Control& fstar, int L);

}  // namespace piso
