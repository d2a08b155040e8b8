#pragma once

#include <span>
#include <vector>

#include "piso/geometry.hpp"

namespace piso {

/// Values of a scalar on (time node) x (radial node) for one angular mode.
struct SpaceTimeField {
  GridPtr grid;
  TimeGrid tgrid;
  int mode = 0;
  std::vector<double> values;  // (N+1) rows of M+1 entries

  SpaceTimeField() = default;
  SpaceTimeField(GridPtr g, const TimeGrid& t, int k);

  int steps() const { return tgrid.N; }
  int nodes() const { return grid->size(); }
  double& at(int m, int j) { return values[index(m, j)]; }
  double at(int m, int j) const { return values[index(m, j)]; }
  std::span<double> row(int m) { return {values.data() + index(m, 0), size_t(nodes())}; }
  std::span<const double> row(int m) const {
    return {values.data() + index(m, 0), size_t(nodes())};
  }
  RadialField slice(int m) const;
  double min() const;
  double max() const;

 private:
  size_t index(int m, int j) const { return size_t(m) * size_t(nodes()) + size_t(j); }
};

/// One angular mode of the heat equation on B(0,R):
///   du/dt - (1/r^{n-1}) (r^{n-1} u')' + k(k+n-2)/r^2 u = s   (forward)
/// Sources are nodal densities; the load vector is W s with W the hat
/// weights. A source list may hold 0 (zero), 1 (constant in time) or N+1
/// slices.
struct ModalProblem {
  int k = 0;
  GridPtr grid;
  TimeGrid tgrid;
  std::vector<RadialField> source;
  /// Initial data (forward) or terminal data (backward). Empty means zero.
  RadialField data;
  /// Adds the density r*^{n-1} jump_strength / w_{j*} at node j* to the source.
  double jump_strength = 0.0;
};

/// Theta-scheme for the forward problem
///   (W/dt + theta A) u^{m+1} = (W/dt - (1-theta) A) u^m
///                              + W (theta s^{m+1} + (1-theta) s^m).
SpaceTimeField solve_forward(const ModalProblem& p);

/// Costate of the discrete objective
///   G(u) = sum_m c_m <s^m, u^m>_W + <g, u^N>_W,  c = trapezoid weights,
/// with s = p.source and g = p.data:
///   lambda^N = c_N s^N + g,   lambda^m = R lambda^{m+1} + c_m s^m,
/// R being the forward one-step map. With s = 0 this is the forward scheme
/// run backwards in time. lambda approximates the continuous adjoint p.
SpaceTimeField solve_backward(const ModalProblem& p);

/// Turns a costate into the switch field p whose trapezoid pairing with a
/// perturbation h of the forward source is exact:
///   G(u[h]) = sum_m d_m <h^m, p^m>_W.
SpaceTimeField switch_from_costate(const SpaceTimeField& costate);

/// solve_backward followed by switch_from_costate.
SpaceTimeField solve_switch(const ModalProblem& p);

/// y_k: zero initial data, unit jump of -dy/dr across r*. Requires k >= 1.
SpaceTimeField solve_jump_forward(int k, GridPtr grid, const TimeGrid& tgrid);

enum class Side { inner, outer, centered };

/// Second-order difference of dF/dr at the node r. One-sided stencils use
/// three nodes on the requested side.
double normal_derivative_at(const SpaceTimeField& F, int t_index, double r, Side side);

/// Jump of dF/dr across r* (outer minus inner one-sided derivative) on the
/// level theta F^m + (1-theta) F^{m-1}, which is where the theta-scheme
/// balances fluxes against the load. Crank-Nicolson leaves an undamped
/// sawtooth in the nodal values next to a point load; this level cancels it.
double recovered_flux_jump(const SpaceTimeField& F, int t_index);

/// Trapezoid integral in time at every node.
RadialField time_integral(const SpaceTimeField& F);

/// sum_m c_m <a^m, b^m>_W (no angular factor).
double space_time_inner(const SpaceTimeField& a, const SpaceTimeField& b);

/// sum_m c_m <h^m, p^m>_W for a source list h (0, 1 or N+1 slices).
double pair_source(std::span<const RadialField> h, const SpaceTimeField& p);

/// <a, b>_W at one time row.
double weighted_dot(const RadialGrid& g, std::span<const double> a, std::span<const double> b);

}  // namespace piso
