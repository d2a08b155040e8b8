#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace piso {

/// Volume of the unit ball in dimension n.
double unit_ball_volume(int n);

/// Uniform grid on [0, R] for radial functions on the centred ball B(0;R).
///
/// Quadrature weights integrate the piecewise-linear interpolant of a nodal
/// field exactly against the measure r^{n-1} dr, i.e. w_j = \int phi_j r^{n-1}
/// dr for the hat function phi_j. The reference radius r* sits exactly on
/// node star_index().
class RadialGrid {
 public:
  RadialGrid(double R, int M, int n, double r_star);

  double radius() const { return R_; }
  int intervals() const { return M_; }
  int size() const { return M_ + 1; }
  int dimension() const { return n_; }
  double spacing() const { return h_; }

  int star_index() const { return j_star_; }
  double star_radius() const { return r_star_; }
  /// Signed distance between the requested r* and the node it was moved to.
  double snap_displacement() const { return snap_; }

  double node(int j) const { return nodes_[static_cast<size_t>(j)]; }
  std::span<const double> nodes() const { return nodes_; }
  double weight(int j) const { return weights_[static_cast<size_t>(j)]; }
  std::span<const double> weights() const { return weights_; }

  /// |S^{n-1}| = n Vol(B(0,1)); prefactor turning radial integrals into
  /// integrals over the ball.
  double sphere_area() const { return sphere_area_; }
  /// S_n = n Vol(B(0,1))^{1/n}, the isoperimetric constant.
  double surface_const() const { return surface_const_; }
  /// Measure of the node-j shell, sphere_area() * weight(j).
  double node_measure(int j) const { return sphere_area_ * weight(j); }

  double volume() const { return ball_volume(R_); }
  double ball_volume(double r) const;
  double radius_of_volume(double v) const;

  /// Index of the cell [r_c, r_{c+1}] containing r (the last cell for r=R).
  int cell_of(double r) const;

  /// \int_a^b phi r^{n-1} dr for the two local shape functions of cell c:
  /// `first` belongs to node c, `second` to node c+1. [a,b] must lie in the cell.
  std::pair<double, double> cell_moments(int c, double a, double b) const;

  /// Hat-function projection of the indicator of [a,b]: adds
  /// value * \int_a^b phi_j r^{n-1} dr to load[j].
  void add_interval_load(double a, double b, double value,
                         std::span<double> load) const;

  std::string fingerprint() const;
  bool same_as(const RadialGrid& other) const;

 private:
  double R_;
  int M_;
  int n_;
  double h_;
  int j_star_;
  double r_star_;
  double snap_;
  double sphere_area_;
  double surface_const_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Builds the grid and snaps r* to the nearest node.
/// Throws std::invalid_argument if r* is outside (0,R), M < 4 or n < 1.
GridPtr build_radial_grid(double R, int M, int n, double r_star);

/// Horizon [0,T] split into N steps of a theta-scheme.
struct TimeGrid {
  double T = 1.0;
  int N = 1;
  double theta = 0.5;

  TimeGrid() = default;
  TimeGrid(double T_, int N_, double theta_ = 0.5);

  double dt() const { return T / N; }
  double time(int m) const { return T * m / N; }
  /// Trapezoid weights in time, N+1 entries.
  std::vector<double> weights() const;
  bool operator==(const TimeGrid&) const = default;
};

/// Nodal values of a radial function.
struct RadialField {
  GridPtr grid;
  std::vector<double> values;

  RadialField() = default;
  RadialField(GridPtr g, std::vector<double> v);
  explicit RadialField(GridPtr g, double fill = 0.0);

  template <class F>
  static RadialField from_function(GridPtr g, F&& fn) {
    RadialField out(g);
    for (int j = 0; j < g->size(); ++j) out.values[j] = fn(g->node(j));
    return out;
  }

  double operator[](int j) const { return values[static_cast<size_t>(j)]; }
  double& operator[](int j) { return values[static_cast<size_t>(j)]; }
  int size() const { return static_cast<int>(values.size()); }
};

/// Values on the polar sampling grid (r_j, theta_l), theta_l = 2 pi l / L,
/// stored ring by ring. Each sample carries the measure node_measure(j) / L.
/// Only meaningful for n = 2.
struct PolarField {
  GridPtr grid;
  int L = 0;
  std::vector<double> values;

  PolarField() = default;
  PolarField(GridPtr g, int L_, double fill = 0.0);

  double& at(int j, int l) { return values[static_cast<size_t>(j) * L + l]; }
  double at(int j, int l) const { return values[static_cast<size_t>(j) * L + l]; }
  double cell_measure(int j) const { return grid->node_measure(j) / L; }
  static double angle(int l, int L) { return 2.0 * 3.14159265358979323846 * l / L; }
};

/// \int_Omega f for a radial field: sphere_area * sum_j w_j f_j.
double disk_integral(const RadialField& f);
double disk_integral(const PolarField& f);

/// \int_{B(0,r)} f, integrating the piecewise-linear interpolant exactly.
double ball_cumulative(const RadialField& f, double r);

/// ||f - g||_{L^1(Omega)} with nodal quadrature.
double l1_distance(const RadialField& f, const RadialField& g);
double l1_distance(const PolarField& f, const PolarField& g);

/// Measure of the symmetric difference of two star-shaped sets
/// {r < Ra(theta)} and {r < Rb(theta)} in the plane, by adaptive quadrature of
/// |Ra^2 - Rb^2| / 2 split at the crossings.
double star_symmetric_difference(const std::function<double(double)>& Ra,
                                 const std::function<double(double)>& Rb);

/// Area of B(0,a) \ B(x0,b) + area of B(x0,b) \ B(0,a), closed form.
double disk_symmetric_difference(double a, double b, double distance);

void require_same_grid(const RadialGrid& a, const RadialGrid& b);

}  // namespace piso
