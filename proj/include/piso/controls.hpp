#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "piso/geometry.hpp"

namespace piso {

/// 0 <= f <= 1 and \int f = V0.
struct AdmissibleSpec {
  double V0 = 0.0;
};

/// Throws unless 0 < V0 < Vol(Omega).
void validate(const AdmissibleSpec& spec, const RadialGrid& grid);

/// Radial step function: values[i] on [breaks[i], breaks[i+1]).
struct StepProfile {
  std::vector<double> breaks;
  std::vector<double> values;

  double value_at(double r) const;
  /// \int over the ball, exact.
  double integral(int n) const;
  /// 1 on [0, rho), 0 up to R.
  static StepProfile ball(double rho, double R);
};

/// Exact \int |a - b| over B(0,R) for two radial step functions.
double l1_distance(const StepProfile& a, const StepProfile& b, int n);

/// Normal-trace coefficients sum_k alpha_k cos(k theta) + beta_k sin(k theta),
/// k = 1..K (index 0 unused).
struct DeformationCoeffs {
  std::vector<double> alpha;
  std::vector<double> beta;

  int max_mode() const;
  double value(double theta) const;
  double energy() const;  // sum alpha_k^2 + beta_k^2
  static DeformationCoeffs single(int k, double a, double b = 0.0);
};

/// Exact geometry carried along with the discrete loads.
struct Shape {
  enum class Kind { radial_steps, ball, deformed_ball };
  Kind kind = Kind::radial_steps;
  StepProfile steps;                  // radial_steps
  double cx = 0.0, cy = 0.0, rho = 0.0;  // ball: B((cx,cy), rho)
  double base = 0.0;                  // deformed_ball: R(t) = base + tau g(t)
  double tau = 0.0;
  DeformationCoeffs coeffs;

  bool star_shaped() const { return kind != Kind::radial_steps; }
  /// Boundary radius in direction theta (star-shaped kinds).
  double boundary(double theta) const;
  /// Exact measure (n = 2 for the star-shaped kinds).
  double volume(int n) const;
};

/// Exact L1 distance between the functions described by two shapes.
/// Radial pairs use interval arithmetic; anything star-shaped is integrated
/// in theta with the exact radial integral inside (n = 2).
double shape_l1(const Shape& a, const Shape& b, int n, double R);

/// One real angular channel: a_k(r) cos(k theta) or b_k(r) sin(k theta).
/// Slices are nodal densities, 1 (constant in time) or N+1 of them.
struct ModalChannel {
  int k = 0;
  bool sine = false;
  std::vector<RadialField> slices;

  const RadialField& at(int m) const { return slices.size() == 1 ? slices[0] : slices[size_t(m)]; }
};

enum class Representation { radial, time_radial, modal, parametric };
std::string to_string(Representation r);

/// A control (or a perturbation direction) as a stack of angular channels.
/// Radial controls are the single channel k = 0. Geometric controls also
/// carry their exact shapes (one, or one per time slice).
struct Control {
  GridPtr grid;
  int n_slices = 1;
  std::vector<ModalChannel> channels;
  std::vector<Shape> shapes;
  std::string family;
  std::string label;
  /// deformed balls: the uniform radial offset restoring the volume
  double volume_offset = 0.0;
  /// relative L2 size of the highest retained angular mode
  double tail_norm = 0.0;

  Representation representation() const;
  bool time_dependent() const { return n_slices > 1; }
  const ModalChannel* channel(int k, bool sine) const;
  /// k = 0 density at slice m (zero if absent).
  RadialField radial_slice(int m) const;
  /// \int f(t_m, .)
  double mass(int m) const;
  /// f(r_j, theta_l) at slice m.
  PolarField sample_polar(int m, int L) const;
  const Shape* shape(int m) const;
};

Control radial_control(RadialField f, std::string family = "radial");
Control time_radial_control(std::vector<RadialField> slices, std::string family = "time-radial");

/// a f + b g channel by channel; shapes are dropped.
Control combine(double a, const Control& f, double b, const Control& g);

/// Hat projection of a radial step function (exact mass, exact first moments).
RadialField project_steps(const StepProfile& s, GridPtr grid);

/// f* = 1_{B(0,r*)}.
Control ball_control(GridPtr grid);

/// L1 distance between slices: exact geometry when both slices carry a shape,
/// nodal quadrature for purely radial controls, polar sampling otherwise.
double l1_distance(const Control& f, int mf, const Control& g, int mg, int L = 1024);

struct AnnulusRadii {
  double r_minus = 0.0;
  double r_plus = 0.0;
  double delta = 0.0;
};

/// Largest asymmetry an admissible indicator can have: 2 min(V0, Vol - V0).
double max_asymmetry(const AdmissibleSpec& spec, const RadialGrid& grid);

/// Radii of A_delta = {r < r* - r-} u {r* < r < r* + r+} with volume V0 and
/// |A_delta \Delta B*| = delta.
AnnulusRadii annulus_radii(double delta, const AdmissibleSpec& spec, const RadialGrid& grid);
StepProfile annulus_profile(double delta, const AdmissibleSpec& spec, const RadialGrid& grid);
Control annulus_control(double delta, const AdmissibleSpec& spec, GridPtr grid);

/// Indicator of B(x0, r*), angular channels k <= K.
Control shifted_ball_control(double x0, double y0, const AdmissibleSpec& spec, GridPtr grid,
                             int K = 16);

/// Indicator of {r < r* + c + tau g(theta)} with c chosen so the volume is V0
/// (n = 2). Angular channels k <= K.
Control deformed_ball_control(double tau, const DeformationCoeffs& coeffs,
                              const AdmissibleSpec& spec, GridPtr grid, int K = 16);

/// Angular channels of the hat projection of a star-shaped shape.
std::vector<ModalChannel> star_channels(const Shape& shape, const RadialGrid& grid, int K,
                                        double* tail_norm = nullptr);

struct BathtubResult {
  Control control;
  double threshold = 0.0;
  /// the filled plateau {psi = c} is larger than needed; any fill is optimal
  bool degenerate = false;
};

/// Maximiser of \int f psi over grid-admissible f: fills nodes by decreasing
/// psi (ties in index order) until the mass is V0.
BathtubResult bathtub_maximizer(const RadialField& psi, const AdmissibleSpec& spec);

struct PolarBathtub {
  PolarField f;
  double threshold = 0.0;
  bool degenerate = false;
};
PolarBathtub bathtub_maximizer(const PolarField& psi, const AdmissibleSpec& spec);

/// clip(f + c, 0, 1) with the shift c that restores \int f = V0. Admissible
/// input comes back unchanged.
Control project_admissible(const RadialField& f, const AdmissibleSpec& spec);

bool is_admissible(const Control& f, const AdmissibleSpec& spec, double tol = 1e-10);

/// Knobs for delta-class radial competitors built from the h-decomposition:
/// mass delta/2 is removed inside B* and delta/2 added outside.
struct DeltaProfileOptions {
  bool bang_bang = true;
  /// the removed/added pieces live in volume bands of width lambda delta/2
  /// next to |B*|, lambda uniform in [band_min, band_max]
  double band_min = 1.0;
  double band_max = 2.0;
  /// ignore the bands and use all of B* and Omega \ B*
  bool anywhere = false;
  int max_pieces = 4;
};

/// Random step profile with \int f = V0, 0 <= f <= 1, ||f - f*||_1 = delta.
StepProfile random_delta_profile(std::mt19937_64& rng, double delta, const AdmissibleSpec& spec,
                                 const RadialGrid& grid, const DeltaProfileOptions& opts = {});

enum class SampleKind { bangbang_radial, smooth, oscillating_annulus, td_bangbang, moving_ball };

struct SampleRequest {
  SampleKind kind = SampleKind::bangbang_radial;
  /// asymmetry scale (0: drawn at random)
  double delta0 = 0.0;
  /// oscillation count for oscillating annuli
  int m = 1;
  /// time pieces for td_bangbang / moving_ball
  int pieces = 4;
  /// angular channels for moving_ball
  int K = 16;
  /// volume-band width for bang-bang pieces
  DeltaProfileOptions delta_opts{};
  /// td_bangbang: every piece at exactly delta0 instead of [0.5, 1] delta0
  bool fixed_delta = false;
};

/// Deterministic random admissible control. Time-dependent kinds need the
/// time grid.
Control sample_random_admissible(std::uint64_t seed, const SampleRequest& req,
                                 const AdmissibleSpec& spec, GridPtr grid,
                                 const TimeGrid& tgrid = TimeGrid());

/// JSON document: representation tag, shapes, grid fingerprint, per-slice
/// mass and channel values.
std::string control_to_json(const Control& f);
Control control_from_json(const std::string& text, GridPtr grid);

}  // namespace piso
