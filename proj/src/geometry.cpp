#include "piso/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace piso {

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

RadialGrid::RadialGrid(double R, int M, int n, double r_star)
    : R_(R), M_(M), n_(n) {
  if (!(R > 0.0)) throw std::invalid_argument("radial grid: R must be positive");
  if (M < 4) throw std::invalid_argument("radial grid: need at least 4 intervals");
  if (n < 1) throw std::invalid_argument("radial grid: dimension must be >= 1");
  if (!(r_star > 0.0 && r_star < R))
    throw std::invalid_argument("radial grid: r* must lie in (0, R)");
  h_ = R / M;
  j_star_ = static_cast<int>(std::lround(r_star / h_));
  j_star_ = std::clamp(j_star_, 1, M - 1);
  nodes_.resize(static_cast<size_t>(M) + 1);
  for (int j = 0; j <= M; ++j) nodes_[j] = (j == M) ? R : j * h_;
  r_star_ = nodes_[j_star_];
  snap_ = r_star_ - r_star;
  sphere_area_ = n * unit_ball_volume(n);
  surface_const_ = n * std::pow(unit_ball_volume(n), 1.0 / n);

  weights_.assign(static_cast<size_t>(M) + 1, 0.0);
  for (int c = 0; c < M; ++c) {
    auto [left, right] = cell_moments(c, nodes_[c], nodes_[c + 1]);
    weights_[c] += left;
    weights_[c + 1] += right;
  }
}

double RadialGrid::ball_volume(double r) const {
  return unit_ball_volume(n_) * std::pow(r, n_);
}

double RadialGrid::radius_of_volume(double v) const {
  return std::pow(v / unit_ball_volume(n_), 1.0 / n_);
}

int RadialGrid::cell_of(double r) const {
  int c = static_cast<int>(std::floor(r / h_));
  return std::clamp(c, 0, M_ - 1);
}

std::pair<double, double> RadialGrid::cell_moments(int c, double a, double b) const {
  // \int_a^b (r_{c+1} - r)/h r^{n-1} dr and \int_a^b (r - r_c)/h r^{n-1} dr,
  // written in distances to the cell ends so that thin slivers keep their digits
  const double rl = nodes_[c];
  const double rr = nodes_[c + 1];
  const double len = b - a;
  if (n_ == 2) {
    const double A = rr - a, B = rr - b;
    const double left = len * (rr * (A + B) / 2.0 - (A * A + A * B + B * B) / 3.0);
    const double x0 = a - rl, x1 = b - rl;
    const double right = len * (rl * (x0 + x1) / 2.0 + (x0 * x0 + x0 * x1 + x1 * x1) / 3.0);
    return {left / h_, right / h_};
  }
  // degree-n polynomial, 8 Gauss points are exact up to n = 15
  static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290,
                                  0.7966664774136267, 0.9602898564975363};
  static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873,
                                  0.2223810344533745, 0.1012285362903763};
  double left = 0.0, right = 0.0;
  const double mid = 0.5 * (a + b), half = 0.5 * len;
  for (int i = 0; i < 4; ++i) {
    for (double sgn : {-1.0, 1.0}) {
      const double r = mid + sgn * half * x[i];
      const double m = w[i] * half * std::pow(r, n_ - 1);
      left += m * (rr - r);
      right += m * (r - rl);
    }
  }
  return {left / h_, right / h_};
}

void RadialGrid::add_interval_load(double a, double b, double value,
                                   std::span<double> load) const {
  a = std::max(a, 0.0);
  b = std::min(b, R_);
  if (!(b > a) || value == 0.0) return;
  const int c0 = cell_of(a);
  const int c1 = cell_of(b);
  for (int c = c0; c <= c1; ++c) {
    const double lo = std::max(a, nodes_[c]);
    const double hi = std::min(b, nodes_[c + 1]);
    if (hi <= lo) continue;
    auto [l, r] = cell_moments(c, lo, hi);
    load[c] += value * l;
    load[c + 1] += value * r;
  }
}

std::string RadialGrid::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "R=" << R_ << ";M=" << M_ << ";n=" << n_ << ";r*=" << r_star_;
  return os.str();
}

bool RadialGrid::same_as(const RadialGrid& o) const {
  return this == &o || (R_ == o.R_ && M_ == o.M_ && n_ == o.n_ && j_star_ == o.j_star_);
}

GridPtr build_radial_grid(double R, int M, int n, double r_star) {
  return std::make_shared<const RadialGrid>(R, M, n, r_star);
}

TimeGrid::TimeGrid(double T_, int N_, double theta_) : T(T_), N(N_), theta(theta_) {
  if (!(T > 0.0)) throw std::invalid_argument("time grid: T must be positive");
  if (N < 1) throw std::invalid_argument("time grid: need at least one step");
  if (!(theta >= 0.5 && theta <= 1.0))
    throw std::invalid_argument("time grid: theta must lie in [1/2, 1]");
}

std::vector<double> TimeGrid::weights() const {
  std::vector<double> w(static_cast<size_t>(N) + 1, dt());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

RadialField::RadialField(GridPtr g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw std::invalid_argument("radial field: null grid");
  if (static_cast<int>(values.size()) != grid->size())
    throw std::invalid_argument("radial field: length does not match grid");
}

RadialField::RadialField(GridPtr g, double fill)
    : grid(std::move(g)), values(static_cast<size_t>(grid->size()), fill) {}

PolarField::PolarField(GridPtr g, int L_, double fill)
    : grid(std::move(g)), L(L_), values(static_cast<size_t>(grid->size()) * L_, fill) {}

void require_same_grid(const RadialGrid& a, const RadialGrid& b) {
  if (!a.same_as(b)) throw std::invalid_argument("fields live on different grids");
}

double disk_integral(const RadialField& f) {
  const auto& g = *f.grid;
  if (f.size() != g.size()) throw std::invalid_argument("disk_integral: grid mismatch");
  double s = 0.0;
  for (int j = 0; j < g.size(); ++j) s += g.weight(j) * f[j];
  return g.sphere_area() * s;
}

double disk_integral(const PolarField& f) {
  const auto& g = *f.grid;
  double s = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    double ring = 0.0;
    for (int l = 0; l < f.L; ++l) ring += f.at(j, l);
    s += f.cell_measure(j) * ring;
  }
  return s;
}

double ball_cumulative(const RadialField& f, double r) {
  const auto& g = *f.grid;
  if (!(r >= 0.0 && r <= g.radius() * (1.0 + 1e-14)))
    throw std::out_of_range("ball_cumulative: radius outside [0, R]");
  r = std::min(r, g.radius());
  double s = 0.0;
  const int last = g.cell_of(r);
  for (int c = 0; c <= last; ++c) {
    const double hi = std::min(r, g.node(c + 1));
    if (hi <= g.node(c)) break;
    auto [l, rt] = g.cell_moments(c, g.node(c), hi);
    s += f[c] * l + f[c + 1] * rt;
  }
  return g.sphere_area() * s;
}

double l1_distance(const RadialField& f, const RadialField& g) {
  require_same_grid(*f.grid, *g.grid);
  const auto& grid = *f.grid;
  double s = 0.0;
  for (int j = 0; j < grid.size(); ++j) s += grid.weight(j) * std::abs(f[j] - g[j]);
  return grid.sphere_area() * s;
}

double l1_distance(const PolarField& f, const PolarField& g) {
  require_same_grid(*f.grid, *g.grid);
  if (f.L != g.L) throw std::invalid_argument("l1_distance: angular sample counts differ");
  double s = 0.0;
  for (int j = 0; j < f.grid->size(); ++j) {
    double ring = 0.0;
    for (int l = 0; l < f.L; ++l) ring += std::abs(f.at(j, l) - g.at(j, l));
    s += f.cell_measure(j) * ring;
  }
  return s;
}

double star_symmetric_difference(const std::function<double(double)>& Ra,
                                 const std::function<double(double)>& Rb) {
  constexpr int samples = 4096;
  const double two_pi = 2.0 * std::numbers::pi;
  auto diff = [&](double t) { return Ra(t) - Rb(t); };
  std::vector<double> cuts{0.0};
  double prev = diff(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double t = two_pi * i / samples;
    const double cur = diff(t);
    if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) {
      double lo = two_pi * (i - 1) / samples, hi = t;
      double flo = prev;
      for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = diff(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev = cur;
  }
  cuts.push_back(two_pi);
  auto integrand = [&](double t) {
    const double a = Ra(t), b = Rb(t);
    return 0.5 * std::abs(a * a - b * b);
  };
  double total = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, cuts[i], cuts[i + 1], 12, 1e-14);
  }
  return total;
}

double disk_symmetric_difference(double a, double b, double d) {
  const double pi = std::numbers::pi;
  double overlap;
  if (d >= a + b) {
    overlap = 0.0;
  } else if (d <= std::abs(a - b)) {
    overlap = pi * std::min(a, b) * std::min(a, b);
  } else {
    const double ca = std::clamp((d * d + a * a - b * b) / (2.0 * d * a), -1.0, 1.0);
    const double cb = std::clamp((d * d + b * b - a * a) / (2.0 * d * b), -1.0, 1.0);
    const double k = (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b);
    overlap = a * a * std::acos(ca) + b * b * std::acos(cb) - 0.5 * std::sqrt(std::max(k, 0.0));
  }
  return pi * a * a + pi * b * b - 2.0 * overlap;
}

}  // namespace piso
