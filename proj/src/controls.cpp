#include "piso/controls.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

namespace piso {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// 8-point Gauss-Legendre on [-1, 1], positive half
constexpr double gl_x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                            0.9602898564975363};
constexpr double gl_w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                            0.1012285362903763};

double reference_radius(const AdmissibleSpec& spec, const RadialGrid& g) {
  return g.radius_of_volume(spec.V0);
}

}  // namespace

void validate(const AdmissibleSpec& spec, const RadialGrid& grid) {
  if (!(spec.V0 > 0.0 && spec.V0 < grid.volume()))
    throw std::invalid_argument("admissible spec: V0 must lie in (0, Vol(Omega))");
}

// ---------------------------------------------------------------- steps

double StepProfile::value_at(double r) const {
  for (size_t i = 0; i + 1 < breaks.size(); ++i)
    if (r >= breaks[i] && r < breaks[i + 1]) return values[i];
  return values.empty() ? 0.0 : values.back();
}

double StepProfile::integral(int n) const {
  const double om = unit_ball_volume(n);
  double s = 0.0;
  for (size_t i = 0; i < values.size(); ++i)
    s += values[i] * om * (std::pow(breaks[i + 1], n) - std::pow(breaks[i], n));
  return s;
}

StepProfile StepProfile::ball(double rho, double R) {
  if (rho >= R) return {{0.0, R}, {1.0}};
  if (rho <= 0.0) return {{0.0, R}, {0.0}};
  return {{0.0, rho, R}, {1.0, 0.0}};
}

double l1_distance(const StepProfile& a, const StepProfile& b, int n) {
  std::vector<double> cuts = a.breaks;
  cuts.insert(cuts.end(), b.breaks.begin(), b.breaks.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const double om = unit_ball_volume(n);
  double s = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const double d = std::abs(a.value_at(mid) - b.value_at(mid));
    if (d > 0.0) s += d * om * (std::pow(cuts[i + 1], n) - std::pow(cuts[i], n));
  }
  return s;
}

// ---------------------------------------------------------------- shapes

int DeformationCoeffs::max_mode() const {
  int k = 0;
  for (size_t i = 1; i < std::max(alpha.size(), beta.size()); ++i) {
    const double a = i < alpha.size() ? alpha[i] : 0.0;
    const double b = i < beta.size() ? beta[i] : 0.0;
    if (a != 0.0 || b != 0.0) k = int(i);
  }
  return k;
}

double DeformationCoeffs::value(double t) const {
  double s = 0.0;
  for (size_t k = 1; k < alpha.size(); ++k) s += alpha[k] * std::cos(double(k) * t);
  for (size_t k = 1; k < beta.size(); ++k) s += beta[k] * std::sin(double(k) * t);
  return s;
}

double DeformationCoeffs::energy() const {
  double s = 0.0;
  for (size_t k = 1; k < alpha.size(); ++k) s += alpha[k] * alpha[k];
  for (size_t k = 1; k < beta.size(); ++k) s += beta[k] * beta[k];
  return s;
}

DeformationCoeffs DeformationCoeffs::single(int k, double a, double b) {
  if (k < 1) throw std::invalid_argument("deformation: modes start at k = 1");
  DeformationCoeffs c;
  c.alpha.assign(static_cast<size_t>(k) + 1, 0.0);
  c.beta.assign(static_cast<size_t>(k) + 1, 0.0);
  c.alpha[static_cast<size_t>(k)] = a;
  c.beta[static_cast<size_t>(k)] = b;
  return c;
}

double Shape::boundary(double t) const {
  switch (kind) {
    case Kind::ball: {
      const double e = cx * std::cos(t) + cy * std::sin(t);
      return e + std::sqrt(rho * rho - cx * cx - cy * cy + e * e);
    }
    case Kind::deformed_ball:
      return base + tau * coeffs.value(t);
    case Kind::radial_steps:
      break;
  }
  throw std::logic_error("shape: radial steps have no boundary function");
}

double Shape::volume(int n) const {
  switch (kind) {
    case Kind::radial_steps:
      return steps.integral(n);
    case Kind::ball:
      return std::numbers::pi * rho * rho;
    case Kind::deformed_ball:
      return std::numbers::pi * base * base + 0.5 * std::numbers::pi * tau * tau * coeffs.energy();
  }
  return 0.0;
}

namespace {

// An indicator of a centred ball written as steps, or nothing.
bool as_centred_ball(const StepProfile& s, double& rho) {
  if (s.values.size() == 2 && s.values[0] == 1.0 && s.values[1] == 0.0) {
    rho = s.breaks[1];
    return true;
  }
  if (s.values.size() == 1 && s.values[0] == 1.0) {
    rho = s.breaks.back();
    return true;
  }
  return false;
}

// \int_0^R |a(r) - b(r)| r dr along one ray, both step functions in r
double ray_l1(const std::vector<std::pair<double, double>>& a,
              const std::vector<std::pair<double, double>>& b, double R) {
  // pieces are (start, value), sorted, starting at 0
  std::vector<double> cuts;
  for (auto& p : a) cuts.push_back(p.first);
  for (auto& p : b) cuts.push_back(p.first);
  cuts.push_back(R);
  std::sort(cuts.begin(), cuts.end());
  auto val = [](const std::vector<std::pair<double, double>>& v, double r) {
    double out = 0.0;
    for (auto& p : v)
      if (p.first <= r) out = p.second;
    return out;
  };
  double s = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    s += std::abs(val(a, mid) - val(b, mid)) * 0.5 * (cuts[i + 1] * cuts[i + 1] - cuts[i] * cuts[i]);
  }
  return s;
}

std::vector<std::pair<double, double>> ray_profile(const Shape& s, double t) {
  if (s.kind == Shape::Kind::radial_steps) {
    std::vector<std::pair<double, double>> out;
    for (size_t i = 0; i < s.steps.values.size(); ++i) out.emplace_back(s.steps.breaks[i], s.steps.values[i]);
    return out;
  }
  return {{0.0, 1.0}, {s.boundary(t), 0.0}};
}

}  // namespace

double shape_l1(const Shape& a, const Shape& b, int n, double R) {
  if (!a.star_shaped() && !b.star_shaped()) return l1_distance(a.steps, b.steps, n);
  if (n != 2) throw std::invalid_argument("shape_l1: non-radial shapes need n = 2");
  auto star_fn = [&](const Shape& s, double& rho) -> bool {
    if (s.star_shaped()) return true;
    return as_centred_ball(s.steps, rho);
  };
  double ra = 0.0, rb = 0.0;
  if (star_fn(a, ra) && star_fn(b, rb)) {
    auto fa = [&](double t) { return a.star_shaped() ? a.boundary(t) : ra; };
    auto fb = [&](double t) { return b.star_shaped() ? b.boundary(t) : rb; };
    return star_symmetric_difference(fa, fb);
  }
  auto integrand = [&](double t) { return ray_l1(ray_profile(a, t), ray_profile(b, t), R); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, two_pi, 15,
                                                                       1e-13);
}

// ---------------------------------------------------------------- control

std::string to_string(Representation r) {
  switch (r) {
    case Representation::radial: return "radial";
    case Representation::time_radial: return "time_radial";
    case Representation::modal: return "modal";
    case Representation::parametric: return "parametric";
  }
  return "?";
}

Representation Control::representation() const {
  if (!shapes.empty()) return Representation::parametric;
  for (const auto& c : channels)
    if (c.k > 0) return Representation::modal;
  return n_slices > 1 ? Representation::time_radial : Representation::radial;
}

const ModalChannel* Control::channel(int k, bool sine) const {
  for (const auto& c : channels)
    if (c.k == k && c.sine == sine) return &c;
  return nullptr;
}

RadialField Control::radial_slice(int m) const {
  if (const auto* c = channel(0, false)) return c->at(m);
  return RadialField(grid);
}

double Control::mass(int m) const { return disk_integral(radial_slice(m)); }

PolarField Control::sample_polar(int m, int L) const {
  PolarField out(grid, L);
  std::vector<double> trig(static_cast<size_t>(L));
  for (const auto& c : channels) {
    for (int l = 0; l < L; ++l) {
      const double t = PolarField::angle(l, L);
      trig[l] = c.sine ? std::sin(c.k * t) : std::cos(c.k * t);
    }
    const auto& a = c.at(m);
    for (int j = 0; j < grid->size(); ++j) {
      if (a[j] == 0.0) continue;
      for (int l = 0; l < L; ++l) out.at(j, l) += a[j] * trig[l];
    }
  }
  return out;
}

const Shape* Control::shape(int m) const {
  if (shapes.empty()) return nullptr;
  return shapes.size() == 1 ? &shapes[0] : &shapes[static_cast<size_t>(m)];
}

Control radial_control(RadialField f, std::string family) {
  Control c;
  c.grid = f.grid;
  c.family = std::move(family);
  c.channels.push_back({0, false, {std::move(f)}});
  return c;
}

Control time_radial_control(std::vector<RadialField> slices, std::string family) {
  if (slices.empty()) throw std::invalid_argument("time_radial_control: no slices");
  Control c;
  c.grid = slices.front().grid;
  c.family = std::move(family);
  c.n_slices = int(slices.size());
  c.channels.push_back({0, false, std::move(slices)});
  return c;
}

Control combine(double a, const Control& f, double b, const Control& g) {
  require_same_grid(*f.grid, *g.grid);
  if (f.n_slices != g.n_slices && f.n_slices != 1 && g.n_slices != 1)
    throw std::invalid_argument("combine: slice counts differ");
  Control out;
  out.grid = f.grid;
  out.n_slices = std::max(f.n_slices, g.n_slices);
  out.family = "combination";
  std::map<std::pair<int, bool>, int> index;
  auto add = [&](const Control& src, double w) {
    for (const auto& c : src.channels) {
      auto key = std::make_pair(c.k, c.sine);
      auto it = index.find(key);
      if (it == index.end()) {
        ModalChannel z{c.k, c.sine, {}};
        z.slices.assign(static_cast<size_t>(out.n_slices), RadialField(out.grid));
        index[key] = int(out.channels.size());
        out.channels.push_back(std::move(z));
        it = index.find(key);
      }
      auto& dst = out.channels[static_cast<size_t>(it->second)];
      for (int m = 0; m < out.n_slices; ++m) {
        const auto& s = c.at(src.n_slices == 1 ? 0 : m);
        for (int j = 0; j < out.grid->size(); ++j) dst.slices[static_cast<size_t>(m)][j] += w * s[j];
      }
    }
  };
  add(f, a);
  add(g, b);
  return out;
}

RadialField project_steps(const StepProfile& s, GridPtr grid) {
  std::vector<double> load(static_cast<size_t>(grid->size()), 0.0);
  for (size_t i = 0; i < s.values.size(); ++i)
    grid->add_interval_load(s.breaks[i], s.breaks[i + 1], s.values[i], load);
  RadialField f(grid);
  for (int j = 0; j < grid->size(); ++j) f[j] = load[j] / grid->weight(j);
  return f;
}

namespace {

Control steps_control(const StepProfile& s, GridPtr grid, std::string family) {
  auto c = radial_control(project_steps(s, grid), std::move(family));
  Shape sh;
  sh.steps = s;
  c.shapes.push_back(std::move(sh));
  return c;
}

}  // namespace

Control ball_control(GridPtr grid) {
  auto c = steps_control(StepProfile::ball(grid->star_radius(), grid->radius()), grid, "ball");
  c.label = "f*";
  return c;
}

double l1_distance(const Control& f, int mf, const Control& g, int mg, int L) {
  require_same_grid(*f.grid, *g.grid);
  const auto& grid = *f.grid;
  const Shape* sf = f.shape(mf);
  const Shape* sg = g.shape(mg);
  if (sf && sg) return shape_l1(*sf, *sg, grid.dimension(), grid.radius());
  auto radial_only = [](const Control& c) {
    for (const auto& ch : c.channels)
      if (ch.k != 0 || ch.sine) return false;
    return true;
  };
  if (radial_only(f) && radial_only(g)) return l1_distance(f.radial_slice(mf), g.radial_slice(mg));
  return l1_distance(f.sample_polar(mf, L), g.sample_polar(mg, L));
}

// ---------------------------------------------------------------- annuli

double max_asymmetry(const AdmissibleSpec& spec, const RadialGrid& grid) {
  return 2.0 * std::min(spec.V0, grid.volume() - spec.V0);
}

AnnulusRadii annulus_radii(double delta, const AdmissibleSpec& spec, const RadialGrid& grid) {
  validate(spec, grid);
  if (!(delta >= 0.0) || delta > max_asymmetry(spec, grid))
    throw std::invalid_argument("annulus: delta outside [0, delta_max]");
  const int n = grid.dimension();
  const double om = unit_ball_volume(n);
  const double rs = reference_radius(spec, grid);
  const double rsn = std::pow(rs, n);
  const double inner = std::pow(std::max(rsn - delta / (2.0 * om), 0.0), 1.0 / n);
  const double outer = std::pow(rsn + delta / (2.0 * om), 1.0 / n);
  if (delta > 0.0 && !(outer < grid.radius()))
    throw std::invalid_argument("annulus: outer ring leaves the domain");
  return {rs - inner, outer - rs, delta};
}

StepProfile annulus_profile(double delta, const AdmissibleSpec& spec, const RadialGrid& grid) {
  const auto a = annulus_radii(delta, spec, grid);
  const double rs = reference_radius(spec, grid);
  const double R = grid.radius();
  if (delta == 0.0) return StepProfile::ball(rs, R);
  StepProfile s;
  const double inner = rs - a.r_minus;
  if (inner > 0.0) {
    s.breaks = {0.0, inner, rs, rs + a.r_plus, R};
    s.values = {1.0, 0.0, 1.0, 0.0};
  } else {
    s.breaks = {0.0, rs, rs + a.r_plus, R};
    s.values = {0.0, 1.0, 0.0};
  }
  return s;
}

Control annulus_control(double delta, const AdmissibleSpec& spec, GridPtr grid) {
  auto c = steps_control(annulus_profile(delta, spec, *grid), grid, "annulus");
  c.label = "delta=" + std::to_string(delta);
  return c;
}

// ---------------------------------------------------------------- star sets

std::vector<ModalChannel> star_channels(const Shape& shape, const RadialGrid& grid, int K,
                                        double* tail_norm) {
  if (grid.dimension() != 2) throw std::invalid_argument("angular channels need n = 2");
  if (K < 0) throw std::invalid_argument("angular channels: K must be >= 0");
  const int M = grid.intervals();
  auto Rf = [&](double t) { return shape.boundary(t); };

  const int S = 8192;
  std::vector<double> samp(S + 1);
  double rmin = 1e300, rmax = -1e300;
  for (int s = 0; s <= S; ++s) {
    samp[s] = Rf(two_pi * s / S);
    rmin = std::min(rmin, samp[s]);
    rmax = std::max(rmax, samp[s]);
  }
  if (!(rmin > 0.0) || !(rmax < grid.radius()))
    throw std::invalid_argument("star set leaves the domain");
  const int c_lo = grid.cell_of(rmin);
  const int c_hi = grid.cell_of(rmax);
  const int j_lo = c_lo, j_hi = std::min(c_hi + 1, M);

  // angles where the boundary crosses a node radius
  std::vector<double> cuts{0.0, two_pi};
  for (int s = 0; s < S; ++s) {
    const double a = samp[s], b = samp[s + 1];
    for (int i = c_lo + 1; i <= c_hi; ++i) {
      const double ri = grid.node(i);
      if ((a - ri) * (b - ri) >= 0.0) continue;
      double lo = two_pi * s / S, hi = two_pi * (s + 1) / S;
      double flo = a - ri;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = Rf(mid) - ri;
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      cuts.push_back(0.5 * (lo + hi));
    }
  }
  std::sort(cuts.begin(), cuts.end());

  const int B = j_hi - j_lo + 1;
  std::vector<double> acc_c(static_cast<size_t>(K + 1) * B, 0.0), acc_s(static_cast<size_t>(K + 1) * B, 0.0);
  std::vector<double> Lj(static_cast<size_t>(B));
  std::vector<double> ck(static_cast<size_t>(K + 1)), sk(static_cast<size_t>(K + 1));

  auto node_partial = [&](int j, double rho) {
    double L = 0.0;
    if (j >= 1) {
      if (rho <= grid.node(j - 1)) return 0.0;
      L += grid.cell_moments(j - 1, grid.node(j - 1), std::min(rho, grid.node(j))).second;
    }
    if (j < M && rho > grid.node(j))
      L += grid.cell_moments(j, grid.node(j), std::min(rho, grid.node(j + 1))).first;
    return L;
  };

  const double max_panel = two_pi / 512.0;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    if (b <= a) continue;
    const int pieces = std::max(1, int(std::ceil((b - a) / max_panel)));
    for (int p = 0; p < pieces; ++p) {
      const double pa = a + (b - a) * p / pieces, pb = a + (b - a) * (p + 1) / pieces;
      const double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
      for (int q = 0; q < 8; ++q) {
        const double t = mid + (q < 4 ? -1.0 : 1.0) * half * gl_x[q % 4];
        const double wq = half * gl_w[q % 4];
        const double rho = Rf(t);
        for (int j = j_lo; j <= j_hi; ++j) Lj[static_cast<size_t>(j - j_lo)] = node_partial(j, rho);
        const double c1 = std::cos(t), s1 = std::sin(t);
        ck[0] = 1.0;
        sk[0] = 0.0;
        for (int k = 1; k <= K; ++k) {
          ck[k] = ck[k - 1] * c1 - sk[k - 1] * s1;
          sk[k] = sk[k - 1] * c1 + ck[k - 1] * s1;
        }
        for (int k = 0; k <= K; ++k) {
          const double wc = wq * ck[k], ws = wq * sk[k];
          double* ac = &acc_c[static_cast<size_t>(k) * B];
          double* as = &acc_s[static_cast<size_t>(k) * B];
          for (int i = 0; i < B; ++i) {
            ac[i] += wc * Lj[i];
            as[i] += ws * Lj[i];
          }
        }
      }
    }
  }

  GridPtr gp(std::shared_ptr<const RadialGrid>(), &grid);  // non-owning view
  std::vector<ModalChannel> out;
  std::vector<double> chan_norm(static_cast<size_t>(K + 1), 0.0);
  for (int k = 0; k <= K; ++k) {
    for (bool sine : {false, true}) {
      if (k == 0 && sine) continue;
      RadialField f(gp);
      double amax = 0.0;
      const double norm = k == 0 ? two_pi : std::numbers::pi;
      if (k == 0)
        for (int j = 0; j < j_lo; ++j) f[j] = 1.0;
      for (int j = j_lo; j <= j_hi; ++j) {
        const double v = (sine ? acc_s : acc_c)[static_cast<size_t>(k) * B + (j - j_lo)];
        f[j] = v / (norm * grid.weight(j));
      }
      for (int j = 0; j <= M; ++j) {
        amax = std::max(amax, std::abs(f[j]));
        chan_norm[static_cast<size_t>(k)] += grid.node_measure(j) * f[j] * f[j];
      }
      if (amax > 1e-14) out.push_back({k, sine, {std::move(f)}});
    }
  }
  if (tail_norm) *tail_norm = K > 0 ? std::sqrt(chan_norm[static_cast<size_t>(K)] / chan_norm[0]) : 0.0;
  return out;
}

namespace {

Control star_control(Shape shape, GridPtr grid, int K, std::string family) {
  Control c;
  c.grid = grid;
  c.family = std::move(family);
  c.channels = star_channels(shape, *grid, K, &c.tail_norm);
  for (auto& ch : c.channels)
    for (auto& s : ch.slices) s.grid = grid;
  c.shapes.push_back(std::move(shape));
  return c;
}

}  // namespace

Control shifted_ball_control(double x0, double y0, const AdmissibleSpec& spec, GridPtr grid,
                             int K) {
  validate(spec, *grid);
  if (grid->dimension() != 2) throw std::invalid_argument("shifted ball: needs n = 2");
  Shape s;
  s.kind = Shape::Kind::ball;
  s.cx = x0;
  s.cy = y0;
  s.rho = reference_radius(spec, *grid);
  const double d = std::hypot(x0, y0);
  if (!(d < s.rho)) throw std::invalid_argument("shifted ball: centre shift must be below r*");
  if (!(d + s.rho < grid->radius())) throw std::invalid_argument("shifted ball: leaves the domain");
  auto c = star_control(std::move(s), grid, K, "shifted-ball");
  c.label = "x0=(" + std::to_string(x0) + "," + std::to_string(y0) + ")";
  return c;
}

Control deformed_ball_control(double tau, const DeformationCoeffs& coeffs,
                              const AdmissibleSpec& spec, GridPtr grid, int K) {
  validate(spec, *grid);
  if (grid->dimension() != 2) throw std::invalid_argument("deformed ball: needs n = 2");
  const double rs = reference_radius(spec, *grid);
  const double b2 = rs * rs - 0.5 * tau * tau * coeffs.energy();
  if (!(b2 > 0.0)) throw std::invalid_argument("deformed ball: amplitude too large");
  Shape s;
  s.kind = Shape::Kind::deformed_ball;
  s.base = std::sqrt(b2);
  s.tau = tau;
  s.coeffs = coeffs;
  if (tau == 0.0) {
    // exactly B*
    auto c = steps_control(StepProfile::ball(rs, grid->radius()), grid, "deformed-ball");
    c.shapes[0] = s;
    return c;
  }
  auto c = star_control(s, grid, K, "deformed-ball");
  c.volume_offset = s.base - rs;
  c.label = "tau=" + std::to_string(tau);
  return c;
}

// ---------------------------------------------------------------- bathtub

namespace {

struct FillResult {
  std::vector<double> f;
  double threshold = 0.0;
  bool degenerate = false;
};

FillResult fill(const std::vector<double>& psi, const std::vector<double>& meas, double V0) {
  std::vector<size_t> order(psi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return psi[a] > psi[b]; });
  FillResult r;
  r.f.assign(psi.size(), 0.0);
  double left = V0;
  size_t last = order.front();
  for (size_t i : order) {
    if (left <= 0.0) break;
    last = i;
    if (meas[i] <= left) {
      r.f[i] = 1.0;
      left -= meas[i];
    } else {
      r.f[i] = left / meas[i];
      left = 0.0;
    }
  }
  r.threshold = psi[last];
  double scale = 0.0;
  for (double v : psi) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * std::max(scale, 1e-300);
  int plateau = 0;
  double plateau_mass = 0.0, filled = 0.0;
  for (size_t i = 0; i < psi.size(); ++i) {
    if (std::abs(psi[i] - r.threshold) <= tol) {
      ++plateau;
      plateau_mass += meas[i];
      filled += r.f[i] * meas[i];
    }
  }
  r.degenerate = plateau > 1 && filled > 0.0 && filled < plateau_mass * (1.0 - 1e-14);
  return r;
}

}  // namespace

BathtubResult bathtub_maximizer(const RadialField& psi, const AdmissibleSpec& spec) {
  const auto& g = *psi.grid;
  validate(spec, g);
  for (double v : psi.values)
    if (!std::isfinite(v)) throw std::invalid_argument("bathtub: psi must be finite");
  std::vector<double> meas(static_cast<size_t>(g.size()));
  for (int j = 0; j < g.size(); ++j) meas[j] = g.node_measure(j);
  auto r = fill(psi.values, meas, spec.V0);
  BathtubResult out;
  out.control = radial_control(RadialField(psi.grid, std::move(r.f)), "bathtub");
  out.threshold = r.threshold;
  out.degenerate = r.degenerate;
  return out;
}

PolarBathtub bathtub_maximizer(const PolarField& psi, const AdmissibleSpec& spec) {
  const auto& g = *psi.grid;
  validate(spec, g);
  for (double v : psi.values)
    if (!std::isfinite(v)) throw std::invalid_argument("bathtub: psi must be finite");
  std::vector<double> meas(psi.values.size());
  for (int j = 0; j < g.size(); ++j)
    for (int l = 0; l < psi.L; ++l) meas[static_cast<size_t>(j) * psi.L + l] = psi.cell_measure(j);
  auto r = fill(psi.values, meas, spec.V0);
  PolarBathtub out;
  out.f = PolarField(psi.grid, psi.L);
  out.f.values = std::move(r.f);
  out.threshold = r.threshold;
  out.degenerate = r.degenerate;
  return out;
}

// ---------------------------------------------------------------- projection

Control project_admissible(const RadialField& f, const AdmissibleSpec& spec) {
  const auto& g = *f.grid;
  validate(spec, g);
  for (double v : f.values)
    if (!std::isfinite(v)) throw std::invalid_argument("project_admissible: non-finite value");
  const double vol = g.volume();
  bool inside = true;
  for (double v : f.values) inside = inside && v >= 0.0 && v <= 1.0;
  if (inside && std::abs(disk_integral(f) - spec.V0) <= 1e-12 * vol)
    return radial_control(f, "projected");

  auto mass = [&](double c) {
    double s = 0.0;
    for (int j = 0; j < g.size(); ++j) s += g.node_measure(j) * std::clamp(f[j] + c, 0.0, 1.0);
    return s;
  };
  // mass(c) is piecewise linear and nondecreasing with kinks at -f_j, 1 - f_j
  std::vector<double> kinks;
  for (double v : f.values) {
    kinks.push_back(-v);
    kinks.push_back(1.0 - v);
  }
  std::sort(kinks.begin(), kinks.end());
  kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
  double c = kinks.back();
  double prev_c = kinks.front(), prev_m = mass(prev_c);
  for (size_t i = 1; i < kinks.size(); ++i) {
    const double m = mass(kinks[i]);
    if (m >= spec.V0) {
      c = m == prev_m ? prev_c : prev_c + (spec.V0 - prev_m) * (kinks[i] - prev_c) / (m - prev_m);
      break;
    }
    prev_c = kinks[i];
    prev_m = m;
  }
  RadialField out(f.grid);
  for (int j = 0; j < g.size(); ++j) out[j] = std::clamp(f[j] + c, 0.0, 1.0);
  return radial_control(std::move(out), "projected");
}

bool is_admissible(const Control& f, const AdmissibleSpec& spec, double tol) {
  for (int m = 0; m < f.n_slices; ++m) {
    if (std::abs(f.mass(m) - spec.V0) > tol * std::max(1.0, spec.V0)) return false;
    if (f.shape(m)) {
      const Shape* s = f.shape(m);
      if (s->kind == Shape::Kind::radial_steps)
        for (double v : s->steps.values)
          if (v < -tol || v > 1.0 + tol) return false;
      continue;
    }
    if (f.representation() == Representation::modal) {
      const auto p = f.sample_polar(m, 256);
      for (double v : p.values)
        if (v < -tol || v > 1.0 + tol) return false;
    } else {
      for (double v : f.radial_slice(m).values)
        if (v < -tol || v > 1.0 + tol) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- sampling

StepProfile random_delta_profile(std::mt19937_64& rng, double delta, const AdmissibleSpec& spec,
                                 const RadialGrid& grid, const DeltaProfileOptions& opts) {
  validate(spec, grid);
  const int n = grid.dimension();
  const double om = unit_ball_volume(n);
  const double vol = grid.volume(), V0 = spec.V0, R = grid.radius();
  const double half = 0.5 * delta;
  const double cap_in = V0, cap_out = (vol - V0) * (1.0 - 1e-9);
  if (!(delta >= 0.0) || half > cap_in || half > cap_out)
    throw std::invalid_argument("random_delta_profile: infeasible delta");
  if (delta == 0.0) return StepProfile::ball(grid.radius_of_volume(V0), R);
  std::uniform_real_distribution<double> U(0.0, 1.0);

  struct Piece {
    double a, b, amp;  // local volume coordinates in the band
  };
  auto side = [&](double cap, double& band) {
    const double lambda = opts.band_min + (opts.band_max - opts.band_min) * U(rng);
    band = opts.anywhere ? cap : std::min(lambda * half, cap);
    const int q = 1 + int(rng() % std::uint64_t(std::max(1, opts.max_pieces)));
    std::vector<double> p(static_cast<size_t>(q)), amp(static_cast<size_t>(q)), gap(static_cast<size_t>(q) + 1);
    const double amin = std::max(0.2, half / band);
    for (int i = 0; i < q; ++i) {
      p[i] = -std::log(1.0 - U(rng));
      amp[i] = opts.bang_bang ? 1.0 : amin + (1.0 - amin) * U(rng);
    }
    for (auto& gv : gap) gv = -std::log(1.0 - U(rng));
    const double ps = std::accumulate(p.begin(), p.end(), 0.0);
    const double gs = std::accumulate(gap.begin(), gap.end(), 0.0);
    std::vector<double> len(static_cast<size_t>(q));
    double used = 0.0;
    for (int i = 0; i < q; ++i) {
      len[i] = half * (p[i] / ps) / amp[i];
      used += len[i];
    }
    const double free = std::max(band - used, 0.0);
    std::vector<Piece> out;
    double x = 0.0;
    for (int i = 0; i < q; ++i) {
      x += free * gap[i] / gs;
      out.push_back({x, x + len[i], amp[i]});
      x += len[i];
    }
    return out;
  };

  double band_in = 0.0, band_out = 0.0;
  auto in = side(cap_in, band_in);
  auto out = side(cap_out, band_out);

  // (start volume, value) segments over [0, Vol]
  std::vector<std::pair<double, double>> seg;
  seg.push_back({0.0, 1.0});
  const double base_in = V0 - band_in;
  for (auto& p : in) {
    seg.push_back({base_in + p.a, 1.0 - p.amp});
    seg.push_back({base_in + p.b, 1.0});
  }
  seg.push_back({V0, 0.0});
  for (auto& p : out) {
    seg.push_back({V0 + p.a, p.amp});
    seg.push_back({V0 + p.b, 0.0});
  }
  StepProfile s;
  auto radius = [&](double v) { return std::min(std::pow(std::max(v, 0.0) / om, 1.0 / n), R); };
  for (size_t i = 0; i < seg.size(); ++i) {
    const double r = radius(seg[i].first);
    const double next = i + 1 < seg.size() ? radius(seg[i + 1].first) : R;
    if (next <= r) continue;  // empty piece
    if (!s.values.empty() && s.values.back() == seg[i].second) continue;
    s.breaks.push_back(r);
    s.values.push_back(seg[i].second);
  }
  s.breaks.push_back(R);
  if (s.breaks.front() != 0.0) s.breaks.front() = 0.0;
  return s;
}

namespace {

// ModalChannel slices for piecewise-constant-in-time pieces
Control assemble_pieces(const std::vector<Control>& pieces, const std::vector<int>& piece_of,
                        GridPtr grid, std::string family) {
  Control c;
  c.grid = grid;
  c.family = std::move(family);
  c.n_slices = int(piece_of.size());
  std::map<std::pair<int, bool>, int> index;
  for (const auto& p : pieces)
    for (const auto& ch : p.channels) {
      auto key = std::make_pair(ch.k, ch.sine);
      if (!index.count(key)) {
        index[key] = int(c.channels.size());
        c.channels.push_back({ch.k, ch.sine, {}});
      }
    }
  for (auto& ch : c.channels) ch.slices.reserve(piece_of.size());
  for (int pi : piece_of) {
    const auto& p = pieces[static_cast<size_t>(pi)];
    for (auto& ch : c.channels) {
      const auto* src = p.channel(ch.k, ch.sine);
      ch.slices.push_back(src ? src->slices[0] : RadialField(grid));
    }
    c.shapes.push_back(p.shapes.at(0));
  }
  for (const auto& p : pieces) c.tail_norm = std::max(c.tail_norm, p.tail_norm);
  return c;
}

std::vector<int> piece_index(int slices, int pieces) {
  std::vector<int> out(static_cast<size_t>(slices));
  for (int m = 0; m < slices; ++m) out[m] = std::min(pieces - 1, m * pieces / slices);
  return out;
}

}  // namespace

Control sample_random_admissible(std::uint64_t seed, const SampleRequest& req,
                                 const AdmissibleSpec& spec, GridPtr grid, const TimeGrid& tgrid) {
  validate(spec, *grid);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double dmax = max_asymmetry(spec, *grid) * 0.999;
  const double V0 = spec.V0;
  auto pick_delta = [&](double lo, double hi) {
    return req.delta0 > 0.0 ? req.delta0 : (lo + (hi - lo) * U(rng));
  };

  Control out;
  switch (req.kind) {
    case SampleKind::bangbang_radial: {
      const double delta = pick_delta(0.01 * dmax, 0.5 * dmax);
      auto s = random_delta_profile(rng, delta, spec, *grid, req.delta_opts);
      out = steps_control(s, grid, "bangbang");
      out.label = "delta=" + std::to_string(delta);
      break;
    }
    case SampleKind::smooth: {
      const double vol = grid->volume(), R = grid->radius();
      double c[3];
      for (double& v : c) v = -0.4 + 0.8 * U(rng);
      auto raw = RadialField::from_function(grid, [&](double r) {
        double s = V0 / vol;
        for (int i = 0; i < 3; ++i) s += c[i] * std::cos((i + 1) * std::numbers::pi * r / R);
        return s;
      });
      out = project_admissible(raw, spec);
      out.family = "smooth";
      break;
    }
    case SampleKind::oscillating_annulus: {
      const double d0 = pick_delta(0.01 * V0, 0.1 * V0);
      std::vector<RadialField> slices;
      for (int m = 0; m <= tgrid.N; ++m) {
        const double d =
            d0 * std::abs(std::sin(std::numbers::pi * req.m * tgrid.time(m) / tgrid.T));
        auto s = annulus_profile(d, spec, *grid);
        slices.push_back(project_steps(s, grid));
        Shape sh;
        sh.steps = s;
        out.shapes.push_back(std::move(sh));
      }
      auto shapes = std::move(out.shapes);
      out = time_radial_control(std::move(slices), "oscillating-annulus");
      out.shapes = std::move(shapes);
      out.label = "delta0=" + std::to_string(d0) + ",m=" + std::to_string(req.m);
      break;
    }
    case SampleKind::td_bangbang: {
      const double d0 = pick_delta(0.01 * V0, 0.1 * V0);
      const int P = std::max(1, req.pieces);
      std::vector<Control> pieces;
      for (int p = 0; p < P; ++p) {
        const double d = req.fixed_delta ? d0 : d0 * (0.5 + 0.5 * U(rng));
        pieces.push_back(steps_control(random_delta_profile(rng, d, spec, *grid, req.delta_opts),
                                       grid, "bangbang"));
      }
      out = assemble_pieces(pieces, piece_index(tgrid.N + 1, P), grid, "td-bangbang");
      out.label = "delta0=" + std::to_string(d0);
      break;
    }
    case SampleKind::moving_ball: {
      const double rs = reference_radius(spec, *grid);
      const double reach = std::min(0.6 * rs, 0.9 * (grid->radius() - rs));
      const int P = std::max(1, req.pieces);
      std::vector<Control> pieces;
      for (int p = 0; p < P; ++p) {
        const double rho = reach * U(rng), phi = two_pi * U(rng);
        pieces.push_back(
            shifted_ball_control(rho * std::cos(phi), rho * std::sin(phi), spec, grid, req.K));
      }
      out = assemble_pieces(pieces, piece_index(tgrid.N + 1, P), grid, "moving-ball");
      break;
    }
  }
  out.label = out.label.empty() ? "seed=" + std::to_string(seed)
                                : out.label + ",seed=" + std::to_string(seed);
  return out;
}

// ---------------------------------------------------------------- json

namespace {

using nlohmann::json;

json shape_json(const Shape& s) {
  json j;
  switch (s.kind) {
    case Shape::Kind::radial_steps:
      j["kind"] = "radial_steps";
      j["breaks"] = s.steps.breaks;
      j["values"] = s.steps.values;
      break;
    case Shape::Kind::ball:
      j["kind"] = "ball";
      j["center"] = {s.cx, s.cy};
      j["radius"] = s.rho;
      break;
    case Shape::Kind::deformed_ball:
      j["kind"] = "deformed_ball";
      j["base"] = s.base;
      j["tau"] = s.tau;
      j["alpha"] = s.coeffs.alpha;
      j["beta"] = s.coeffs.beta;
      break;
  }
  return j;
}

Shape shape_from(const json& j) {
  Shape s;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "radial_steps") {
    s.steps.breaks = j.at("breaks").get<std::vector<double>>();
    s.steps.values = j.at("values").get<std::vector<double>>();
  } else if (kind == "ball") {
    s.kind = Shape::Kind::ball;
    s.cx = j.at("center").at(0).get<double>();
    s.cy = j.at("center").at(1).get<double>();
    s.rho = j.at("radius").get<double>();
  } else if (kind == "deformed_ball") {
    s.kind = Shape::Kind::deformed_ball;
    s.base = j.at("base").get<double>();
    s.tau = j.at("tau").get<double>();
    s.coeffs.alpha = j.at("alpha").get<std::vector<double>>();
    s.coeffs.beta = j.at("beta").get<std::vector<double>>();
  } else {
    throw std::invalid_argument("control json: unknown shape kind '" + kind + "'");
  }
  return s;
}

}  // namespace

std::string control_to_json(const Control& f) {
  json j;
  j["representation"] = to_string(f.representation());
  j["family"] = f.family;
  j["label"] = f.label;
  j["grid"] = f.grid->fingerprint();
  j["slices"] = f.n_slices;
  j["volume_offset"] = f.volume_offset;
  j["tail_norm"] = f.tail_norm;
  std::vector<double> mass;
  for (int m = 0; m < f.n_slices; ++m) mass.push_back(f.mass(m));
  j["mass"] = mass;
  j["channels"] = json::array();
  for (const auto& c : f.channels) {
    json cj;
    cj["k"] = c.k;
    cj["sine"] = c.sine;
    cj["values"] = json::array();
    for (const auto& s : c.slices) cj["values"].push_back(s.values);
    j["channels"].push_back(cj);
  }
  j["shapes"] = json::array();
  for (const auto& s : f.shapes) j["shapes"].push_back(shape_json(s));
  return j.dump();
}

Control control_from_json(const std::string& text, GridPtr grid) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("control json: ") + e.what());
  }
  if (j.at("grid").get<std::string>() != grid->fingerprint())
    throw std::invalid_argument("control json: grid fingerprint mismatch");
  Control c;
  c.grid = grid;
  c.family = j.value("family", "");
  c.label = j.value("label", "");
  c.n_slices = j.at("slices").get<int>();
  c.volume_offset = j.value("volume_offset", 0.0);
  c.tail_norm = j.value("tail_norm", 0.0);
  for (const auto& cj : j.at("channels")) {
    ModalChannel ch{cj.at("k").get<int>(), cj.at("sine").get<bool>(), {}};
    for (const auto& v : cj.at("values"))
      ch.slices.emplace_back(grid, v.get<std::vector<double>>());
    c.channels.push_back(std::move(ch));
  }
  for (const auto& sj : j.at("shapes")) c.shapes.push_back(shape_from(sj));
  return c;
}

}  // namespace piso
