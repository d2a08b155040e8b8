#include "piso/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace piso {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// FNV-1a, enough to tell setups apart in manifests
std::string digest(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void check_slices(const Control& f, const ProblemSetup& s) {
  require_same_grid(*f.grid, *s.grid);
  if (f.n_slices != 1 && f.n_slices != s.tgrid.N + 1)
    throw std::invalid_argument("control has " + std::to_string(f.n_slices) +
                                " slices, the time grid needs 1 or " +
                                std::to_string(s.tgrid.N + 1));
}

std::vector<RadialField> rows_of(const SpaceTimeField& F, double scale = 1.0) {
  std::vector<RadialField> out;
  out.reserve(static_cast<size_t>(F.tgrid.N + 1));
  for (int m = 0; m <= F.tgrid.N; ++m) {
    auto r = F.slice(m);
    if (scale != 1.0)
      for (auto& v : r.values) v *= scale;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- setup

void ProblemSetup::validate() const {
  if (!grid) throw std::invalid_argument("setup.grid: missing");
  if (!(tgrid.T > 0.0) || tgrid.N < 1) throw std::invalid_argument("setup.time: need T > 0, N >= 1");
  if (!(tgrid.theta >= 0.5 && tgrid.theta <= 1.0))
    throw std::invalid_argument("setup.time.theta: must lie in [0.5, 1]");
  piso::validate(spec, *grid);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("setup.eps: must be >= 0");
  if (K < 0) throw std::invalid_argument("setup.K: must be >= 0");
  if (L < 64) throw std::invalid_argument("setup.L: need at least 64 samples");
  if (!u0.values.empty()) {
    if (!u0.grid || !u0.grid->same_as(*grid))
      throw std::invalid_argument("setup.u0: lives on a different grid");
    for (int j = 0; j < u0.size(); ++j) {
      if (!(u0[j] >= 0.0)) throw std::invalid_argument("setup.u0: must be nonnegative");
      if (j > 0 && u0[j] > u0[j - 1]) throw std::invalid_argument("setup.u0: must be nonincreasing");
    }
    if (u0.values.back() != 0.0) throw std::invalid_argument("setup.u0: must vanish at r = R");
  }
}

std::string ProblemSetup::to_json() const {
  json j;
  j["geometry"] = {{"R", grid->radius()},
                   {"M", grid->intervals()},
                   {"n", grid->dimension()},
                   {"V0", spec.V0},
                   {"r_star", grid->star_radius()}};
  j["time"] = {{"T", tgrid.T}, {"N", tgrid.N}, {"theta", tgrid.theta}};
  j["problem"] = {{"eps", eps}, {"u0", {{"family", "parabolic"}, {"amplitude", u0_amplitude}}}};
  j["K"] = K;
  j["L"] = L;
  return j.dump();
}

std::string ProblemSetup::hash() const { return digest(to_json()); }

RadialField parabolic_initial_state(GridPtr grid, double amplitude) {
  if (!(amplitude >= 0.0)) throw std::invalid_argument("u0 amplitude must be >= 0");
  const double R = grid->radius();
  auto u = RadialField::from_function(grid, [&](double r) { return amplitude * (1 - (r / R) * (r / R)); });
  u.values.back() = 0.0;
  return u;
}

ProblemSetup make_setup(const SetupOptions& o) {
  if (!(o.R > 0.0)) throw std::invalid_argument("geometry.R: must be > 0");
  if (o.n < 1) throw std::invalid_argument("geometry.n: must be >= 1");
  const double vol = unit_ball_volume(o.n) * std::pow(o.R, o.n);
  if (!(o.V0 > 0.0 && o.V0 < vol))
    throw std::invalid_argument("geometry.V0: must lie in (0, Vol(Omega))");
  const double rs = std::pow(o.V0 / unit_ball_volume(o.n), 1.0 / o.n);
  ProblemSetup s;
  s.grid = build_radial_grid(o.R, o.M, o.n, rs);
  s.tgrid = TimeGrid(o.T, o.N, o.theta);
  s.spec.V0 = s.grid->ball_volume(s.grid->star_radius());
  s.eps = o.eps;
  s.u0_amplitude = o.u0_amplitude;
  s.u0 = parabolic_initial_state(s.grid, o.u0_amplitude);
  s.K = o.K;
  s.L = o.L;
  s.validate();
  return s;
}

double angular_factor(const RadialGrid& grid, int k) {
  if (k == 0) return grid.sphere_area();
  if (grid.dimension() != 2) throw std::invalid_argument("angular channels need n = 2");
  return std::numbers::pi;
}

// ---------------------------------------------------------------- state

std::vector<ModeField> solve_state(const Control& f, const ProblemSetup& s) {
  check_slices(f, s);
  std::vector<ModeField> out;
  bool has_radial = false;
  for (const auto& ch : f.channels) {
    ModalProblem p;
    p.k = ch.k;
    p.grid = s.grid;
    p.tgrid = s.tgrid;
    p.source = ch.slices;
    if (ch.k == 0 && !ch.sine) {
      has_radial = true;
      p.data = s.u0;
    }
    out.push_back({ch.k, ch.sine, solve_forward(p)});
  }
  if (!has_radial) {
    ModalProblem p;
    p.grid = s.grid;
    p.tgrid = s.tgrid;
    p.data = s.u0;
    out.insert(out.begin(), ModeField{0, false, solve_forward(p)});
  }
  return out;
}

double objective_from_state(const std::vector<ModeField>& u, const ProblemSetup& s, double eps) {
  double J = 0.0;
  const int N = s.tgrid.N;
  for (const auto& m : u) {
    double e = 0.5 * space_time_inner(m.field, m.field);
    if (eps != 0.0) e += 0.5 * eps * weighted_dot(*s.grid, m.field.row(N), m.field.row(N));
    J += angular_factor(*s.grid, m.k) * e;
  }
  return J;
}

double evaluate_jt(const Control& f, const ProblemSetup& s) {
  return objective_from_state(solve_state(f, s), s, 0.0);
}

double evaluate_jt_eps(const Control& f, const ProblemSetup& s) {
  return objective_from_state(solve_state(f, s), s, s.eps);
}

// ---------------------------------------------------------------- switch

const ModeField* Switch::mode(int k, bool sine) const {
  for (const auto& m : p)
    if (m.k == k && m.sine == sine) return &m;
  return nullptr;
}

RadialField Switch::radial_psi() const {
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i].k == 0 && !p[i].sine) return Psi[i];
  return RadialField(p.empty() ? GridPtr() : p.front().field.grid);
}

Switch switch_from_state(const std::vector<ModeField>& u, const ProblemSetup& s) {
  Switch sw;
  const int N = s.tgrid.N;
  for (const auto& m : u) {
    ModalProblem p;
    p.k = m.k;
    p.grid = s.grid;
    p.tgrid = s.tgrid;
    p.source = rows_of(m.field);
    if (s.eps != 0.0) {
      p.data = m.field.slice(N);
      for (auto& v : p.data.values) v *= s.eps;
    }
    sw.p.push_back({m.k, m.sine, solve_switch(p)});
    sw.Psi.push_back(time_integral(sw.p.back().field));
  }
  return sw;
}

Switch adjoint_switch(const Control& f, const ProblemSetup& s) {
  return switch_from_state(solve_state(f, s), s);
}

double pair_with_switch(const Control& h, const Switch& sw, const ProblemSetup& s) {
  check_slices(h, s);
  double g = 0.0;
  for (const auto& ch : h.channels) {
    const auto* p = sw.mode(ch.k, ch.sine);
    if (!p) continue;  // u_f has no such channel, so neither has p_f
    g += angular_factor(*s.grid, ch.k) * pair_source(ch.slices, p->field);
  }
  return g;
}

double gateaux(const Control& f, const Control& h, const ProblemSetup& s) {
  check_slices(h, s);
  const double tol = 1e-8 * std::max(1.0, s.grid->volume());
  for (int m = 0; m < h.n_slices; ++m)
    if (std::abs(h.mass(m)) > tol)
      throw std::invalid_argument("gateaux: direction is not mass-free at slice " +
                                  std::to_string(m));
  return pair_with_switch(h, adjoint_switch(f, s), s);
}

ExpansionCheck quadratic_expansion_check(const Control& f, const Control& h,
                                         const ProblemSetup& s) {
  ExpansionCheck c;
  const auto u = solve_state(f, s);
  c.j_f = objective_from_state(u, s, s.eps);
  c.j_fh = evaluate_jt_eps(combine(1.0, f, 1.0, h), s);
  c.first = pair_with_switch(h, switch_from_state(u, s), s);
  ProblemSetup lin = s;
  lin.u0 = RadialField();
  c.curvature = 2.0 * objective_from_state(solve_state(h, lin), lin, s.eps);
  c.residual = std::abs(c.j_fh - c.j_f - c.first - 0.5 * c.curvature);
  c.relative = c.residual / std::max(std::abs(c.j_f), std::numeric_limits<double>::min());
  return c;
}

// ---------------------------------------------------------------- deficits

Reference compute_reference(const ProblemSetup& s) {
  s.validate();
  Reference ref;
  ref.fstar = ball_control(s.grid);
  auto u = solve_state(ref.fstar, s);
  ref.J = objective_from_state(u, s, s.eps);
  auto sw = switch_from_state(u, s);
  ref.u = std::move(u[0].field);
  ref.p = std::move(sw.p[0].field);
  ref.Psi = std::move(sw.Psi[0]);
  const double rs = s.grid->star_radius();
  for (int m = 0; m <= s.tgrid.N; ++m)
    ref.weight.push_back(-0.5 * (normal_derivative_at(ref.p, m, rs, Side::inner) +
                                 normal_derivative_at(ref.p, m, rs, Side::outer)));
  return ref;
}

double distance_to_ball(const Control& f, int m, const Control& fstar, int L) {
  return l1_distance(f, m, fstar, 0, L);
}

namespace {

bool same_geometry(const Shape& a, const Shape& b) {
  return a.kind == b.kind && a.steps.breaks == b.steps.breaks && a.steps.values == b.steps.values &&
         a.cx == b.cx && a.cy == b.cy && a.rho == b.rho && a.base == b.base && a.tau == b.tau &&
         a.coeffs.alpha == b.coeffs.alpha && a.coeffs.beta == b.coeffs.beta;
}

}  // namespace

DeficitReport deficit_ti(const Control& f, const ProblemSetup& s, const Reference* ref) {
  if (s.eps != 0.0) throw std::invalid_argument("deficit_ti: needs eps = 0");
  if (f.time_dependent()) throw std::invalid_argument("deficit_ti: control depends on time");
  std::optional<Reference> own;
  if (!ref) ref = &own.emplace(compute_reference(s));
  DeficitReport r;
  r.family = f.family;
  r.params = f.label;
  r.delta = distance_to_ball(f, 0, ref->fstar, s.L);
  if (!(r.delta > 1e-10)) throw std::invalid_argument("deficit_ti: competitor coincides with f*");
  r.j_star = ref->J;
  r.j_f = evaluate_jt(f, s);
  r.deficit = r.j_star - r.j_f;
  r.l1_sq = r.delta * r.delta;
  r.ratio = r.deficit / r.l1_sq;
  return r;
}

DeficitReport deficit_td(const Control& f, const ProblemSetup& s, const Reference* ref) {
  if (!(s.eps > 0.0)) throw std::invalid_argument("deficit_td: needs eps > 0");
  check_slices(f, s);
  std::optional<Reference> own;
  if (!ref) ref = &own.emplace(compute_reference(s));
  DeficitReport r;
  r.family = f.family;
  r.params = f.label;
  const auto c = s.tgrid.weights();
  r.weight_min = *std::min_element(ref->weight.begin(), ref->weight.end());
  double prev = -1.0;
  const Shape* prev_shape = nullptr;
  for (int m = 0; m <= s.tgrid.N; ++m) {
    const int mf = f.n_slices == 1 ? 0 : m;
    double d;
    const Shape* sh = f.shape(mf);
    if (prev >= 0.0 && (f.n_slices == 1 || (sh && prev_shape && same_geometry(*sh, *prev_shape))))
      d = prev;
    else
      d = distance_to_ball(f, mf, ref->fstar, s.L);
    prev = d;
    prev_shape = sh;
    r.delta = std::max(r.delta, d);
    r.l1_sq += c[static_cast<size_t>(m)] * ref->weight[static_cast<size_t>(m)] * d * d;
  }
  if (!(r.delta > 1e-10)) throw std::invalid_argument("deficit_td: competitor coincides with f*");
  r.j_star = ref->J;
  r.j_f = evaluate_jt_eps(f, s);
  r.deficit = r.j_star - r.j_f;
  r.ratio = r.deficit / r.l1_sq;
  return r;
}

std::string DeficitReport::csv_header() {
  return "competitor_id,family,delta_or_params,deficit,l1_sq,weight_min,ratio";
}

std::string DeficitReport::csv_row() const {
  return csv_field(id) + "," + csv_field(family) + "," + csv_field(params) + "," + num(deficit) +
         "," + num(l1_sq) + "," + num(weight_min) + "," + num(ratio);
}

std::string DeficitReport::to_json(const ProblemSetup& s) const {
  json j;
  j["competitor_id"] = id;
  j["family"] = family;
  j["params"] = params;
  j["delta"] = delta;
  j["J_f"] = j_f;
  j["J_star"] = j_star;
  j["deficit"] = deficit;
  j["l1_sq"] = l1_sq;
  j["weight_min"] = weight_min;
  j["ratio"] = ratio;
  j["setup_hash"] = s.hash();
  j["grid"] = {{"M", s.grid->intervals()}, {"N", s.tgrid.N}};
  return j.dump();
}

}  // namespace piso
