#include "piso/shape_hessian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <stdexcept>

#include <json.hpp>

namespace piso {

namespace {

const Reference& ensure(const ProblemSetup& s, const Reference* ref, std::optional<Reference>& own) {
  return ref ? *ref : own.emplace(compute_reference(s));
}

void require_plane_eps0(const ProblemSetup& s, const char* what) {
  if (s.eps != 0.0) throw std::invalid_argument(std::string(what) + ": needs eps = 0");
  if (s.grid->dimension() != 2) throw std::invalid_argument(std::string(what) + ": needs n = 2");
}

std::vector<RadialField> rows(const SpaceTimeField& F) {
  std::vector<RadialField> out;
  for (int m = 0; m <= F.tgrid.N; ++m) out.push_back(F.slice(m));
  return out;
}

}  // namespace

SpectrumReport compute_spectrum(int K, const ProblemSetup& s, const Reference* ref) {
  require_plane_eps0(s, "compute_spectrum");
  if (K < 1) throw std::invalid_argument("compute_spectrum: need K >= 1");
  const auto& g = *s.grid;
  if (K * g.spacing() / g.star_radius() > 0.5)
    throw std::invalid_argument("compute_spectrum: K = " + std::to_string(K) +
                                " is under-resolved (K h / r* > 0.5)");
  std::optional<Reference> own;
  const auto& R = ensure(s, ref, own);
  const int js = g.star_index();
  const double rs = g.star_radius();
  const auto d = s.tgrid.weights();

  SpectrumReport rep;
  rep.r_star = rs;
  for (int m = 0; m <= s.tgrid.N; ++m)
    rep.dp_integral += d[static_cast<size_t>(m)] * normal_derivative_at(R.p, m, rs, Side::centered);

  SpaceTimeField y1, z1;
  for (int k = 1; k <= K; ++k) {
    auto y = solve_jump_forward(k, s.grid, s.tgrid);
    ModalProblem p;
    p.k = k;
    p.grid = s.grid;
    p.tgrid = s.tgrid;
    p.source = rows(y);
    auto z = solve_switch(p);
    double zi = 0.0;
    for (int m = 0; m <= s.tgrid.N; ++m) zi += d[static_cast<size_t>(m)] * z.at(m, js);
    rep.z_integral.push_back(zi);
    rep.omegas.push_back(zi + rep.dp_integral);
    if (k == 1) {
      rep.y1_min = y.min();
      rep.z1_min = z.min();
      y1 = std::move(y);
      z1 = std::move(z);
      rep.y_excess = rep.z_excess = -1e300;
      continue;
    }
    for (size_t i = 0; i < y.values.size(); ++i) {
      rep.y_excess = std::max(rep.y_excess, y.values[i] - y1.values[i]);
      rep.z_excess = std::max(rep.z_excess, z.values[i] - z1.values[i]);
    }
  }
  if (K == 1) rep.y_excess = rep.z_excess = 0.0;
  rep.omega1_negative = rep.omegas[0] < 0.0;
  rep.monotone_ok = true;
  for (size_t i = 1; i < rep.omegas.size(); ++i)
    rep.monotone_ok = rep.monotone_ok && rep.omegas[i] < rep.omegas[i - 1];
  rep.sign_ok = rep.y1_min >= -1e-8 && rep.z1_min >= -1e-8;
  rep.comparison_ok = rep.y_excess <= 1e-8 && rep.z_excess <= 1e-8;
  return rep;
}

std::string SpectrumReport::csv() const {
  std::string out = "k,omega_k,fd_error\n";
  char buf[96];
  for (size_t i = 0; i < omegas.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,", i + 1, omegas[i]);
    out += buf;
    if (i < fd_errors.size()) {
      std::snprintf(buf, sizeof buf, "%.17g", fd_errors[i]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string SpectrumReport::to_json() const {
  nlohmann::json j;
  j["omegas"] = omegas;
  j["dp_integral"] = dp_integral;
  j["r_star"] = r_star;
  j["y1_min"] = y1_min;
  j["z1_min"] = z1_min;
  j["y_excess"] = y_excess;
  j["z_excess"] = z_excess;
  j["omega1_negative"] = omega1_negative;
  j["monotone_ok"] = monotone_ok;
  j["sign_ok"] = sign_ok;
  j["comparison_ok"] = comparison_ok;
  j["fd_errors"] = fd_errors;
  return j.dump();
}

double lagrange_multiplier(const ProblemSetup& s, const Reference* ref) {
  require_plane_eps0(s, "lagrange_multiplier");
  std::optional<Reference> own;
  return -ensure(s, ref, own).Psi[s.grid->star_index()];
}

double criticality_check(const DeformationCoeffs& c, const ProblemSetup& s, const Reference* ref,
                         int L) {
  require_plane_eps0(s, "criticality_check");
  if ((!c.alpha.empty() && c.alpha[0] != 0.0) || (!c.beta.empty() && c.beta[0] != 0.0))
    throw std::invalid_argument("criticality_check: normal trace has a k = 0 component");
  std::optional<Reference> own;
  const auto& R = ensure(s, ref, own);
  const double rs = s.grid->star_radius();
  // Psi on the boundary circle from its polar samples; radial, so constant
  const double psi = R.Psi[s.grid->star_index()];
  double acc = 0.0;
  for (int l = 0; l < L; ++l) acc += c.value(PolarField::angle(l, L)) * psi;
  return acc * rs * 2.0 * std::numbers::pi / L;
}

double quadratic_form(const DeformationCoeffs& c, const SpectrumReport& sp) {
  if (c.max_mode() > sp.size())
    throw std::invalid_argument("quadratic_form: mode " + std::to_string(c.max_mode()) +
                                " beyond the spectrum");
  double q = 0.0;
  for (int k = 1; k <= c.max_mode(); ++k) {
    const double a = size_t(k) < c.alpha.size() ? c.alpha[size_t(k)] : 0.0;
    const double b = size_t(k) < c.beta.size() ? c.beta[size_t(k)] : 0.0;
    q += sp.omega(k) * (a * a + b * b);
  }
  return std::numbers::pi * sp.r_star * q;
}

double lagrangian_value(const Control& f, const ProblemSetup& s, const Reference* ref) {
  require_plane_eps0(s, "lagrangian_value");
  const Shape* sh = f.shape(0);
  if (!sh || !sh->star_shaped() || f.time_dependent())
    throw std::invalid_argument("lagrangian_value: needs a time-independent deformed ball");
  std::optional<Reference> own;
  const auto& R = ensure(s, ref, own);
  return evaluate_jt(f, s) - R.Psi[s.grid->star_index()] * sh->volume(2);
}

int fd_channel_count(int max_mode) { return std::max(16, 4 * max_mode); }

FdHessianResult fd_hessian_check(const DeformationCoeffs& c, const std::vector<double>& taus,
                                 const ProblemSetup& s, const SpectrumReport& sp,
                                 const Reference* ref) {
  require_plane_eps0(s, "fd_hessian_check");
  std::optional<Reference> own;
  const auto& R = ensure(s, ref, own);
  const int K = fd_channel_count(c.max_mode());
  FdHessianResult out;
  out.model = quadratic_form(c, sp);
  const double L0 = lagrangian_value(deformed_ball_control(0.0, c, s.spec, s.grid, K), s, &R);
  for (double tau : taus) {
    if (!(tau > 0.0)) throw std::invalid_argument("fd_hessian_check: tau must be > 0");
    const double lp = lagrangian_value(deformed_ball_control(tau, c, s.spec, s.grid, K), s, &R);
    const double lm = lagrangian_value(deformed_ball_control(-tau, c, s.spec, s.grid, K), s, &R);
    const double d2 = (lp + lm - 2.0 * L0) / (tau * tau);
    out.taus.push_back(tau);
    out.second_differences.push_back(d2);
    out.rel_errors.push_back(out.model != 0.0 ? std::abs(d2 - out.model) / std::abs(out.model)
                                              : std::abs(d2));
  }
  // sorted from coarse to fine, errors should not grow
  for (size_t i = 1; i < out.taus.size(); ++i)
    if (out.taus[i] < out.taus[i - 1] &&
        out.rel_errors[i] > 1.05 * out.rel_errors[i - 1] + 1e-4)
      out.monotone = false;
  return out;
}

}  // namespace piso
