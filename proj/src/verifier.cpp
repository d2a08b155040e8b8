#include "piso/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "piso/rearrange.hpp"

namespace piso {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const Reference& ensure(const ProblemSetup& s, const Reference* ref, std::optional<Reference>& own) {
  return ref ? *ref : own.emplace(compute_reference(s));
}

// centre shift of B(x0, r*) whose symmetric difference with B* is delta
double shift_for_asymmetry(double delta, double rs) {
  if (!(delta > 0.0) || delta >= 2.0 * std::numbers::pi * rs * rs)
    throw std::invalid_argument("shifted ball: asymmetry out of range");
  double lo = 0.0, hi = 2.0 * rs;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (disk_symmetric_difference(rs, rs, mid) < delta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string CheckResult::summary_line() const {
  std::string tag = informational ? "INFO" : (passed ? "PASS" : "FAIL");
  std::string line = tag + " " + name + " margin=" + fmt(margin);
  if (!details.empty()) line += " " + details;
  return line;
}

std::string CheckResult::to_json() const {
  nlohmann::json j;
  j["check_name"] = name;
  j["passed"] = passed;
  j["informational"] = informational;
  j["margin"] = margin;
  j["details"] = details;
  j["artifacts"] = artifacts;
  return j.dump();
}

// ---------------------------------------------------------------- monotonicity

CheckResult check_radial_monotonicity(const ProblemSetup& s, const Reference* ref) {
  if (!s.u0.values.empty())
    for (int j = 0; j + 1 < s.u0.size(); ++j)
      if (s.u0[j + 1] > s.u0[j])
        throw std::invalid_argument("check_radial_monotonicity: u0 is not nonincreasing");
  std::optional<Reference> own;
  const auto& R = ensure(s, ref, own);
  const double h = s.grid->spacing();
  CheckResult c;
  c.name = "radial_monotonicity";
  c.margin = std::numeric_limits<double>::infinity();
  int worst_m = 0, worst_j = 0;
  for (int m = 1; m <= s.tgrid.N; ++m)
    for (int j = 0; j < s.grid->intervals(); ++j) {
      const double d = (R.u.at(m, j) - R.u.at(m, j + 1)) / h;
      if (d < c.margin) {
        c.margin = d;
        worst_m = m;
        worst_j = j;
      }
    }
  c.passed = c.margin > 0.0;
  c.details = "worst at t=" + fmt(s.tgrid.time(worst_m)) + " r=" + fmt(s.grid->node(worst_j));
  return c;
}

CheckResult check_switch_nondegenerate(double eps, double y0, const ProblemSetup& s) {
  if (!(eps >= 0.0)) throw std::invalid_argument("check_switch_nondegenerate: eps must be >= 0");
  if (!(y0 > 0.0 && y0 < s.grid->star_radius()))
    throw std::invalid_argument("check_switch_nondegenerate: need 0 < y0 < r*");
  ProblemSetup se = s;
  se.eps = eps;
  const auto R = compute_reference(se);
  const double h = s.grid->spacing();
  CheckResult c;
  c.name = "switch_nondegenerate(eps=" + fmt(eps) + ")";
  c.margin = std::numeric_limits<double>::infinity();
  int worst_m = 0;
  int j0 = 0;
  while (s.grid->node(j0) < y0) ++j0;
  for (int m = 0; m <= s.tgrid.N; ++m)
    for (int j = j0; j < s.grid->intervals(); ++j) {
      const double d = (R.p.at(m, j) - R.p.at(m, j + 1)) / h;
      if (d < c.margin) {
        c.margin = d;
        worst_m = m;
      }
    }
  c.informational = eps == 0.0;
  c.passed = c.margin > 0.0;
  c.details = "y0=" + fmt(y0) + " worst at t=" + fmt(s.tgrid.time(worst_m)) +
              " min a(t)=" + fmt(*std::min_element(R.weight.begin(), R.weight.end()));
  return c;
}

// ---------------------------------------------------------------- Talenti

PolarField sample_state(const std::vector<ModeField>& u, int m, int L) {
  if (u.empty()) throw std::invalid_argument("sample_state: no modes");
  const auto grid = u.front().field.grid;
  PolarField out(grid, L);
  std::vector<double> trig(static_cast<size_t>(L));
  for (const auto& mode : u) {
    for (int l = 0; l < L; ++l) {
      const double t = PolarField::angle(l, L);
      trig[l] = mode.k == 0 ? 1.0 : (mode.sine ? std::sin(mode.k * t) : std::cos(mode.k * t));
    }
    for (int j = 0; j < grid->size(); ++j) {
      const double a = mode.field.at(m, j);
      if (a == 0.0) continue;
      for (int l = 0; l < L; ++l) out.at(j, l) += a * trig[l];
    }
  }
  return out;
}

CheckResult run_talenti_battery(const TalentiOptions& o, const ProblemSetup& s) {
  s.validate();
  if (o.n_times < 1) throw std::invalid_argument("talenti: need at least one time slice");
  const auto R = compute_reference(s);
  CheckResult c;
  c.name = "talenti";
  c.margin = std::numeric_limits<double>::infinity();
  const double tol = 1e-6 * s.grid->volume();
  int failures = 0, checks = 0;
  std::vector<int> slices;
  for (int i = 1; i <= o.n_times; ++i)
    slices.push_back(static_cast<int>(std::lround(double(s.tgrid.N) * i / o.n_times)));

  for (int i = 0; i < o.n_samples; ++i) {
    SampleRequest req;
    req.kind = i % 2 == 0 ? SampleKind::td_bangbang : SampleKind::moving_ball;
    req.K = s.K;
    auto f = sample_random_admissible(o.seed + std::uint64_t(i), req, s.spec, s.grid, s.tgrid);
    const auto u = solve_state(f, s);
    const bool radial = u.size() == 1;
    for (int m : slices) {
      PrecedesResult p = radial ? precedes(u[0].field.slice(m), R.u.slice(m))
                                : precedes(sample_state(u, m, o.L), R.u.slice(m));
      c.margin = std::min(c.margin, p.worst_margin);
      ++checks;
      if (p.worst_margin < -tol) ++failures;
    }
  }
  // the optimum against itself
  double self = std::numeric_limits<double>::infinity();
  for (int m : slices) self = std::min(self, precedes(R.u.slice(m), R.u.slice(m)).worst_margin);

  // rearranging to f* strictly increases the cost
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double rs = s.grid->star_radius();
  const double reach = std::min(0.4 * rs, 0.9 * (s.grid->radius() - rs));
  int strict_fail = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < o.shifted; ++i) {
    const double rho = reach * (0.1 + 0.9 * U(rng)), phi = 2 * std::numbers::pi * U(rng);
    auto g = shifted_ball_control(rho * std::cos(phi), rho * std::sin(phi), s.spec, s.grid, s.K);
    const double gap = R.J - evaluate_jt_eps(g, s);
    worst_gap = std::min(worst_gap, gap);
    if (!(gap > 0.0)) ++strict_fail;
  }
  c.passed = failures == 0 && strict_fail == 0;
  c.details = std::to_string(checks) + " comparisons, " + std::to_string(failures) +
              " failed; self margin=" + fmt(self) + "; shifted balls J*-J min=" + fmt(worst_gap);
  return c;
}

// ---------------------------------------------------------------- sweeps

std::vector<double> default_delta_fractions() {
  std::vector<double> d;
  for (int i = 0; i < 10; ++i) d.push_back(std::pow(10.0, -3.0 + 2.0 * i / 9.0));
  return d;
}

std::vector<std::string> default_families(SweepKind kind) {
  if (kind == SweepKind::ti) return {"annulus", "shifted-ball", "bangbang"};
  return {"oscillating-annulus", "td-bangbang"};
}

std::string SweepResult::csv() const {
  std::string out = DeficitReport::csv_header() + "\n";
  for (const auto& r : rows) out += r.csv_row() + "\n";
  return out;
}

SweepResult sweep_deficit(SweepKind kind, const SweepOptions& o, const ProblemSetup& s_in) {
  ProblemSetup s = s_in;
  if (kind == SweepKind::td && !(s.eps > 0.0))
    throw std::invalid_argument("sweep_deficit: the time-dependent sweep needs eps > 0");
  if (kind == SweepKind::ti) s.eps = 0.0;  // the time-independent theorem has no terminal term
  s.validate();
  const auto families = o.families.empty() ? default_families(kind) : o.families;
  const auto deltas = o.deltas.empty() ? default_delta_fractions() : o.deltas;
  for (const auto& fam : families) {
    const auto known = default_families(kind);
    if (std::find(known.begin(), known.end(), fam) == known.end())
      throw std::invalid_argument("sweep_deficit: unknown family '" + fam + "'");
  }
  const auto ref = compute_reference(s);
  const double V0 = s.spec.V0;
  SweepResult out;
  std::mt19937_64 angle_rng(o.seed);
  std::uniform_real_distribution<double> U(0.0, 2.0 * std::numbers::pi);

  auto run = [&](const std::string& fam, double frac, auto&& make) {
    try {
      const Control f = make();
      DeficitReport r = kind == SweepKind::ti ? deficit_ti(f, s, &ref) : deficit_td(f, s, &ref);
      r.id = std::to_string(out.rows.size());
      r.family = fam;
      r.params = "delta/V0=" + fmt(frac) + (f.label.empty() ? "" : "," + f.label);
      out.rows.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      out.notes.push_back(fam + " delta/V0=" + fmt(frac) + " skipped: " + e.what());
    }
  };

  for (const auto& fam : families) {
    for (size_t i = 0; i < deltas.size(); ++i) {
      const double frac = deltas[i], delta = frac * V0;
      const std::uint64_t base = o.seed * 1000003ull + 1000ull * i;
      if (fam == "annulus") {
        run(fam, frac, [&] { return annulus_control(delta, s.spec, s.grid); });
      } else if (fam == "shifted-ball") {
        const double phi = U(angle_rng);
        run(fam, frac, [&] {
          const double d = shift_for_asymmetry(delta, s.grid->star_radius());
          return shifted_ball_control(d * std::cos(phi), d * std::sin(phi), s.spec, s.grid, s.K);
        });
      } else if (fam == "bangbang") {
        for (int k = 0; k < o.bangbang_per_delta; ++k)
          run(fam, frac, [&] {
            SampleRequest req;
            req.delta0 = delta;
            return sample_random_admissible(base + k, req, s.spec, s.grid);
          });
      } else if (fam == "oscillating-annulus") {
        for (int m : o.oscillations)
          run(fam, frac, [&] {
            SampleRequest req;
            req.kind = SampleKind::oscillating_annulus;
            req.delta0 = delta;
            req.m = m;
            return sample_random_admissible(base, req, s.spec, s.grid, s.tgrid);
          });
      } else if (fam == "td-bangbang") {
        for (int k = 0; k < o.td_bangbang_per_delta; ++k)
          run(fam, frac, [&] {
            SampleRequest req;
            req.kind = SampleKind::td_bangbang;
            req.delta0 = delta;
            return sample_random_admissible(base + k, req, s.spec, s.grid, s.tgrid);
          });
      }
    }
  }

  bool ok = !out.rows.empty();
  double min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& fam : families) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : out.rows)
      if (r.family == fam) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
      }
    if (!std::isfinite(lo)) continue;
    out.min_ratio[fam] = lo;
    out.spread[fam] = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    ok = ok && lo > 0.0 && out.spread[fam] <= o.max_spread;
    min_ratio = std::min(min_ratio, lo);
  }
  auto& c = out.check;
  c.name = kind == SweepKind::ti ? "deficit_sweep_ti" : "deficit_sweep_td";
  c.margin = out.rows.empty() ? 0.0 : min_ratio;
  c.passed = ok;
  c.details = std::to_string(out.rows.size()) + " competitors";
  for (const auto& [fam, sp] : out.spread) c.details += "; " + fam + " spread=" + fmt(sp);
  if (!out.notes.empty()) c.details += "; " + std::to_string(out.notes.size()) + " skipped";
  return out;
}

// ---------------------------------------------------------------- optimizer

OptimizeResult optimize_fixed_point(const Control& start, const ProblemSetup& s, int max_iter,
                                    double tol) {
  s.validate();
  if (start.time_dependent() || start.representation() == Representation::modal)
    throw std::invalid_argument("optimize_fixed_point: needs a radial time-independent start");
  if (!is_admissible(start, s.spec, 1e-8))
    throw std::invalid_argument("optimize_fixed_point: start is not admissible");
  const auto fstar = ball_control(s.grid);
  const double vol = s.grid->volume();
  ProblemSetup lin = s;
  lin.u0 = RadialField();

  OptimizeResult res;
  Control f = radial_control(start.radial_slice(0), "iterate");
  auto u = solve_state(f, s);
  res.objective.push_back(objective_from_state(u, s, s.eps));
  res.distance.push_back(l1_distance(f.radial_slice(0), fstar.radial_slice(0)));
  for (int it = 0; it < max_iter; ++it) {
    const auto sw = switch_from_state(u, s);
    const auto g = bathtub_maximizer(sw.radial_psi(), s.spec).control;
    const auto d = combine(1.0, g, -1.0, f);
    const double G = pair_with_switch(d, sw, s);
    const double Q = 2.0 * objective_from_state(solve_state(d, lin), lin, s.eps);
    // maximise G t + Q t^2 / 2 over [0, 1]; ties go to the full step
    double step = G + 0.5 * Q >= 0.0 ? 1.0 : 0.0;
    if (Q < 0.0) {
      const double t = -G / Q;
      if (t > 0.0 && t < 1.0 && G * t + 0.5 * Q * t * t > std::max(0.0, G + 0.5 * Q)) step = t;
    }
    res.steps.push_back(step);
    ++res.iterations;
    if (step == 0.0) break;
    f = radial_control(combine(1.0, f, step, d).radial_slice(0), "iterate");
    u = solve_state(f, s);
    res.objective.push_back(objective_from_state(u, s, s.eps));
    res.distance.push_back(l1_distance(f.radial_slice(0), fstar.radial_slice(0)));
    const size_t n = res.objective.size();
    if (res.objective[n - 1] < res.objective[n - 2] - 1e-12 * std::abs(res.objective[n - 2]))
      res.monotone = false;
    if (res.distance.back() < tol * vol) {
      res.converged = true;
      break;
    }
    bool moved = false;
    for (double v : d.radial_slice(0).values) moved = moved || v != 0.0;
    if (!moved) break;  // fixed point away from f*
  }
  res.final = f;
  return res;
}

// ---------------------------------------------------------------- penalized

CheckResult check_penalized_optimality(double delta, int n_random, const ProblemSetup& s,
                                       std::uint64_t seed) {
  s.validate();
  CheckResult c;
  c.name = "penalized_optimality(delta/V0=" + fmt(delta / s.spec.V0) + ")";
  const double Ja = evaluate_jt_eps(annulus_control(delta, s.spec, s.grid), s);
  c.margin = std::numeric_limits<double>::infinity();
  int losses = 0;
  for (int i = 0; i < n_random; ++i) {
    SampleRequest req;
    req.kind = i % 4 == 3 ? SampleKind::bangbang_radial : SampleKind::td_bangbang;
    req.delta0 = delta;
    req.fixed_delta = true;
    req.delta_opts.anywhere = i % 2 == 0;
    req.delta_opts.bang_bang = i % 3 != 0;
    Control g;
    if (delta == 0.0) {
      g = ball_control(s.grid);
    } else {
      g = sample_random_admissible(seed + std::uint64_t(i), req, s.spec, s.grid, s.tgrid);
    }
    const double gap = (Ja - evaluate_jt_eps(g, s)) / std::abs(Ja);
    c.margin = std::min(c.margin, gap);
    if (gap < -1e-9) ++losses;
  }
  c.passed = losses == 0;
  c.details = std::to_string(n_random) + " competitors, " + std::to_string(losses) + " beat A_delta";
  return c;
}

// ---------------------------------------------------------------- bathtub

CheckResult check_bathtub_dominance(int n_random, const ProblemSetup& s, std::uint64_t seed) {
  s.validate();
  const auto R = compute_reference(s);
  const auto best = bathtub_maximizer(R.Psi, s.spec);
  const auto g = best.control.radial_slice(0);
  auto lin = [&](const RadialField& f) {
    double v = 0.0;
    for (int j = 0; j < f.size(); ++j) v += s.grid->node_measure(j) * f[j] * R.Psi[j];
    return v;
  };
  const double lin_best = lin(g);
  const double J_best = evaluate_jt_eps(best.control, s);
  CheckResult c;
  c.name = "bathtub_dominance";
  c.margin = std::numeric_limits<double>::infinity();
  int losses = 0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < n_random; ++i) {
    Control f;
    SampleRequest req;
    switch (i % 3) {
      case 0:
        req.kind = SampleKind::smooth;
        f = sample_random_admissible(seed + std::uint64_t(i), req, s.spec, s.grid);
        break;
      case 1:
        req.delta_opts.anywhere = true;
        req.delta_opts.bang_bang = i % 2 == 0;
        f = sample_random_admissible(seed + std::uint64_t(i), req, s.spec, s.grid);
        break;
      default: {
        // nodal noise, projected
        RadialField raw(s.grid);
        for (auto& v : raw.values) v = 2.0 * U(rng) - 0.5;
        f = project_admissible(raw, s.spec);
      }
    }
    const double gl = (lin_best - lin(f.radial_slice(0))) / std::abs(lin_best);
    const double gj = (J_best - evaluate_jt_eps(f, s)) / std::abs(J_best);
    c.margin = std::min({c.margin, gl, gj});
    if (gl < -1e-9 || gj < -1e-9) ++losses;
  }
  c.passed = losses == 0 && !best.degenerate;
  c.details = std::to_string(n_random) + " competitors, " + std::to_string(losses) +
              " beat the bathtub set";
  return c;
}

}  // namespace piso
