#include "piso/radial_pde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace piso {

SpaceTimeField::SpaceTimeField(GridPtr g, const TimeGrid& t, int k)
    : grid(std::move(g)), tgrid(t), mode(k),
      values(size_t(t.N + 1) * size_t(grid->size()), 0.0) {}

RadialField SpaceTimeField::slice(int m) const {
  auto r = row(m);
  return RadialField(grid, std::vector<double>(r.begin(), r.end()));
}

double SpaceTimeField::min() const { return *std::min_element(values.begin(), values.end()); }
double SpaceTimeField::max() const { return *std::max_element(values.begin(), values.end()); }

namespace {

// Symmetric tridiagonal matrix on the unknown block [lo, M-1].
struct Tridiag {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i+1
};

// Stiffness plus mode term, restricted to the unknowns of mode k.
Tridiag stiffness(const RadialGrid& g, int k, int lo) {
  const int M = g.intervals();
  const int n = g.dimension();
  const double h = g.spacing();
  const int size = M - lo;
  Tridiag A{std::vector<double>(size, 0.0), std::vector<double>(std::max(size - 1, 0), 0.0)};
  auto flux = [&](int c) {
    return (std::pow(g.node(c + 1), n) - std::pow(g.node(c), n)) / (n * h * h);
  };
  for (int j = lo; j < M; ++j) {
    const int i = j - lo;
    A.diag[i] = flux(j) + (j > 0 ? flux(j - 1) : 0.0);
    if (k > 0) {
      const double r = g.node(j);
      A.diag[i] += double(k) * (k + n - 2) * g.weight(j) / (r * r);
    }
    if (i + 1 < size) A.off[i] = -flux(j);
  }
  return A;
}

// Thomas factorisation, reused for every step.
class TridiagSolver {
 public:
  explicit TridiagSolver(const Tridiag& T) : off_(T.off) {
    const size_t n = T.diag.size();
    inv_.resize(n);
    lower_.resize(n);
    double d = T.diag[0];
    if (d == 0.0) throw std::runtime_error("tridiagonal solve: zero pivot");
    inv_[0] = 1.0 / d;
    for (size_t i = 1; i < n; ++i) {
      lower_[i] = T.off[i - 1] * inv_[i - 1];
      d = T.diag[i] - lower_[i] * T.off[i - 1];
      if (d == 0.0 || !std::isfinite(d)) throw std::runtime_error("tridiagonal solve: zero pivot");
      inv_[i] = 1.0 / d;
    }
  }

  void solve(std::vector<double>& x) const {
    const size_t n = x.size();
    for (size_t i = 1; i < n; ++i) x[i] -= lower_[i] * x[i - 1];
    x[n - 1] *= inv_[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = (x[i] - off_[i] * x[i + 1]) * inv_[i];
  }

 private:
  std::vector<double> off_;
  std::vector<double> inv_;
  std::vector<double> lower_;
};

// Everything needed to march one mode.
struct Stepper {
  const RadialGrid& g;
  int lo;
  int size;
  double dt;
  double theta;
  std::vector<double> W;
  Tridiag A;
  TridiagSolver B;

  static Tridiag left_matrix(const std::vector<double>& W, const Tridiag& A, double dt,
                             double theta) {
    Tridiag B = A;
    for (size_t i = 0; i < B.diag.size(); ++i) B.diag[i] = W[i] / dt + theta * A.diag[i];
    for (auto& o : B.off) o *= theta;
    return B;
  }

  Stepper(const RadialGrid& grid, int k, const TimeGrid& t)
      : g(grid), lo(k == 0 ? 0 : 1), size(grid.intervals() - lo), dt(t.dt()), theta(t.theta),
        W(weights(grid, lo)), A(stiffness(grid, k, lo)), B(left_matrix(W, A, dt, theta)) {}

  static std::vector<double> weights(const RadialGrid& g, int lo) {
    std::vector<double> W(size_t(g.intervals() - lo));
    for (size_t i = 0; i < W.size(); ++i) W[i] = g.weight(int(i) + lo);
    return W;
  }

  // y = (W/dt - (1-theta) A) x
  void apply_right(const std::vector<double>& x, std::vector<double>& y) const {
    const double a = 1.0 - theta;
    for (int i = 0; i < size; ++i) {
      double v = (W[i] / dt - a * A.diag[i]) * x[i];
      if (i > 0) v -= a * A.off[i - 1] * x[i - 1];
      if (i + 1 < size) v -= a * A.off[i] * x[i + 1];
      y[i] = v;
    }
  }

  void gather(std::span<const double> full, std::vector<double>& x) const {
    for (int i = 0; i < size; ++i) x[i] = full[size_t(i + lo)];
  }
  void scatter(const std::vector<double>& x, std::span<double> full) const {
    for (int i = 0; i < size; ++i) full[size_t(i + lo)] = x[i];
  }
};

void check_problem(const ModalProblem& p) {
  if (!p.grid) throw std::invalid_argument("modal problem: missing grid");
  if (p.k < 0) throw std::invalid_argument("modal problem: negative mode");
  const size_t ns = p.source.size();
  if (ns != 0 && ns != 1 && ns != size_t(p.tgrid.N + 1))
    throw std::invalid_argument("modal problem: source needs 0, 1 or N+1 slices");
  for (const auto& s : p.source) {
    if (!s.grid || !s.grid->same_as(*p.grid) || s.size() != p.grid->size())
      throw std::invalid_argument("modal problem: source on a different grid");
  }
  if (!p.data.values.empty() && (!p.data.grid || !p.data.grid->same_as(*p.grid)))
    throw std::invalid_argument("modal problem: data on a different grid");
}

// Source density at time m including the jump, on the full node range.
class SourceView {
 public:
  explicit SourceView(const ModalProblem& p) : p_(p), jump_(size_t(p.grid->size()), 0.0) {
    if (p.jump_strength != 0.0) {
      const auto& g = *p.grid;
      const int js = g.star_index();
      jump_[size_t(js)] =
          std::pow(g.star_radius(), g.dimension() - 1) * p.jump_strength / g.weight(js);
      has_jump_ = true;
    }
  }
  bool empty() const { return p_.source.empty() && !has_jump_; }
  double operator()(int m, int j) const {
    double v = has_jump_ ? jump_[size_t(j)] : 0.0;
    if (!p_.source.empty()) {
      const auto& s = p_.source.size() == 1 ? p_.source[0] : p_.source[size_t(m)];
      v += s[j];
    }
    return v;
  }

 private:
  const ModalProblem& p_;
  std::vector<double> jump_;
  bool has_jump_ = false;
};

}  // namespace

SpaceTimeField solve_forward(const ModalProblem& p) {
  check_problem(p);
  const auto& g = *p.grid;
  const int N = p.tgrid.N;
  Stepper st(g, p.k, p.tgrid);
  SourceView src(p);
  SpaceTimeField u(p.grid, p.tgrid, p.k);
  if (!p.data.values.empty()) {
    for (int i = 0; i < st.size; ++i) u.at(0, i + st.lo) = p.data[i + st.lo];
  }
  std::vector<double> x(size_t(st.size)), y(size_t(st.size));
  st.gather(u.row(0), x);
  for (int m = 0; m < N; ++m) {
    st.apply_right(x, y);
    if (!src.empty()) {
      for (int i = 0; i < st.size; ++i) {
        const int j = i + st.lo;
        y[i] += st.W[i] * (st.theta * src(m + 1, j) + (1.0 - st.theta) * src(m, j));
      }
    }
    st.B.solve(y);
    std::swap(x, y);
    st.scatter(x, u.row(m + 1));
  }
  return u;
}

SpaceTimeField solve_backward(const ModalProblem& p) {
  check_problem(p);
  const auto& g = *p.grid;
  const int N = p.tgrid.N;
  const auto c = p.tgrid.weights();
  Stepper st(g, p.k, p.tgrid);
  SourceView src(p);
  SpaceTimeField lam(p.grid, p.tgrid, p.k);
  std::vector<double> x(size_t(st.size), 0.0), y(size_t(st.size));
  for (int i = 0; i < st.size; ++i) {
    const int j = i + st.lo;
    x[i] = (p.data.values.empty() ? 0.0 : p.data[j]) + (src.empty() ? 0.0 : c[N] * src(N, j));
  }
  st.scatter(x, lam.row(N));
  for (int m = N - 1; m >= 0; --m) {
    // R = B^{-1} C is W-self-adjoint, so the costate recursion uses R itself
    st.apply_right(x, y);
    st.B.solve(y);
    if (!src.empty()) {
      for (int i = 0; i < st.size; ++i) y[i] += c[m] * src(m, i + st.lo);
    }
    std::swap(x, y);
    st.scatter(x, lam.row(m));
  }
  return lam;
}

SpaceTimeField switch_from_costate(const SpaceTimeField& lam) {
  const auto& g = *lam.grid;
  const int N = lam.tgrid.N;
  const double theta = lam.tgrid.theta;
  const auto d = lam.tgrid.weights();
  Stepper st(g, lam.mode, lam.tgrid);
  // mu^m = B^{-1} W lambda^m for m >= 1
  SpaceTimeField mu(lam.grid, lam.tgrid, lam.mode);
  std::vector<double> x(size_t(st.size));
  for (int m = 1; m <= N; ++m) {
    st.gather(lam.row(m), x);
    for (int i = 0; i < st.size; ++i) x[i] *= st.W[i];
    st.B.solve(x);
    st.scatter(x, mu.row(m));
  }
  SpaceTimeField p(lam.grid, lam.tgrid, lam.mode);
  for (int m = 0; m <= N; ++m) {
    for (int j = st.lo; j < g.intervals(); ++j) {
      double acc = 0.0;
      if (m >= 1) acc += theta * mu.at(m, j);
      if (m <= N - 1) acc += (1.0 - theta) * mu.at(m + 1, j);
      p.at(m, j) = acc / d[size_t(m)];
    }
  }
  return p;
}

SpaceTimeField solve_switch(const ModalProblem& p) {
  return switch_from_costate(solve_backward(p));
}

SpaceTimeField solve_jump_forward(int k, GridPtr grid, const TimeGrid& tgrid) {
  if (k < 1) throw std::invalid_argument("jump problem: mode must be >= 1");
  ModalProblem p;
  p.k = k;
  p.grid = std::move(grid);
  p.tgrid = tgrid;
  p.jump_strength = 1.0;
  return solve_forward(p);
}

double normal_derivative_at(const SpaceTimeField& F, int t_index, double r, Side side) {
  const auto& g = *F.grid;
  const double h = g.spacing();
  const int j = static_cast<int>(std::lround(r / h));
  if (std::abs(g.node(j) - r) > 1e-12 * std::max(1.0, g.radius()))
    throw std::invalid_argument("normal_derivative_at: r is not a grid node");
  if (t_index < 0 || t_index > F.tgrid.N) throw std::out_of_range("normal_derivative_at: time index");
  const int M = g.intervals();
  auto v = [&](int i) { return F.at(t_index, i); };
  switch (side) {
    case Side::inner:
      if (j < 2) throw std::invalid_argument("normal_derivative_at: not enough inner nodes");
      return (3.0 * v(j) - 4.0 * v(j - 1) + v(j - 2)) / (2.0 * h);
    case Side::outer:
      if (j + 2 > M) throw std::invalid_argument("normal_derivative_at: not enough outer nodes");
      return (-3.0 * v(j) + 4.0 * v(j + 1) - v(j + 2)) / (2.0 * h);
    case Side::centered:
      if (j < 1 || j + 1 > M) throw std::invalid_argument("normal_derivative_at: not enough nodes");
      return (v(j + 1) - v(j - 1)) / (2.0 * h);
  }
  return 0.0;
}

double recovered_flux_jump(const SpaceTimeField& F, int t_index) {
  if (t_index < 1 || t_index > F.tgrid.N)
    throw std::out_of_range("recovered_flux_jump: need 1 <= t_index <= N");
  const double th = F.tgrid.theta;
  SpaceTimeField level(F.grid, TimeGrid(F.tgrid.dt(), 1, th), F.mode);
  for (int j = 0; j < F.nodes(); ++j)
    level.at(0, j) = th * F.at(t_index, j) + (1.0 - th) * F.at(t_index - 1, j);
  const double rs = F.grid->star_radius();
  return normal_derivative_at(level, 0, rs, Side::outer) -
         normal_derivative_at(level, 0, rs, Side::inner);
}

RadialField time_integral(const SpaceTimeField& F) {
  const auto c = F.tgrid.weights();
  RadialField out(F.grid);
  for (int m = 0; m <= F.tgrid.N; ++m) {
    for (int j = 0; j < F.nodes(); ++j) out[j] += c[size_t(m)] * F.at(m, j);
  }
  return out;
}

double weighted_dot(const RadialGrid& g, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (int j = 0; j < g.size(); ++j) s += g.weight(j) * a[size_t(j)] * b[size_t(j)];
  return s;
}

double space_time_inner(const SpaceTimeField& a, const SpaceTimeField& b) {
  require_same_grid(*a.grid, *b.grid);
  if (!(a.tgrid == b.tgrid)) throw std::invalid_argument("space_time_inner: time grids differ");
  const auto c = a.tgrid.weights();
  double s = 0.0;
  for (int m = 0; m <= a.tgrid.N; ++m) s += c[size_t(m)] * weighted_dot(*a.grid, a.row(m), b.row(m));
  return s;
}

double pair_source(std::span<const RadialField> h, const SpaceTimeField& p) {
  if (h.empty()) return 0.0;
  const auto c = p.tgrid.weights();
  double s = 0.0;
  for (int m = 0; m <= p.tgrid.N; ++m) {
    const auto& hm = h.size() == 1 ? h[0] : h[size_t(m)];
    s += c[size_t(m)] * weighted_dot(*p.grid, hm.values, p.row(m));
  }
  return s;
}

}  // namespace piso
