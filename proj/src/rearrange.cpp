#include "piso/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace piso {

LayerCake::LayerCake(std::vector<double> values, std::vector<double> measures) {
  if (values.size() != measures.size())
    throw std::invalid_argument("layer cake: values and measures differ in length");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  // ties keep input order
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  values_.reserve(order.size());
  measures_.reserve(order.size());
  for (auto i : order) {
    if (measures[i] < 0.0) throw std::invalid_argument("layer cake: negative measure");
    values_.push_back(values[i]);
    measures_.push_back(measures[i]);
  }
  offsets_.assign(values_.size() + 1, 0.0);
  masses_.assign(values_.size() + 1, 0.0);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    offsets_[i + 1] = offsets_[i] + measures_[i];
    masses_[i + 1] = masses_[i] + values_[i] * measures_[i];
  }
}

double LayerCake::top_mass(double s) const {
  if (values_.empty() || s <= 0.0) return 0.0;
  if (s >= offsets_.back()) return masses_.back();
  // first atom whose slot ends beyond s
  auto it = std::upper_bound(offsets_.begin() + 1, offsets_.end(), s);
  const std::size_t i = std::size_t(it - offsets_.begin()) - 1;
  return masses_[i] + values_[i] * (s - offsets_[i]);
}

double LayerCake::moment(double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += std::pow(values_[i], p) * measures_[i];
  return s;
}

double LayerCake::volume_above(double tau) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size() && values_[i] > tau; ++i) s += measures_[i];
  return s;
}

double LayerCake::inner(const LayerCake& o) const {
  double s = 0.0, pos = 0.0;
  std::size_t i = 0, k = 0;
  while (i < size() && k < o.size()) {
    const double end = std::min(offsets_[i + 1], o.offsets_[k + 1]);
    s += values_[i] * o.values_[k] * (end - pos);
    pos = end;
    if (offsets_[i + 1] <= pos) ++i;
    if (o.offsets_[k + 1] <= pos) ++k;
  }
  return s;
}

LayerCake layer_cake(const RadialField& f) {
  const auto& g = *f.grid;
  std::vector<double> m(size_t(g.size()));
  for (int j = 0; j < g.size(); ++j) m[j] = g.node_measure(j);
  return LayerCake(f.values, std::move(m));
}

LayerCake layer_cake(const PolarField& f) {
  const auto& g = *f.grid;
  std::vector<double> m(f.values.size());
  for (int j = 0; j < g.size(); ++j)
    for (int l = 0; l < f.L; ++l) m[size_t(j) * f.L + l] = f.cell_measure(j);
  return LayerCake(f.values, std::move(m));
}

RadialField refill_shells(const LayerCake& cake, GridPtr grid) {
  RadialField out(grid);
  double lo = 0.0;
  for (int j = 0; j < grid->size(); ++j) {
    const double m = grid->node_measure(j);
    const double hi = lo + m;
    out[j] = m > 0.0 ? (cake.top_mass(hi) - cake.top_mass(lo)) / m : 0.0;
    lo = hi;
  }
  return out;
}

namespace {

void require_nonnegative(const std::vector<double>& v, double clip, const char* what) {
  for (double x : v) {
    if (!(x >= -clip)) throw std::invalid_argument(std::string(what) + ": negative value");
  }
}

}  // namespace

RadialField decreasing_rearrangement(const RadialField& f) {
  require_nonnegative(f.values, 0.0, "decreasing_rearrangement");
  // a nonincreasing input is its own rearrangement; skip the refill roundoff
  if (std::is_sorted(f.values.rbegin(), f.values.rend())) return f;
  return refill_shells(layer_cake(f), f.grid);
}

RadialField schwarz_2d(const PolarField& f) {
  if (f.L < 64) throw std::invalid_argument("schwarz_2d: need at least 64 angular samples");
  require_nonnegative(f.values, 1e-12, "schwarz_2d");
  PolarField c = f;
  for (auto& v : c.values) v = std::max(v, 0.0);
  return refill_shells(layer_cake(c), f.grid);
}

PrecedesResult precedes(const LayerCake& f, const RadialField& g) {
  const auto& grid = *g.grid;
  const double tol = 1e-6 * grid.volume();
  PrecedesResult res;
  res.worst_margin = std::numeric_limits<double>::infinity();
  double vol = 0.0, mass = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    vol += grid.node_measure(j);
    mass += grid.node_measure(j) * g[j];
    const double margin = mass - f.top_mass(vol);
    if (margin < res.worst_margin) {
      res.worst_margin = margin;
      res.worst_node = j;
    }
  }
  res.holds = res.worst_margin >= -tol;
  return res;
}

PrecedesResult precedes(const RadialField& f, const RadialField& g) {
  require_same_grid(*f.grid, *g.grid);
  return precedes(layer_cake(f), g);
}

PrecedesResult precedes(const PolarField& f, const RadialField& g) {
  require_same_grid(*f.grid, *g.grid);
  return precedes(layer_cake(f), g);
}

double check_hardy_littlewood(const RadialField& f, const RadialField& g) {
  require_same_grid(*f.grid, *g.grid);
  require_nonnegative(f.values, 0.0, "check_hardy_littlewood");
  require_nonnegative(g.values, 0.0, "check_hardy_littlewood");
  double direct = 0.0;
  for (int j = 0; j < f.size(); ++j) direct += f.grid->node_measure(j) * f[j] * g[j];
  return layer_cake(f).inner(layer_cake(g)) - direct;
}

double check_hardy_littlewood(const PolarField& f, const PolarField& g) {
  require_same_grid(*f.grid, *g.grid);
  if (f.L != g.L) throw std::invalid_argument("check_hardy_littlewood: sample counts differ");
  require_nonnegative(f.values, 0.0, "check_hardy_littlewood");
  require_nonnegative(g.values, 0.0, "check_hardy_littlewood");
  double direct = 0.0;
  for (int j = 0; j < f.grid->size(); ++j)
    for (int l = 0; l < f.L; ++l) direct += f.cell_measure(j) * f.at(j, l) * g.at(j, l);
  return layer_cake(f).inner(layer_cake(g)) - direct;
}

namespace {

DistributionProfile distribution_of(const LayerCake& cake, int n) {
  if (n < 2) throw std::invalid_argument("distribution: need at least two thresholds");
  DistributionProfile d;
  if (cake.size() == 0) return d;
  const double hi = cake.value(0), lo = cake.value(cake.size() - 1);
  for (int i = 0; i < n; ++i) {
    const double tau = hi - (hi - lo) * i / (n - 1);
    d.thresholds.push_back(tau);
    d.measures.push_back(cake.volume_above(tau));
  }
  return d;
}

}  // namespace

DistributionProfile distribution(const RadialField& f, int n) {
  return distribution_of(layer_cake(f), n);
}

DistributionProfile distribution(const PolarField& f, int n) {
  return distribution_of(layer_cake(f), n);
}

}  // namespace piso
