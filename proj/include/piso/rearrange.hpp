#pragma once

#include <vector>

#include "piso/geometry.hpp"

namespace piso {

/// Decreasing rearrangement as a step function of the volume variable
/// s = Vol(B(0,r)): value values[i] on [offsets[i], offsets[i] + measures[i]).
/// Built by sorting (value, measure) atoms, so it is equimeasurable with the
/// input by construction.
class LayerCake {
 public:
  LayerCake() = default;
  LayerCake(std::vector<double> values, std::vector<double> measures);

  std::size_t size() const { return values_.size(); }
  double value(std::size_t i) const { return values_[i]; }
  double measure(std::size_t i) const { return measures_[i]; }
  double total_measure() const { return offsets_.empty() ? 0.0 : offsets_.back(); }

  /// \int_0^s F, i.e. the integral of f^# over the centred ball of volume s.
  double top_mass(double s) const;
  /// \int (f^#)^p.
  double moment(double p) const;
  /// Vol({f^# > tau}).
  double volume_above(double tau) const;
  /// \int f^# g^#, merging both step functions.
  double inner(const LayerCake& other) const;

 private:
  std::vector<double> values_;
  std::vector<double> measures_;
  std::vector<double> offsets_;  // size()+1 cumulative measures
  std::vector<double> masses_;   // size()+1 cumulative value*measure
};

/// Node-lumped atoms: node j carries node_measure(j).
LayerCake layer_cake(const RadialField& f);
/// Polar samples: sample (j,l) carries node_measure(j)/L.
LayerCake layer_cake(const PolarField& f);

/// Refills the centred node shells from the layer cake: node j receives the
/// mean of f^# over its volume slot. Exact (nodewise) when the input is
/// already radial and nonincreasing.
RadialField refill_shells(const LayerCake& cake, GridPtr grid);

/// f^# of a nonnegative radial field. Throws on negative values.
RadialField decreasing_rearrangement(const RadialField& f);

/// f^# of a polar-sampled field (values above -1e-12 are clipped at 0).
/// Throws for L < 64 or negative values.
RadialField schwarz_2d(const PolarField& f);

struct PrecedesResult {
  bool holds = false;
  double worst_margin = 0.0;  // min_i (\int_{B_i} g - \int_{B_i} f^#)
  int worst_node = -1;
};

/// f \prec g on the discrete balls B_i = nodes 0..i: compares the top mass of
/// f of volume Vol(B_i) with the lumped mass of g on B_i. g should be radial
/// and nonincreasing; tol = 1e-6 Vol(Omega).
PrecedesResult precedes(const LayerCake& f, const RadialField& g);
PrecedesResult precedes(const RadialField& f, const RadialField& g);
PrecedesResult precedes(const PolarField& f, const RadialField& g);

/// \int f^# g^# - \int f g; nonnegative up to roundoff.
double check_hardy_littlewood(const RadialField& f, const RadialField& g);
double check_hardy_littlewood(const PolarField& f, const PolarField& g);

struct DistributionProfile {
  std::vector<double> thresholds;  // descending
  std::vector<double> measures;    // Vol({f > tau_i})
};

/// Distribution function at n_thresholds levels spread uniformly over
/// [min f, max f] (descending, both ends included).
DistributionProfile distribution(const RadialField& f, int n_thresholds);
DistributionProfile distribution(const PolarField& f, int n_thresholds);

}  // namespace piso
