#pragma once

#include <string>
#include <vector>

#include "piso/functionals.hpp"

namespace piso {

/// Second-order shape calculus at B* in the plane (eps = 0).
struct SpectrumReport {
  std::vector<double> omegas;      // omega_1..omega_K
  std::vector<double> z_integral;  // \int_0^T z_k(t, r*) dt
  double dp_integral = 0.0;        // \int_0^T dp/dr(t, r*) dt, shared by all modes
  double r_star = 0.0;

  double y1_min = 0.0;  // min y_1
  double z1_min = 0.0;  // min z_1
  double y_excess = 0.0;  // max over k >= 2 and nodes of y_k - y_1
  double z_excess = 0.0;  // max over k >= 2 and nodes of z_k - z_1

  bool omega1_negative = false;
  bool monotone_ok = false;  // omega strictly decreasing
  bool sign_ok = false;      // y_1, z_1 >= -1e-8
  bool comparison_ok = false;  // y_k <= y_1, z_k <= z_1 up to 1e-8

  std::vector<double> fd_errors;  // filled by callers that run FD checks

  int size() const { return static_cast<int>(omegas.size()); }
  double omega(int k) const { return omegas.at(static_cast<size_t>(k - 1)); }
  /// k,omega_k,fd_error
  std::string csv() const;
  std::string to_json() const;
};

/// y_k: jump problem, z_k: switch of the mode-k problem with source y_k,
/// omega_k = \int z_k(t, r*) + \int dp/dr(t, r*) with p the radial switch of
/// f*. Needs eps = 0, n = 2 and K h / r* <= 0.5.
SpectrumReport compute_spectrum(int K, const ProblemSetup& s, const Reference* ref = nullptr);

/// mu = -Psi*(r*).
double lagrange_multiplier(const ProblemSetup& s, const Reference* ref = nullptr);

/// First shape derivative at B* in the normal direction sum_k alpha_k cos +
/// beta_k sin, integrated over the discrete boundary circle. Throws if a
/// k = 0 component is present.
double criticality_check(const DeformationCoeffs& c, const ProblemSetup& s,
                         const Reference* ref = nullptr, int L = 1024);

/// pi r* sum_k omega_k (alpha_k^2 + beta_k^2): the second derivative of
/// tau -> L(B*_{tau Phi}) at 0. Throws if a mode exceeds the spectrum.
double quadratic_form(const DeformationCoeffs& c, const SpectrumReport& sp);

/// L(E) = J_T(E) - Psi*(r*) Vol(E), Vol the exact set volume.
double lagrangian_value(const Control& f, const ProblemSetup& s, const Reference* ref = nullptr);

/// Angular channels needed to resolve a deformation with top mode k.
int fd_channel_count(int max_mode);

struct FdHessianResult {
  std::vector<double> taus;
  std::vector<double> second_differences;  // [L(t) + L(-t) - 2 L(0)] / t^2
  std::vector<double> rel_errors;          // against model
  double model = 0.0;
  bool monotone = true;  // errors shrink as tau shrinks
};

/// Central second differences of the Lagrangian along deformed balls.
FdHessianResult fd_hessian_check(const DeformationCoeffs& c, const std::vector<double>& taus,
                                 const ProblemSetup& s, const SpectrumReport& sp,
                                 const Reference* ref = nullptr);

}  // namespace piso
