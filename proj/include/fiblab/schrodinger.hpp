// Direct spectral route: finite Dirichlet restrictions of the Fibonacci
// Hamiltonian on l^2(Z),
//
//   [H psi](n) = psi(n+1) + psi(n-1) + V chi_[1-alpha,1)(n alpha + omega mod 1) psi(n),
//
// eigenvalue counting by Sturm pivots on the tridiagonal restriction, the
// integrated density of states, interval DOS masses, and local scaling
// exponents of the DOS.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fiblab/fit.hpp"
#include "fiblab/trace_map.hpp"

namespace fiblab {

// A requested DOS window contains no eigenvalues at the given system size.
struct EmptyWindow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Potential
// ---------------------------------------------------------------------------

/// Coupling and phase of the Fibonacci potential. alpha is the inverse golden
/// mean (sqrt(5)-1)/2, fixed for the whole family.
struct PotentialSpec {
  static constexpr double kAlpha = 0.61803398874989484820458683436563811772;

  double V = 0.0;
  double omega = 0.0;

  PotentialSpec() = default;
  PotentialSpec(double coupling, double phase) : V(coupling), omega(reduce_mod1(phase)) {}
};

/// Potential at site n: V when frac(n alpha + omega) lands in [1-alpha, 1).
inline double potential_value(const PotentialSpec& spec, std::int64_t n) {
  const double f = reduce_mod1(static_cast<double>(n) * PotentialSpec::kAlpha + spec.omega);
  return f >= 1.0 - PotentialSpec::kAlpha ? spec.V : 0.0;
}

// ---------------------------------------------------------------------------
// Eigenvalue counting
// ---------------------------------------------------------------------------

/// Number of eigenvalues of the L x L Dirichlet restriction (sites 1..L,
/// off-diagonal 1) strictly below E. Sturm pivot recursion
/// d_1 = v_1 - E, d_n = (v_n - E) - 1/d_{n-1}; the count is the number of
/// negative pivots. Near-zero pivots are replaced by sign-preserving 1e-14.
inline std::int64_t count_eigenvalues_below(const PotentialSpec& spec, std::int64_t L,
                                            double E) {
  if (L < 1) throw std::invalid_argument("count_eigenvalues_below: L must be >= 1");
  std::int64_t count = 0;
  double d = 1.0;
  for (std::int64_t n = 1; n <= L; ++n) {
    d = (potential_value(spec, n) - E) - (n == 1 ? 0.0 : 1.0 / d);
    if (std::abs(d) < 1e-14) d = d < 0.0 ? -1e-14 : 1e-14;
    if (d < 0.0) ++count;
  }
  return count;
}

/// m-th smallest eigenvalue (1-based) of the L x L restriction, located by
/// bisection on the Sturm count.
inline double eigenvalue_by_rank(const PotentialSpec& spec, std::int64_t L, std::int64_t m) {
  if (m < 1 || m > L) throw std::invalid_argument("eigenvalue_by_rank: need 1 <= m <= L");
  double lo = -2.0 - spec.V - 1.0;
  double hi = 2.0 + spec.V + 1.0;
  while (hi - lo > 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (count_eigenvalues_below(spec, L, mid) >= m)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Integrated density of states
// ---------------------------------------------------------------------------

/// Free (V=0) IDS: N_0(E) = arccos(-E/2)/pi on (-2,2), 0 below, 1 above.
inline double ids_free(double E) {
  if (E <= -2.0) return 0.0;
  if (E >= 2.0) return 1.0;
  return std::acos(-E / 2.0) / 3.14159265358979323846;
}

/// Sampled IDS curve at fixed (V, omega, L).
struct IdsEstimate {
  double V = 0.0;
  double omega = 0.0;
  std::int64_t L = 0;
  std::vector<std::pair<double, double>> samples;  // (E, N), N non-decreasing
};

inline IdsEstimate ids_estimate(const PotentialSpec& spec, std::int64_t L,
                                const std::vector<double>& energies) {
  if (L < 1) throw std::invalid_argument("ids_estimate: L must be >= 1");
  if (!std::is_sorted(energies.begin(), energies.end()))
    throw std::invalid_argument("ids_estimate: energies must be sorted");
  IdsEstimate out{spec.V, spec.omega, L, {}};
  out.samples.reserve(energies.size());
  for (const double E : energies) {
    out.samples.emplace_back(
        E, static_cast<double>(count_eigenvalues_below(spec, L, E)) / static_cast<double>(L));
  }
  return out;
}

/// DOS mass of (a, b): (count_below(b) - count_below(a)) / L.
inline double dos_interval(const PotentialSpec& spec, std::int64_t L, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("dos_interval: need a < b");
  return static_cast<double>(count_eigenvalues_below(spec, L, b) -
                             count_eigenvalues_below(spec, L, a)) /
         static_cast<double>(L);
}

// ---------------------------------------------------------------------------
// Local scaling exponents
// ---------------------------------------------------------------------------

/// Least-squares local scaling exponent of the DOS at E:
/// slope of log N(E-eps, E+eps) against log eps over the given ladder.
struct ScalingExponentEstimate {
  double E = 0.0;
  double V = 0.0;
  double exponent = 0.0;
  std::vector<double> epsilons;  // strictly decreasing
  double fit_residual = 0.0;
};

/// Geometric ladder, ratio 1/2, from 1e-1 down to max(1e-4, 10 x mean level
/// spacing) so every window keeps of order ten eigenvalues.
inline std::vector<double> default_epsilon_ladder(std::int64_t L) {
  const double floor_eps = std::max(1e-4, 10.0 * 4.0 / static_cast<double>(L));
  std::vector<double> out;
  for (double e = 1e-1; e >= floor_eps; e *= 0.5) out.push_back(e);
  return out;
}

inline ScalingExponentEstimate local_scaling_exponent(const PotentialSpec& spec,
                                                      std::int64_t L, double E,
                                                      const std::vector<double>& eps_list) {
  if (eps_list.size() < 2)
    throw std::invalid_argument("local_scaling_exponent: need >= 2 scales");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("local_scaling_exponent: eps_list must be strictly decreasing");

  std::vector<double> log_eps, log_mass;
  log_eps.reserve(eps_list.size());
  log_mass.reserve(eps_list.size());
  for (const double eps : eps_list) {
    const double mass = dos_interval(spec, L, E - eps, E + eps);
    if (mass <= 0.0)
      throw EmptyWindow("local_scaling_exponent: no eigenvalues at scale eps = " +
                        std::to_string(eps) + "; increase L or trim the ladder");
    log_eps.push_back(std::log(eps));
    log_mass.push_back(std::log(mass));
  }
  const LinearFit f = fit_line(log_eps, log_mass);
  ScalingExponentEstimate out;
  out.E = E;
  out.V = spec.V;
  out.exponent = f.slope;
  out.epsilons = eps_list;
  out.fit_residual = f.residual_rms;
  return out;
}

}  // namespace fiblab
