// Trace-map layer: the Fibonacci trace map T(x,y,z) = (2xy-z, x, y) on R^3,
// its Fricke-Vogt invariant G, the family of invariant cubic surfaces S_V,
// the line of initial conditions l_V, half-trace recursions, and the
// golden-mean torus automorphism with its semiconjugacy onto the V=0 surface.
//
// Everything here is a pure function of value inputs; no shared state.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace fiblab {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Point has G < -tol, so it lies on no real surface S_V with V >= 0.
struct NegativeInvariant : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A point in trace coordinates (x, y, z).
struct SurfacePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const SurfacePoint&, const SurfacePoint&) = default;
};

/// Angle coordinates on the 2-torus, always reduced mod 1 into [0, 1).
struct TorusPoint {
  double theta = 0.0;
  double phi = 0.0;
};

/// Initial data for a half-trace orbit: seed triple ((E-V)/2, E/2, 1).
struct HalfTraceSeed {
  double E = 0.0;
  double V = 0.0;
};

inline double reduce_mod1(double t) {
  double f = t - std::floor(t);
  if (f >= 1.0) f -= 1.0;  // guards against floor rounding at the boundary
  return f;
}

inline TorusPoint make_torus_point(double theta, double phi) {
  return {reduce_mod1(theta), reduce_mod1(phi)};
}

// The four conic singularities of the V=0 surface.
inline constexpr std::array<SurfacePoint, 4> kSingularities = {
    SurfacePoint{1.0, 1.0, 1.0}, SurfacePoint{-1.0, -1.0, 1.0},
    SurfacePoint{1.0, -1.0, -1.0}, SurfacePoint{-1.0, 1.0, -1.0}};

// ---------------------------------------------------------------------------
// Exact formulas
// ---------------------------------------------------------------------------

inline SurfacePoint trace_step(const SurfacePoint& p) {
  return {2.0 * p.x * p.y - p.z, p.x, p.y};
}

inline SurfacePoint trace_step_inv(const SurfacePoint& p) {
  return {p.y, p.z, 2.0 * p.y * p.z - p.x};
}

/// Derivative of trace_step, rows in the coordinate order of trace_step.
inline Eigen::Matrix3d trace_jacobian(const SurfacePoint& p) {
  Eigen::Matrix3d j;
  j << 2.0 * p.y, 2.0 * p.x, -1.0,  //
      1.0, 0.0, 0.0,                //
      0.0, 1.0, 0.0;
  return j;
}

/// Fricke-Vogt invariant G(x,y,z) = x^2 + y^2 + z^2 - 2xyz - 1, conserved by T.
inline double fricke_vogt(const SurfacePoint& p) {
  return p.x * p.x + p.y * p.y + p.z * p.z - 2.0 * p.x * p.y * p.z - 1.0;
}

/// Coupling V >= 0 of the surface S_V through p, from G(p) = V^2/4.
inline double coupling_from_point(const SurfacePoint& p, double tol = 1e-9) {
  const double g = fricke_vogt(p);
  if (g < -tol) {
    throw NegativeInvariant("fricke_vogt(p) = " + std::to_string(g) +
                            " < 0: point lies on no surface S_V with V >= 0");
  }
  return 2.0 * std::sqrt(std::max(g, 0.0));
}

/// Point of the line l_V at energy E: ((E-V)/2, E/2, 1). Lies on S_V.
inline SurfacePoint line_point(double E, double V) {
  return {(E - V) / 2.0, E / 2.0, 1.0};
}

/// Golden-mean torus automorphism (theta, phi) -> (theta + phi, theta) mod 1.
inline TorusPoint cat_map_step(const TorusPoint& t) {
  return {reduce_mod1(t.theta + t.phi), t.theta};
}

/// Semiconjugacy F(theta, phi) = (cos 2pi(theta+phi), cos 2pi theta, cos 2pi phi)
/// onto the central part of the V=0 surface; satisfies F o A = T o F.
inline SurfacePoint semiconjugacy_F(const TorusPoint& t) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double s = reduce_mod1(t.theta + t.phi);
  return {std::cos(two_pi * s), std::cos(two_pi * reduce_mod1(t.theta)),
          std::cos(two_pi * reduce_mod1(t.phi))};
}

// ---------------------------------------------------------------------------
// Half-trace sequences
// ---------------------------------------------------------------------------

/// Fibonacci numbers with fib(1) = fib(2) = 1. The half-trace x_k below is a
/// polynomial of degree fib(k+1) in E.
inline std::int64_t fibonacci(int k) {
  if (k <= 0) return 0;
  std::int64_t a = 0, b = 1;
  for (int i = 1; i < k; ++i) {
    std::int64_t c = a + b;
    a = b;
    b = c;
  }
  return b;
}

/// Half-trace orbit x_{-1}, x_0, ..., x_{k_max}. values[i] holds x_{i-1}.
/// When |x_k| exceeds the magnitude cap the sequence is truncated there and
/// the overflow flag is set; bounded orbits never trip the cap.
struct HalfTraceSequence {
  std::vector<double> values;
  bool overflow = false;
  std::optional<int> overflow_index;  // k of the offending x_k

  double at(int k) const { return values.at(static_cast<std::size_t>(k) + 1); }
  int max_index() const { return static_cast<int>(values.size()) - 2; }
};

inline constexpr double kHalfTraceMagnitudeCap = 1e100;

/// x_{-1} = 1, x_0 = E/2, x_1 = (E-V)/2, x_{k+1} = 2 x_k x_{k-1} - x_{k-2}.
/// Coincides with the first coordinates of trace_step iterates started from
/// line_point(E, V).
inline HalfTraceSequence half_trace_sequence(const HalfTraceSeed& seed, int k_max,
                                             double magnitude_cap = kHalfTraceMagnitudeCap) {
  if (k_max < 1) throw std::invalid_argument("half_trace_sequence: k_max must be >= 1");
  HalfTraceSequence out;
  out.values.reserve(static_cast<std::size_t>(k_max) + 2);
  out.values.push_back(1.0);             // x_{-1}
  out.values.push_back(seed.E / 2.0);    // x_0
  double xm2 = 1.0;
  double xm1 = seed.E / 2.0;
  double x = (seed.E - seed.V) / 2.0;    // x_1
  for (int k = 1; k <= k_max; ++k) {
    if (std::abs(x) > magnitude_cap) {
      out.overflow = true;
      out.overflow_index = k;
      return out;
    }
    out.values.push_back(x);
    const double next = 2.0 * x * xm1 - xm2;
    xm2 = xm1;
    xm1 = x;
    x = next;
  }
  return out;
}

}  // namespace fiblab
