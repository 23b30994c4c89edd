// Spectral covers from the trace-map route. The level-k approximant of the
// spectrum is {E : |x_k(E)| <= 1} for the half-trace x_k started on the line
// l_V; it is a finite union of closed bands (x_k is a polynomial of degree
// fib(k+1) in E). Band endpoints are located by bisection after a
// derivative-guided scan of the search window. Individual energies are
// classified by the escape criterion for trace-map orbits.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiblab/trace_map.hpp"

namespace fiblab {

// Requested resolution cannot separate adjacent band/gap features at this
// level; raise the grid density or lower the level.
struct ResolutionTooCoarse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Intervals
// ---------------------------------------------------------------------------

struct Interval {
  double a = 0.0;
  double b = 0.0;

  double length() const { return b - a; }
  double center() const { return 0.5 * (a + b); }
  bool contains(double e) const { return a <= e && e <= b; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline double total_length(const std::vector<Interval>& xs) {
  double s = 0.0;
  for (const auto& x : xs) s += x.length();
  return s;
}

/// Union of two disjoint-sorted interval lists, merging overlaps and touches.
inline std::vector<Interval> interval_union(const std::vector<Interval>& a,
                                            const std::vector<Interval>& b) {
  std::vector<Interval> all;
  all.reserve(a.size() + b.size());
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end(),
            [](const Interval& u, const Interval& v) { return u.a < v.a; });
  std::vector<Interval> out;
  for (const auto& x : all) {
    if (!out.empty() && x.a <= out.back().b) {
      out.back().b = std::max(out.back().b, x.b);
    } else {
      out.push_back(x);
    }
  }
  return out;
}

/// True when every point of `inner` lies in `outer` fattened by tol.
inline bool covers_up_to_tol(const std::vector<Interval>& outer,
                             const std::vector<Interval>& inner, double tol) {
  std::vector<Interval> fat;
  fat.reserve(outer.size());
  for (const auto& x : outer) fat.push_back({x.a - tol, x.b + tol});
  fat = interval_union(fat, {});
  for (const auto& x : inner) {
    bool ok = false;
    for (const auto& f : fat) {
      if (f.a <= x.a && x.b <= f.b) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Band covers
// ---------------------------------------------------------------------------

/// Finite union of closed bands approximating the spectrum at one level.
struct BandCover {
  double V = 0.0;
  int level = 0;
  double resolution = 0.0;
  std::vector<Interval> bands;  // pairwise disjoint, sorted

  double band_total_length() const { return total_length(bands); }
  Interval hull() const {
    if (bands.empty()) return {0.0, 0.0};
    return {bands.front().a, bands.back().b};
  }
};

/// Search window [-2-V, 2+V]; contains the spectrum for every V >= 0.
inline Interval spectrum_window(double V) { return {-2.0 - V, 2.0 + V}; }

namespace detail {

// Tolerance on |x_k| - 1 for the in-band test; absorbs recursion rounding at
// tangencies (the V=0 cover touches the band level at interior extrema, with
// observed floating-point flicker of order 1e-10 by level 22). Gaps this
// shallow are far below any resolvable width.
inline constexpr double kBandLevelTol = 1e-8;
// |x| beyond this cannot dip back to the band level within one grid cell.
inline constexpr double kRefineThreshold = 1e6;

struct TraceEval {
  double x = 0.0;
  double dx = 0.0;
};

/// Joint value/derivative recursion for x_k(E) at coupling V. Magnitudes are
/// clamped at 1e100; beyond that only the sign matters to the scan.
inline TraceEval half_trace_eval(double E, double V, int k) {
  double xm2 = 1.0, dm2 = 0.0;
  double xm1 = E / 2.0, dm1 = 0.5;
  double x = (E - V) / 2.0, dx = 0.5;
  for (int j = 1; j < k; ++j) {
    double xn = 2.0 * x * xm1 - xm2;
    double dn = 2.0 * (dx * xm1 + x * dm1) - dm2;
    xm2 = xm1;
    dm2 = dm1;
    xm1 = x;
    dm1 = dx;
    x = xn;
    dx = dn;
    if (std::abs(x) > 1e100) return {x < 0.0 ? -1e100 : 1e100, 0.0};
    if (std::abs(dx) > 1e100) dx = dx < 0.0 ? -1e100 : 1e100;
  }
  return {x, dx};
}

inline double band_gauge(double E, double V, int k) {
  return std::abs(half_trace_eval(E, V, k).x) - (1.0 + kBandLevelTol);
}

struct Crossing {
  double E = 0.0;
  bool entering = false;  // band begins here when walking upward in E
};

/// Bisect the sign change of the band gauge to the requested resolution.
inline double bisect_gauge(double lo, double hi, double glo, double V, int k,
                           double resolution) {
  while (hi - lo > resolution) {
    const double m = 0.5 * (lo + hi);
    const double gm = band_gauge(m, V, k);
    if ((gm <= 0.0) == (glo <= 0.0))
      lo = m;
    else
      hi = m;
  }
  return 0.5 * (lo + hi);
}

/// Bisect a sign change of x itself (used when a monotone sweep carries x all
/// the way across the band [-1, 1] between two out-of-band samples).
inline double bisect_value_root(double lo, double hi, double xlo, double V, int k) {
  for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++i) {
    const double m = 0.5 * (lo + hi);
    const double xm = half_trace_eval(m, V, k).x;
    if ((xm > 0.0) == (xlo > 0.0))
      lo = m;
    else
      hi = m;
  }
  return 0.5 * (lo + hi);
}

inline void scan_segment(double E0, double E1, const TraceEval& f0, const TraceEval& f1,
                         double V, int k, double resolution, int depth,
                         std::vector<Crossing>& out) {
  const double level = 1.0 + kBandLevelTol;
  const bool in0 = std::abs(f0.x) <= level;
  const bool in1 = std::abs(f1.x) <= level;

  // An interior extremum can hide a band or a gap narrower than the grid;
  // split while the samples are anywhere near the band level. Fast motion of
  // x across a cell near the band level gets the same treatment, since a cell
  // holding more than one extremum can alias the derivative signs.
  const bool extremum_inside = (f0.dx > 0.0) != (f1.dx > 0.0);
  const bool promising =
      in0 || in1 || std::min(std::abs(f0.x), std::abs(f1.x)) < kRefineThreshold;
  const bool fast_motion = std::min(std::abs(f0.x), std::abs(f1.x)) < 4.0 &&
                           std::abs(f1.x - f0.x) > 0.5;
  if (((extremum_inside && promising) || fast_motion) && E1 - E0 > resolution &&
      depth > 0) {
    const double m = 0.5 * (E0 + E1);
    const TraceEval fm = half_trace_eval(m, V, k);
    scan_segment(E0, m, f0, fm, V, k, resolution, depth - 1, out);
    scan_segment(m, E1, fm, f1, V, k, resolution, depth - 1, out);
    return;
  }

  if (in0 == in1) {
    if (!in0 && (f0.x > 0.0) != (f1.x > 0.0) &&
        std::min(std::abs(f0.x), std::abs(f1.x)) < kRefineThreshold) {
      // Monotone sweep from one side of the band to the other: x passes
      // through zero in-band, giving an enter/exit pair.
      const double em = bisect_value_root(E0, E1, f0.x, V, k);
      out.push_back({bisect_gauge(E0, em, band_gauge(E0, V, k), V, k, resolution), true});
      out.push_back({bisect_gauge(em, E1, band_gauge(em, V, k), V, k, resolution), false});
    }
    return;
  }
  out.push_back({bisect_gauge(E0, E1, band_gauge(E0, V, k), V, k, resolution), in1});
}

}  // namespace detail

namespace detail {

/// Scans one window with Chebyshev-mapped nodes (E = c - w cos(pi s), which
/// matches the 1/sqrt clustering of approximant bands at window edges) and
/// appends the bands found to `out`. Throws ResolutionTooCoarse when the
/// crossing sequence cannot be ordered at this density.
inline void scan_window_into(Interval window, double V, int k, double resolution,
                             int nodes, std::vector<Interval>& out) {
  constexpr double pi = 3.14159265358979323846;
  const double half_width = 0.5 * window.length();
  const double center = window.center();

  std::vector<Crossing> crossings;
  TraceEval prev = half_trace_eval(window.a, V, k);
  const bool in_at_start = std::abs(prev.x) <= 1.0 + kBandLevelTol;
  double e_prev = window.a;
  for (int i = 1; i < nodes; ++i) {
    const double s = static_cast<double>(i) / (nodes - 1);
    const double e = i == nodes - 1 ? window.b : center - half_width * std::cos(pi * s);
    const TraceEval cur = half_trace_eval(e, V, k);
    scan_segment(e_prev, e, prev, cur, V, k, resolution, 48, crossings);
    prev = cur;
    e_prev = e;
  }
  std::sort(crossings.begin(), crossings.end(),
            [](const Crossing& u, const Crossing& v) { return u.E < v.E; });

  bool state = in_at_start;
  double open = window.a;
  for (const auto& c : crossings) {
    if (c.entering == state) {
      throw ResolutionTooCoarse(
          "band_cover: crossing sequence near E = " + std::to_string(c.E) +
          " cannot be separated at this sampling density; increase the grid "
          "density or lower the level");
    }
    if (c.entering) {
      open = c.E;
      state = true;
    } else {
      out.push_back({open, c.E});
      state = false;
    }
  }
  if (state) out.push_back({open, window.b});
}

/// Merge sub-resolution gaps (tangency artifacts), then drop sub-resolution
/// bands.
inline std::vector<Interval> clean_bands(std::vector<Interval> bands, double resolution) {
  std::vector<Interval> cleaned;
  for (const auto& band : bands) {
    if (!cleaned.empty() && band.a - cleaned.back().b < resolution) {
      cleaned.back().b = band.b;
    } else {
      cleaned.push_back(band);
    }
  }
  std::erase_if(cleaned, [&](const Interval& b) { return b.length() < resolution; });
  return cleaned;
}

}  // namespace detail

/// Band covers for all levels k_lo..k_hi at coupling V, built bottom-up: the
/// level-k bands always lie inside the union of the two previous levels'
/// bands (two consecutive half-traces above 1 force escape), so each level is
/// scanned only inside the fattened parent bands, with a guaranteed minimum
/// node count per parent band. This keeps the sampling density per band
/// uniform at every scale, including the van Hove bunching near spectral
/// edges. Endpoints are bisected to `resolution`.
inline std::vector<BandCover> band_cover_stack(double V, int k_lo, int k_hi,
                                               double resolution = 1e-10) {
  if (V < 0.0) throw std::invalid_argument("band_cover: V must be >= 0");
  if (k_lo < 1 || k_hi < k_lo) throw std::invalid_argument("band_cover: bad level range");
  if (!(resolution > 0.0)) throw std::invalid_argument("band_cover: resolution must be > 0");

  const Interval full = spectrum_window(V);
  const double margin = std::max(1e-7, 100.0 * resolution);
  std::vector<BandCover> levels;
  levels.reserve(static_cast<std::size_t>(k_hi));
  for (int k = 1; k <= k_hi; ++k) {
    BandCover cover;
    cover.V = V;
    cover.level = k;
    cover.resolution = resolution;
    if (k <= 8) {
      const int nodes = static_cast<int>(16 * fibonacci(k + 1) + 1);
      detail::scan_window_into(full, V, k, resolution, std::max(nodes, 129), cover.bands);
    } else {
      std::vector<Interval> windows;
      for (const auto& band : levels[static_cast<std::size_t>(k - 2)].bands)
        windows.push_back({band.a - margin, band.b + margin});
      windows = interval_union(
          windows, [&] {
            std::vector<Interval> w2;
            for (const auto& band : levels[static_cast<std::size_t>(k - 3)].bands)
              w2.push_back({band.a - margin, band.b + margin});
            return w2;
          }());
      const double per_unit = 16.0 * static_cast<double>(fibonacci(k + 1)) / full.length();
      for (auto& w : windows) {
        w.a = std::max(w.a, full.a);
        w.b = std::min(w.b, full.b);
        const int nodes =
            static_cast<int>(std::min(2e6, std::max(49.0, w.length() * per_unit))) + 1;
        detail::scan_window_into(w, V, k, resolution, nodes, cover.bands);
      }
    }
    cover.bands = detail::clean_bands(std::move(cover.bands), resolution);
    levels.push_back(std::move(cover));
  }
  levels.erase(levels.begin(), levels.begin() + (k_lo - 1));
  return levels;
}

/// Level-k band cover of the spectrum at coupling V: all maximal intervals of
/// {E in [-2-V, 2+V] : |x_k(E)| <= 1}. Endpoints are bisected to `resolution`.
/// `grid_points` overrides the multilevel construction with a single
/// full-window scan at the given node count.
inline BandCover band_cover(double V, int k, double resolution = 1e-10,
                            int grid_points = 0) {
  if (grid_points > 0) {
    if (V < 0.0) throw std::invalid_argument("band_cover: V must be >= 0");
    if (k < 1) throw std::invalid_argument("band_cover: level must be >= 1");
    if (!(resolution > 0.0))
      throw std::invalid_argument("band_cover: resolution must be > 0");
    BandCover cover;
    cover.V = V;
    cover.level = k;
    cover.resolution = resolution;
    detail::scan_window_into(spectrum_window(V), V, k, resolution,
                             std::max(grid_points, 9), cover.bands);
    cover.bands = detail::clean_bands(std::move(cover.bands), resolution);
    return cover;
  }
  return band_cover_stack(V, k, k, resolution).front();
}

/// Union of two covers of the same coupling (e.g. consecutive levels, whose
/// union always contains the spectrum).
inline BandCover union_cover(const BandCover& a, const BandCover& b) {
  BandCover out;
  out.V = a.V;
  out.level = std::min(a.level, b.level);
  out.resolution = std::max(a.resolution, b.resolution);
  out.bands = interval_union(a.bands, b.bands);
  return out;
}

// ---------------------------------------------------------------------------
// Escape classification
// ---------------------------------------------------------------------------

/// Outcome of the escape test. escaped=false means "not decided non-spectral
/// within the iteration budget", not a membership proof.
struct EscapeVerdict {
  bool escaped = false;
  std::optional<int> escape_index;  // index n where the escape rule fired
  std::optional<int> witness;       // first index with |x_n| > 1
};

/// Declares escape at index n when |x_{n-1}| > 1, |x_n| > 1 and
/// |x_{n+1}| > |x_n|; once two consecutive half-traces exceed 1 the orbit
/// grows monotonically, so the rule never fires on the spectrum.
inline EscapeVerdict escape_test(double E, double V, int max_iter) {
  if (max_iter < 1) throw std::invalid_argument("escape_test: max_iter must be >= 1");
  EscapeVerdict verdict;
  double xm2 = 1.0;           // x_{-1}
  double xm1 = E / 2.0;       // x_0
  double x = (E - V) / 2.0;   // x_1
  if (std::abs(xm1) > 1.0) verdict.witness = 0;
  for (int j = 1; j <= max_iter; ++j) {
    if (!verdict.witness && std::abs(x) > 1.0) verdict.witness = j;
    if (std::abs(xm1) > 1.0 && std::abs(xm2) > 1.0 && std::abs(x) > std::abs(xm1)) {
      verdict.escaped = true;
      verdict.escape_index = j - 1;
      return verdict;
    }
    if (std::abs(x) > kHalfTraceMagnitudeCap) {
      verdict.escaped = true;
      verdict.escape_index = j;
      return verdict;
    }
    const double next = 2.0 * x * xm1 - xm2;
    xm2 = xm1;
    xm1 = x;
    x = next;
  }
  verdict.witness.reset();
  return verdict;
}

// ---------------------------------------------------------------------------
// Gaps
// ---------------------------------------------------------------------------

/// Connected components of `window` minus the cover's bands, sorted.
inline std::vector<Interval> gaps_from_cover(const BandCover& c, Interval window) {
  if (!c.bands.empty() &&
      (window.a > c.bands.front().a + 1e-12 || window.b < c.bands.back().b - 1e-12)) {
    throw std::invalid_argument("gaps_from_cover: window must contain the cover hull");
  }
  std::vector<Interval> gaps;
  double cursor = window.a;
  for (const auto& band : c.bands) {
    if (band.a > cursor) gaps.push_back({cursor, band.a});
    cursor = std::max(cursor, band.b);
  }
  if (window.b > cursor) gaps.push_back({cursor, window.b});
  return gaps;
}

/// Matches `gap` (from a cover centered at `center_from`) to the candidate
/// with maximal interval overlap after centering both spectra. Returns
/// nullopt when no candidate overlaps or the best match is ambiguous.
inline std::optional<std::size_t> match_gap(const Interval& gap, double center_from,
                                            const std::vector<Interval>& candidates,
                                            double center_to) {
  const double shift = center_to - center_from;
  const Interval g{gap.a + shift, gap.b + shift};
  double best = 0.0, second = 0.0;
  std::optional<std::size_t> arg;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double lo = std::max(g.a, candidates[i].a);
    const double hi = std::min(g.b, candidates[i].b);
    const double overlap = hi - lo;
    if (overlap > best) {
      second = best;
      best = overlap;
      arg = i;
    } else if (overlap > second) {
      second = overlap;
    }
  }
  if (!arg || best <= 0.0) return std::nullopt;
  if (second > 0.0 && best - second < 1e-9 * std::max(1.0, best)) return std::nullopt;
  return arg;
}

}  // namespace fiblab
