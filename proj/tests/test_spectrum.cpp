#include "fiblab/spectrum.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace fiblab;

TEST_CASE("interval utilities", "[intervals]") {
  const std::vector<Interval> a = {{0.0, 1.0}, {2.0, 3.0}};
  const std::vector<Interval> b = {{0.5, 2.2}, {5.0, 6.0}};
  const auto u = interval_union(a, b);
  REQUIRE(u.size() == 2);
  CHECK(u[0] == Interval{0.0, 3.0});
  CHECK(u[1] == Interval{5.0, 6.0});

  CHECK(covers_up_to_tol(u, {{0.1, 2.9}}, 0.0));
  CHECK_FALSE(covers_up_to_tol(u, {{4.0, 4.5}}, 0.1));
  CHECK(covers_up_to_tol(u, {{2.9, 3.1}}, 0.2));
}

TEST_CASE("free cover is a single band [-2,2] at every level", "[bands]") {
  for (int k : {4, 9, 14, 18}) {
    const BandCover c = band_cover(0.0, k);
    REQUIRE(c.bands.size() == 1);
    CHECK(std::abs(c.bands.front().a + 2.0) <= 1e-9);
    CHECK(std::abs(c.bands.front().b - 2.0) <= 1e-9);
  }
}

TEST_CASE("cover structure at V=0.5", "[bands]") {
  const auto stack = band_cover_stack(0.5, 8, 16);
  // The level-k approximant is periodic with period fib(k+1), so it has
  // exactly fib(k+1) bands once every gap is open, as it is at this coupling.
  for (const auto& c : stack) {
    CHECK(static_cast<std::int64_t>(c.bands.size()) == testutil::fib(c.level + 1));
    for (std::size_t i = 0; i + 1 < c.bands.size(); ++i) {
      CHECK(c.bands[i].a < c.bands[i].b);
      CHECK(c.bands[i].b < c.bands[i + 1].a);
    }
  }
  // Total length below the free value 4, decreasing with the level.
  double prev = 4.0;
  for (const auto& c : stack) {
    CHECK(c.band_total_length() < 4.0);
    CHECK(c.band_total_length() <= prev + 1e-6);
    prev = c.band_total_length();
  }
  // Band count grows with the level (Cantor structure).
  for (std::size_t i = 2; i < stack.size(); ++i)
    CHECK(stack[i].bands.size() >= stack[i - 2].bands.size());
}

TEST_CASE("band endpoints sit on the band level", "[bands]") {
  const BandCover c = band_cover(0.5, 12);
  const double res = c.resolution;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < c.bands.size(); i += 17, ++checked) {
    for (const double e : {c.bands[i].a, c.bands[i].b}) {
      // |x_k| - 1 changes sign within a couple of resolutions of the endpoint.
      const double lo = std::abs(detail::half_trace_eval(e - 2 * res, 0.5, 12).x) - 1.0;
      const double hi = std::abs(detail::half_trace_eval(e + 2 * res, 0.5, 12).x) - 1.0;
      const double at = std::abs(detail::half_trace_eval(e, 0.5, 12).x) - 1.0;
      const bool bracketed = (lo <= 1e-7) != (hi <= 1e-7);
      CHECK((bracketed || std::abs(at) <= 1e-6));
    }
  }
  REQUIRE(checked > 10);
}

TEST_CASE("covers are nested two levels down", "[bands][property]") {
  for (const double V : {0.1, 0.5}) {
    const auto stack = band_cover_stack(V, 8, 13);
    for (std::size_t i = 0; i + 3 < stack.size(); ++i) {
      const auto outer = interval_union(stack[i].bands, stack[i + 1].bands);
      const auto inner = interval_union(stack[i + 2].bands, stack[i + 3].bands);
      CHECK(covers_up_to_tol(outer, inner, 1e-9));
    }
  }
}

TEST_CASE("free cover is symmetric about E=0", "[bands]") {
  const BandCover c = band_cover(0.0, 12);
  for (const auto& band : c.bands) {
    CHECK(std::abs(band.a + c.bands.back().b) <= 1e-9);  // single band case
  }
}

TEST_CASE("coarse single-shot scans are rejected", "[bands]") {
  CHECK_THROWS_AS(band_cover(0.5, 14, 1e-10, 200), ResolutionTooCoarse);
  CHECK_THROWS_AS(band_cover(-0.1, 8), std::invalid_argument);
  CHECK_THROWS_AS(band_cover(0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(band_cover(0.5, 8, -1.0), std::invalid_argument);
}

TEST_CASE("escape_test on pinned energies", "[escape]") {
  const EscapeVerdict off = escape_test(3.0, 0.0, 1000);
  CHECK(off.escaped);
  REQUIRE(off.escape_index.has_value());
  CHECK(*off.escape_index < 30);

  const EscapeVerdict in = escape_test(0.0, 0.0, 1000);
  CHECK_FALSE(in.escaped);
  CHECK_FALSE(in.escape_index.has_value());

  // Agreement with the band pipeline at E=0, V=0.5.
  const BandCover c = band_cover(0.5, 16);
  bool in_band = false;
  for (const auto& band : c.bands)
    if (band.contains(0.0)) in_band = true;
  CHECK(escape_test(0.0, 0.5, 2000).escaped == !in_band);
}

TEST_CASE("escape verdicts are consistent with band covers", "[escape][property]") {
  const double V = 0.5;
  const auto stack = band_cover_stack(V, 8, 16);
  auto rng = testutil::seeded_rng(11);
  const Interval w = spectrum_window(V);
  std::uniform_real_distribution<double> dist(w.a, w.b);
  for (int i = 0; i < 1000; ++i) {
    const double E = dist(rng);
    const EscapeVerdict v = escape_test(E, V, 2000);
    CHECK(v.escaped == v.escape_index.has_value());
    if (v.escaped) {
      // Past the escape index every half-trace stays above the band level, so
      // E cannot sit inside any cover of level >= that index.
      for (const auto& c : stack) {
        if (c.level < *v.escape_index) continue;
        for (const auto& band : c.bands) {
          CHECK_FALSE(band.a + 1e-8 < E && E < band.b - 1e-8);
        }
      }
    } else {
      // Undecided energies lie in every union of consecutive covers.
      for (std::size_t j = 0; j + 1 < stack.size(); ++j) {
        const auto u = interval_union(stack[j].bands, stack[j + 1].bands);
        CHECK(covers_up_to_tol(u, {{E, E}}, 1e-9));
      }
    }
  }
}

TEST_CASE("free energies never escape inside the spectrum", "[escape][property]") {
  auto rng = testutil::seeded_rng(12);
  std::uniform_real_distribution<double> inside(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    CHECK_FALSE(escape_test(inside(rng), 0.0, 500).escaped);
  }
  std::uniform_real_distribution<double> outside(2.0 + 1e-6, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double E = outside(rng);
    CHECK(escape_test(E, 0.0, 2000).escaped);
    CHECK(escape_test(-E, 0.0, 2000).escaped);
  }
}

TEST_CASE("gaps_from_cover basics", "[gaps]") {
  BandCover c;
  c.bands = {{0.0, 1.0}, {2.0, 3.0}};
  const auto gaps = gaps_from_cover(c, {0.0, 3.0});
  REQUIRE(gaps.size() == 1);
  CHECK(gaps[0] == Interval{1.0, 2.0});

  BandCover full;
  full.bands = {{-2.0, 2.0}};
  CHECK(gaps_from_cover(full, {-2.0, 2.0}).empty());

  CHECK_THROWS_AS(gaps_from_cover(c, {0.5, 3.0}), std::invalid_argument);
}

TEST_CASE("largest interior gap is stable under refinement", "[gaps]") {
  const auto stack = band_cover_stack(0.5, 14, 17);
  const auto u14 = union_cover(stack[0], stack[1]);
  const auto u16 = union_cover(stack[2], stack[3]);
  const auto pick_largest = [](const BandCover& c) {
    const auto gaps = gaps_from_cover(c, c.hull());
    Interval largest{0.0, 0.0};
    for (const auto& g : gaps)
      if (g.length() > largest.length()) largest = g;
    return largest;
  };
  const Interval g14 = pick_largest(u14);
  const Interval g16 = pick_largest(u16);
  CHECK(std::abs(g14.a - g16.a) <= 1e-4);
  CHECK(std::abs(g14.b - g16.b) <= 1e-4);
}

TEST_CASE("gap matching by centered overlap", "[gaps]") {
  const std::vector<Interval> candidates = {{-1.0, -0.5}, {0.2, 0.6}, {1.4, 1.9}};
  // Clean match.
  auto m = match_gap({0.25, 0.55}, 0.0, candidates, 0.0);
  REQUIRE(m.has_value());
  CHECK(*m == 1);
  // Centering shift is honored.
  m = match_gap({1.25, 1.55}, 1.0, candidates, 0.0);
  REQUIRE(m.has_value());
  CHECK(*m == 1);
  // No overlap -> no match.
  CHECK_FALSE(match_gap({5.0, 6.0}, 0.0, candidates, 0.0).has_value());
  // Ambiguous tie -> rejected.
  const std::vector<Interval> tie = {{0.0, 1.0}, {2.0, 3.0}};
  CHECK_FALSE(match_gap({0.5, 2.5}, 0.0, tie, 0.0).has_value());
}

TEST_CASE("two largest gaps track across couplings", "[gaps]") {
  const auto cover_at = [](double V) {
    const auto stack = band_cover_stack(V, 14, 15);
    return union_cover(stack[0], stack[1]);
  };
  const BandCover c4 = cover_at(0.4);
  const BandCover c5 = cover_at(0.5);
  const auto g4 = gaps_from_cover(c4, c4.hull());
  const auto g5 = gaps_from_cover(c5, c5.hull());

  // Indices of the two largest gaps at V=0.4.
  std::vector<std::size_t> order(g4.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g4[a].length() > g4[b].length();
  });
  for (int j = 0; j < 2; ++j) {
    const auto m =
        match_gap(g4[order[static_cast<std::size_t>(j)]], c4.hull().center(), g5,
                  c5.hull().center());
    REQUIRE(m.has_value());
    // The matched gap is comparable in size.
    CHECK(g5[*m].length() >
          0.3 * g4[order[static_cast<std::size_t>(j)]].length());
  }
}
