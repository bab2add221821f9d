#include "doctest.h"

#include <cmath>

#include "etm/nli.hpp"
#include "etm/thermo.hpp"
#include "support/oracles.hpp"

using namespace etm;

namespace {
const TileCatalog& cat0() {
  static TileCatalog cat = [] {
    auto f = std::make_shared<const RationalMap>(lattes_f0());
    return build_catalog(f, InvariantCurve::extended_real_line());
  }();
  return cat;
}

std::shared_ptr<const RationalMap> f0_shared() {
  static auto f = std::make_shared<const RationalMap>(lattes_f0());
  return f;
}

SpherePoint random_point_on_side(Side c, Rng& rng) {
  while (true) {
    Complex w(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
    if (std::abs(w) > 0.9) continue;
    SpherePoint p = cat0().curve().from_chart(c, w);
    if (cat0().curve().dist(p) > 1e-3) return p;
  }
}
}  // namespace

TEST_CASE("backward admissibility") {
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    BranchSequence xi = random_backward_sequence(cat0(), rng.uniform_int(8), 10, rng);
    CHECK(backward_admissible(cat0(), xi));
    CHECK(xi.depth() == 10);
  }
  BranchSequence bad;
  bad.tiles = {0, 0};
  if (!cat0().transition(0, 0)) CHECK(!backward_admissible(cat0(), bad));
}

TEST_CASE("temporal delta: trivial cases") {
  Rng rng(5);
  Potential smooth = smooth_sample_potential();
  BranchSequence xi = random_backward_sequence(cat0(), 0, 14, rng);
  Side c = cat0().one_tiles()[0].color;
  SpherePoint x = random_point_on_side(c, rng);

  TemporalDelta same = temporal_delta(cat0(), smooth, xi, x, x, 10);
  CHECK(same.value == 0.0);

  SpherePoint y = random_point_on_side(c, rng);
  TemporalDelta con = temporal_delta(cat0(), constant_potential(2.0), xi, x, y, 10);
  CHECK(con.value == 0.0);
}

TEST_CASE("temporal delta: Hoelder bound with finite fitted constant") {
  Rng rng(9);
  Potential smooth = smooth_sample_potential();
  double worst = 0.0;
  int n = 0;
  while (n < 200) {
    int first = rng.uniform_int(8);
    BranchSequence xi = random_backward_sequence(cat0(), first, 14, rng);
    Side c = cat0().one_tiles()[first].color;
    SpherePoint x = random_point_on_side(c, rng);
    SpherePoint y = random_point_on_side(c, rng);
    double d = chordal_dist(x, y);
    if (d < 1e-4) continue;
    TemporalDelta td = temporal_delta(cat0(), smooth, xi, x, y, 12);
    worst = std::max(worst, std::fabs(td.value) / std::pow(d, cat0().metric_exponent()));
    ++n;
  }
  CHECK(worst < 10.0);
  CHECK(worst > 0.0);
}

TEST_CASE("antisymmetry, cocycle identity, truncation stability") {
  Rng rng(5);
  Potential smooth = smooth_sample_potential();
  for (int k = 0; k < 100; ++k) {
    int first = rng.uniform_int(8);
    BranchSequence xi = random_backward_sequence(cat0(), first, 18, rng);
    Side c = cat0().one_tiles()[first].color;
    SpherePoint x = random_point_on_side(c, rng);
    SpherePoint y = random_point_on_side(c, rng);
    SpherePoint z = random_point_on_side(c, rng);

    TemporalDelta dxy = temporal_delta(cat0(), smooth, xi, x, y, 12);
    TemporalDelta dyx = temporal_delta(cat0(), smooth, xi, y, x, 12);
    CHECK(std::fabs(dxy.value + dyx.value) < 1e-10);

    TemporalDelta dzy = temporal_delta(cat0(), smooth, xi, z, y, 12);
    TemporalDelta dzx = temporal_delta(cat0(), smooth, xi, z, x, 12);
    CHECK(std::fabs(dxy.value - (dzy.value - dzx.value)) < 1e-10);

    TemporalDelta deep = temporal_delta(cat0(), smooth, xi, x, y, 16);
    CHECK(std::fabs(deep.value - dxy.value) <= dxy.tail_bound);
  }
}

TEST_CASE("temporal distance: trivial and generic cases") {
  Rng rng(21);
  Potential smooth = smooth_sample_potential();
  int first = 0;
  Side c = cat0().one_tiles()[first].color;
  // another branch root with the same image 0-tile
  int other = -1;
  for (int t = 1; t < 8; ++t)
    if (cat0().one_tiles()[t].color == c) other = t;
  REQUIRE(other >= 0);

  BranchSequence xi = random_backward_sequence(cat0(), first, 14, rng);
  BranchSequence eta = random_backward_sequence(cat0(), other, 14, rng);
  SpherePoint x = random_point_on_side(c, rng);
  SpherePoint y = random_point_on_side(c, rng);

  CHECK(temporal_distance(cat0(), smooth, xi, xi, x, y, 10) == 0.0);
  CHECK(temporal_distance(cat0(), constant_potential(1.0), xi, eta, x, y, 10) == 0.0);

  // a positive fraction of samples is bounded away from zero
  int nonzero = 0, total = 0;
  for (int k = 0; k < 40; ++k) {
    BranchSequence a = random_backward_sequence(cat0(), first, 14, rng);
    BranchSequence b = random_backward_sequence(cat0(), other, 14, rng);
    SpherePoint u = random_point_on_side(c, rng);
    SpherePoint v = random_point_on_side(c, rng);
    if (chordal_dist(u, v) < 0.05) continue;
    ++total;
    if (std::fabs(temporal_distance(cat0(), smooth, a, b, u, v, 12)) > 1e-4) ++nonzero;
  }
  CHECK(nonzero * 4 >= total);  // at least a quarter of the samples

  // mismatched branch roots
  int wrong = -1;
  for (int t = 0; t < 8; ++t)
    if (cat0().one_tiles()[t].color != c) wrong = t;
  BranchSequence bad = random_backward_sequence(cat0(), wrong, 14, rng);
  CHECK_THROWS_AS(temporal_distance(cat0(), smooth, xi, bad, x, y, 10), Error);
}

TEST_CASE("sni probe discriminates potential classes") {
  Potential cnst = constant_potential(1.0);
  SniResult rc = sni_probe(cat0(), cnst, 3, 8, 10, 7);
  CHECK(rc.epsilon_estimate < 1e-8);

  Potential cob = coboundary_potential(f0_shared(), 1.0, 1e-5);
  SniResult rb = sni_probe(cat0(), cob, 3, 8, 10, 7);
  CHECK(rb.epsilon_estimate < 1e-6);

  Potential smooth = smooth_sample_potential();
  double prev = -1.0;
  for (int depth : {6, 8, 10}) {
    SniResult rs = sni_probe(cat0(), smooth, 3, depth, 10, 7);
    CHECK(rs.epsilon_estimate > 1e-4);
    if (prev > 0) {
      CHECK(rs.epsilon_estimate < 10 * prev);
      CHECK(rs.epsilon_estimate > prev / 10);
    }
    prev = rs.epsilon_estimate;
    for (const auto& s : rs.samples) CHECK(s.separation > 0.0);
  }
}

TEST_CASE("cohomology probe: orbit averages") {
  auto c1 = eventual_positivity(constant_potential(1.0), cat0(), 4, 3);
  OrbitStore st_const = build_orbit_store(cat0(), 5, constant_potential(1.0), std::nullopt, c1);
  CHECK(cohomology_probe(st_const).spread < 1e-9);

  Potential cob = coboundary_potential(f0_shared(), 1.0, 1e-5);
  OrbitStore st_cob = build_orbit_store(cat0(), 5, cob);
  CHECK(cohomology_probe(st_cob).spread < 1e-7);

  OrbitStore st_smooth = build_orbit_store(cat0(), 5, smooth_sample_potential());
  CHECK(cohomology_probe(st_smooth).spread > 0.01);
}
