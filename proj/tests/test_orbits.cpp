#include "doctest.h"

#include <cmath>

#include "etm/orbits.hpp"
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

const OrbitStore& store4() {
  static OrbitStore st = build_orbit_store(cat0(), 4, constant_potential(1.0));
  return st;
}
}  // namespace

TEST_CASE("periodic word counts match the transition matrix trace") {
  auto A = cat0().transition_matrix();
  for (int n = 1; n <= 6; ++n) {
    CHECK(trace_of_power(cat0(), n) == oracle::trace_power(A, n));
    CHECK(periodic_words(cat0(), n).size() == oracle::trace_power(A, n));
  }
  // cyclic rotation of a periodic word is periodic
  for (const auto& w : periodic_words(cat0(), 3)) {
    TileWord rot(w.begin() + 1, w.end());
    rot.push_back(w.front());
    CHECK(cat0().is_cyclically_admissible(rot));
  }
}

TEST_CASE("necklace Moebius count at the symbolic level") {
  auto A = cat0().transition_matrix();
  for (int n = 1; n <= 6; ++n) {
    long long canon = 0;
    for (const auto& w : periodic_words(cat0(), n))
      if (is_primitive_word(w) && canonical_rotation(w) == w) ++canon;
    CHECK(canon == oracle::necklace_count(A, n));
  }
}

TEST_CASE("word helpers") {
  CHECK(canonical_rotation({3, 1, 2}) == TileWord{1, 2, 3});
  CHECK(is_primitive_word({1, 2, 1, 3}));
  CHECK(!is_primitive_word({1, 2, 1, 2}));
  CHECK(is_primitive_word({5}));
}

TEST_CASE("locate_periodic_point: interior fixed point of f0") {
  // an interior fixed word: a tile with side == color containing 0.3933i
  const double y = std::sqrt(2.0 / std::sqrt(3.0) - 1.0);  // root of 3z^4 - 6z^2 - 1 on iR
  bool found = false;
  for (const auto& t : cat0().one_tiles()) {
    if (t.side != t.color) continue;
    SpherePoint x = locate_periodic_point(cat0(), {t.id});
    CHECK(chordal_dist(cat0().map().eval(x), x) < 1e-10);
    if (x.is_finite() && std::abs(x.z - Complex(0, y)) < 1e-9) found = true;
  }
  CHECK(found);

  // non-periodic word errors
  int a = 0, bad = -1;
  for (int b = 0; b < 8 && bad < 0; ++b)
    if (cat0().transition(a, b) && !cat0().transition(b, a)) bad = b;
  if (bad >= 0) CHECK_THROWS_AS(locate_periodic_point(cat0(), {a, bad}), Error);
}

TEST_CASE("fixed points of f and f^2 against the polynomial oracle") {
  const RationalMap& f = cat0().map();
  for (int n : {1, 2}) {
    auto want = oracle::poly_fixed_points(f, n);
    const auto& got = store4().fixed_points(n);
    CHECK(got.size() == want.size());
    for (const auto& w : want) {
      bool matched = false;
      for (const auto& r : got)
        if (chordal_dist(r.point, w) < 1e-8) matched = true;
      CHECK(matched);
    }
    for (const auto& r : got) CHECK(chordal_dist(f.eval_n(r.point, n), r.point) < 1e-10);
  }
  // the five geometric fixed points named explicitly
  const auto& fx = store4().fixed_points(1);
  REQUIRE(fx.size() == 5);
  double a = std::sqrt(1.0 + 2.0 / std::sqrt(3.0));
  double b = std::sqrt(2.0 / std::sqrt(3.0) - 1.0);
  for (Complex want : {Complex(a, 0), Complex(-a, 0), Complex(0, b), Complex(0, -b)}) {
    bool matched = false;
    for (const auto& r : fx)
      if (r.point.is_finite() && std::abs(r.point.z - want) < 1e-8) matched = true;
    CHECK(matched);
  }
  bool has_inf = false;
  for (const auto& r : fx)
    if (r.point.infinite) has_inf = true;
  CHECK(has_inf);
}

TEST_CASE("trace identity: word multiplicities sum to trace(A^n)") {
  auto A = cat0().transition_matrix();
  for (int n = 1; n <= 4; ++n) {
    long long total = 0;
    for (const auto& r : store4().fixed_points(n)) total += r.word_count;
    CHECK(total == static_cast<long long>(oracle::trace_power(A, n)));
  }
}

TEST_CASE("geometric fixed-point census: card Fix(f^n) = deg^n + 1") {
  // every fixed point of an expanding rational map is simple (multiplier
  // away from 1), so the count with multiplicity equals the count of points
  OrbitStore st = build_orbit_store(cat0(), 6, constant_potential(1.0));
  for (int n = 1; n <= 6; ++n) {
    std::size_t want = std::size_t(std::llround(std::pow(4.0, n))) + 1;
    CHECK(st.fixed_points(n).size() == want);
  }
}

TEST_CASE("second catalog map: census across the pipeline") {
  // (z^2-2)/z^2, degree 2, postcritical {-1, 1, inf}
  auto g = std::make_shared<const RationalMap>(RationalMap::create(
      Polynomial::from_reals({-2, 0, 1}), Polynomial::from_reals({0, 0, 1})));
  CHECK(g->degree() == 2);
  CHECK(g->postcritical_set().size() == 3);
  TileCatalog cat = build_catalog(g, InvariantCurve::extended_real_line());
  CHECK(cat.tile_count() == 4);
  for (int n = 1; n <= 4; ++n)
    CHECK(enumerate_tiles(cat, n).size() == 2 * std::size_t(1 << n));
  OrbitStore st = build_orbit_store(cat, 4, constant_potential(1.0));
  for (int n = 1; n <= 4; ++n) CHECK(st.fixed_points(n).size() == std::size_t((1 << n) + 1));
}

TEST_CASE("iterated map builds with pulled-back critical structure") {
  RationalMap f3 = cat0().map().iterate(3);
  CHECK(f3.degree() == 64);
  int branching = 0;
  for (const auto& c : f3.critical_points()) branching += c.local_degree - 1;
  CHECK(branching == 2 * 64 - 2);
  // postcritical set is that of the base map
  CHECK(f3.postcritical_set().size() == cat0().map().postcritical_set().size());
}

TEST_CASE("orbit invariants: residuals, primitivity, degree weights") {
  for (const auto& o : store4().orbits()) {
    CHECK(int(o.points.size()) == o.period);
    const RationalMap& f = cat0().map();
    for (int i = 0; i < o.period; ++i)
      CHECK(chordal_dist(f.eval(o.points[i]), o.points[(i + 1) % o.period]) < 1e-10);
    for (int i = 0; i < o.period; ++i)
      for (int j = i + 1; j < o.period; ++j)
        CHECK(chordal_dist(o.points[i], o.points[j]) >= f.tol().dedupe);
    CHECK(o.degree_weight == 1);
    CHECK(o.primitive);
  }
}

TEST_CASE("birkhoff sums") {
  const RationalMap& f = cat0().map();
  Potential c2 = constant_potential(2.0);
  SpherePoint x(0.3, 0.9);
  CHECK(birkhoff_sum(c2, x, 5, f) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(birkhoff_sum(c2, x, 0, f) == 0.0);

  Potential smooth = smooth_sample_potential();
  for (int n : {2, 3}) {
    for (int m : {1, 4}) {
      double lhs = birkhoff_sum(smooth, x, n + m, f);
      double rhs = birkhoff_sum(smooth, x, n, f) + birkhoff_sum(smooth, f.eval_n(x, n), m, f);
      CHECK(std::fabs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("weighted length: constants, rotation invariance, re-summation") {
  const RationalMap& f = cat0().map();
  Potential one = constant_potential(1.0);
  Potential smooth = smooth_sample_potential();
  OrbitStore st = build_orbit_store(cat0(), 3, smooth);
  for (const auto& o : st.orbits()) {
    CHECK(weighted_length(o, one, f) == doctest::Approx(double(o.period)).epsilon(1e-12));
    // value independent of the representative
    for (const auto& p : o.points) {
      double v = birkhoff_sum(smooth, p, o.period, f);
      CHECK(std::fabs(v - o.birkhoff) < 1e-8);
    }
    // independent per-point re-summation
    double direct = 0.0;
    for (const auto& p : o.points) direct += smooth(p);
    CHECK(std::fabs(direct - o.birkhoff) < 1e-8);
  }
}

TEST_CASE("eventual positivity certificates") {
  auto c1 = eventual_positivity(constant_potential(1.0), cat0(), 4, 3);
  REQUIRE(c1.has_value());
  CHECK(c1->n == 1);
  CHECK(c1->margin == doctest::Approx(1.0).epsilon(1e-12));

  auto cs = eventual_positivity(smooth_sample_potential(), cat0(), 4, 3);
  REQUIRE(cs.has_value());
  CHECK(cs->n == 1);
  CHECK(cs->margin >= 0.8);  // |Re z| / (1+|z|^2) <= 1/2

  CHECK(!eventual_positivity(constant_potential(-1.0), cat0(), 6, 3).has_value());
}

TEST_CASE("t_cut pruning guards fixed point access and the certified bound") {
  auto cert = eventual_positivity(constant_potential(1.0), cat0(), 4, 3);
  OrbitStore st = build_orbit_store(cat0(), 4, constant_potential(1.0), 2.5, cert);
  CHECK_THROWS_AS(st.fixed_points(4), Error);  // period 4 pruned at t_cut 2.5
  CHECK(st.fixed_points(2).size() > 0);
  CHECK(st.certified_length_bound() <= 2.5);

  OrbitStore full = build_orbit_store(cat0(), 4, constant_potential(1.0), std::nullopt, cert);
  CHECK(full.certified_length_bound() == doctest::Approx(5.0).epsilon(1e-9));
}
