#include "doctest.h"

#include <cmath>

#include "etm/sphere.hpp"
#include "support/oracles.hpp"

using namespace etm;

namespace {
const RationalMap& f0() {
  static RationalMap f = lattes_f0();
  return f;
}

RationalMap square_map() {
  // z^2 has periodic critical points; structural checks only
  return RationalMap::create(Polynomial::from_reals({0, 0, 1}), Polynomial::from_reals({1}), {}, 64,
                             7, false);
}
}  // namespace

TEST_CASE("chordal distance examples") {
  CHECK(chordal_dist(SpherePoint(0, 0), SpherePoint::inf()) == doctest::Approx(2.0).epsilon(1e-14));
  SpherePoint z(0.37, -1.2);
  CHECK(chordal_dist(z, z) == 0.0);
  CHECK(chordal_dist(SpherePoint(1, 0), SpherePoint(-1, 0)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(chordal_dist(SpherePoint(2, 1), SpherePoint(-0.3, 4)) ==
        chordal_dist(SpherePoint(-0.3, 4), SpherePoint(2, 1)));
}

TEST_CASE("chordal triangle inequality on random triples") {
  Rng rng(2024);
  auto random_point = [&]() {
    if (rng.uniform() < 0.05) return SpherePoint::inf();
    double re = std::tan(M_PI * (rng.uniform() - 0.5) * 0.999);
    double im = std::tan(M_PI * (rng.uniform() - 0.5) * 0.999);
    return SpherePoint(re, im);
  };
  for (int i = 0; i < 1000; ++i) {
    SpherePoint a = random_point(), b = random_point(), c = random_point();
    CHECK(chordal_dist(a, c) <= chordal_dist(a, b) + chordal_dist(b, c) + 1e-12);
  }
}

TEST_CASE("polynomial roots: clustered double roots of (z^2+1)^2") {
  Rng rng(7);
  Polynomial p = Polynomial::from_reals({1, 0, 2, 0, 1});
  auto roots = polynomial_roots(p, rng);
  REQUIRE(roots.size() == 4);
  std::vector<SpherePoint> pts;
  for (auto& z : roots) pts.push_back(SpherePoint(z));
  auto clusters = cluster_points(pts, 1e-7);
  REQUIRE(clusters.size() == 2);
  for (auto& c : clusters) {
    CHECK(c.multiplicity == 2);
    CHECK(std::fabs(std::fabs(c.point.z.imag()) - 1.0) < 1e-6);
    CHECK(std::fabs(c.point.z.real()) < 1e-6);
  }
}

TEST_CASE("f0 evaluation in both charts") {
  CHECK(chordal_dist(f0().eval(SpherePoint(0, 1)), SpherePoint(0, 0)) < 1e-12);
  CHECK(f0().eval(SpherePoint(1, 0)).infinite);
  CHECK(f0().eval(SpherePoint::inf()).infinite);
  // the inverted chart agrees with direct rational arithmetic at large |z|
  SpherePoint big(57.0, -21.0);
  SpherePoint v = f0().eval(big);
  CHECK(v.is_finite());
  CHECK(std::abs(v.z - (std::pow(big.z * big.z + 1.0, 2) / (4.0 * big.z * (big.z * big.z - 1.0)))) <
        1e-9 * std::abs(v.z));
  // continuity across the chart switch at |z| = 1
  SpherePoint just_in(0.9999, 0.3), just_out(1.0001, 0.3);
  CHECK(chordal_dist(f0().eval(just_in), f0().eval(just_out)) < 1e-2);
}

TEST_CASE("derivative: monomial rule, critical point, finite-difference oracle") {
  RationalMap sq = square_map();
  CHECK(std::abs(sq.derivative(SpherePoint(1, 0)) - Complex(2, 0)) < 1e-12);
  CHECK(std::abs(f0().derivative(SpherePoint(0, 1))) < 1e-8);  // critical point i
  for (Complex z : {Complex(2, 0), Complex(0.3, 0.4), Complex(-1.7, 2.2)}) {
    Complex d = f0().derivative(SpherePoint(z));
    Complex fd = oracle::fd_derivative(f0(), z);
    CHECK(std::abs(d - fd) < 1e-6 * (1.0 + std::abs(d)));
  }
}

TEST_CASE("preimages: multiplicities and round trip") {
  Rng rng(5);
  auto pre = f0().preimages(SpherePoint(0, 0), rng);
  int total = 0;
  for (auto& e : pre) total += e.multiplicity;
  CHECK(total == 4);
  REQUIRE(pre.size() == 2);  // {i x2, -i x2}
  for (auto& e : pre) {
    CHECK(e.multiplicity == 2);
    CHECK(std::fabs(std::fabs(e.point.z.imag()) - 1.0) < 1e-6);
  }

  // generic targets: 4 simple preimages, each mapping back within tau_root
  for (int k = 0; k < 8; ++k) {
    SpherePoint w(rng.uniform(-2, 2), rng.uniform(0.2, 2.0));
    auto ps = f0().preimages(w, rng);
    CHECK(ps.size() == 4);
    for (auto& e : ps) {
      CHECK(e.multiplicity == 1);
      CHECK(chordal_dist(f0().eval(e.point), w) < 1e-10);
    }
  }

  // preimages of inf: the poles {0, 1, -1} and inf itself
  auto poles = f0().preimages(SpherePoint::inf(), rng);
  int tot = 0;
  for (auto& e : poles) tot += e.multiplicity;
  CHECK(tot == 4);
  CHECK(poles.size() == 4);
}

TEST_CASE("critical points: z^2 and f0") {
  RationalMap sq = square_map();
  REQUIRE(sq.critical_points().size() == 2);
  bool zero = false, inf = false;
  for (auto& c : sq.critical_points()) {
    if (c.point.infinite) {
      inf = true;
      CHECK(c.local_degree == 2);
    } else {
      zero = true;
      CHECK(std::abs(c.point.z) < 1e-9);
      CHECK(c.local_degree == 2);
    }
  }
  CHECK(zero);
  CHECK(inf);

  int branching = 0;
  bool has_i = false, has_minus_i = false;
  for (auto& c : f0().critical_points()) {
    branching += c.local_degree - 1;
    if (!c.point.infinite && std::abs(c.point.z - Complex(0, 1)) < 1e-8) has_i = true;
    if (!c.point.infinite && std::abs(c.point.z - Complex(0, -1)) < 1e-8) has_minus_i = true;
  }
  CHECK(branching == 6);  // 2 deg - 2
  CHECK(has_i);
  CHECK(has_minus_i);
}

TEST_CASE("local degree product along f^2") {
  RationalMap f2 = f0().iterate(2);
  // at i: deg_{f^2}(i) = deg_f(i) * deg_f(f(i)) = 2 * 1
  CHECK(f2.local_degree(SpherePoint(0, 1)) == f0().local_degree(SpherePoint(0, 1)) *
                                                  f0().local_degree(f0().eval(SpherePoint(0, 1))));
  // at a generic point both are 1
  SpherePoint g(0.31, 0.77);
  CHECK(f2.local_degree(g) == 1);
  CHECK(f0().local_degree(g) == 1);
  // at 1+sqrt(2): critical for f, image 1 regular for f
  SpherePoint c(1.0 + std::sqrt(2.0), 0.0);
  CHECK(f2.local_degree(c) == f0().local_degree(c) * f0().local_degree(f0().eval(c)));
}

TEST_CASE("postcritical sets") {
  RationalMap sq = square_map();
  auto ps = postcritical_set_of(sq, 64);
  REQUIRE(ps.size() == 2);  // {0, inf}
  bool zero = false, inf = false;
  for (auto& p : ps) {
    if (p.infinite) inf = true;
    else if (std::abs(p.z) < 1e-9) zero = true;
  }
  CHECK(zero);
  CHECK(inf);

  auto pf = f0().postcritical_set();
  REQUIRE(pf.size() == 4);  // {-1, 0, 1, inf}
  for (auto& want : {Complex(-1, 0), Complex(0, 0), Complex(1, 0)}) {
    bool found = false;
    for (auto& p : pf)
      if (p.is_finite() && std::abs(p.z - want) < 1e-7) found = true;
    CHECK(found);
  }

  // z^2 + 0.3: the critical orbit escapes; the closure must fail at budget 64
  try {
    RationalMap esc = RationalMap::create(Polynomial::from_reals({0.3, 0, 1}),
                                          Polynomial::from_reals({1}), {}, 64, 7, false);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPostcriticallyFinite);
  }
}

TEST_CASE("map construction rejects bad inputs") {
  // shared root at z = 0
  CHECK_THROWS_AS(RationalMap::create(Polynomial::from_reals({0, 0, 1, 1}),
                                      Polynomial::from_reals({0, 1})),
                  Error);
  // periodic critical point (z^2) rejected under the class check
  CHECK_THROWS_AS(RationalMap::create(Polynomial::from_reals({0, 0, 1}),
                                      Polynomial::from_reals({1})),
                  Error);
  // degree below 2
  CHECK_THROWS_AS(RationalMap::create(Polynomial::from_reals({1, 1}),
                                      Polynomial::from_reals({1})),
                  Error);
}

TEST_CASE("preimage multiplicity census on random targets") {
  Rng rng(99);
  for (int k = 0; k < 20; ++k) {
    SpherePoint w = rng.uniform() < 0.2
                        ? SpherePoint::inf()
                        : SpherePoint(rng.uniform(-3, 3), rng.uniform(-3, 3));
    auto pre = f0().preimages(w, rng);
    int total = 0;
    for (auto& e : pre) total += e.multiplicity;
    CHECK(total == f0().degree());
  }
}
