#include "doctest.h"

#include <cmath>

#include "etm/counting.hpp"
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
}  // namespace

TEST_CASE("Li: domain, exact zero, oracle agreement, monotonicity") {
  CHECK(li(2.0) == 0.0);
  CHECK_THROWS_AS(li(1.5), Error);

  // frozen from the adaptive Simpson oracle
  CHECK(li(10.0) == doctest::Approx(5.12043572466980).epsilon(1e-11));
  for (double y : {3.0, 10.0, 100.0, 1e4}) {
    double got = li(y);
    double want = oracle::li_simpson(y);
    CHECK(std::fabs(got - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
  }

  double prev = 0.0;
  for (double y : {2.5, 4.0, 9.0, 50.0, 1e3}) {
    double v = li(y);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("Li asymptote: Li(y) * log(y) / y approaches 1") {
  double prev_gap = 1e9;
  for (double y : {1e3, 1e5, 1e7}) {
    double gap = std::fabs(li(y) * std::log(y) / y - 1.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.08);
}

TEST_CASE("pi_count: step structure for a constant potential") {
  Potential one = constant_potential(1.0);
  auto cert = eventual_positivity(one, cat0(), 4, 3);
  OrbitStore st = build_orbit_store(cat0(), 4, one, std::nullopt, cert);

  CHECK(pi_count(st, 0.5) == 0);  // below the minimal weighted length

  // pi(n + 0.5) = number of primitive orbits of period <= n (lengths = periods)
  for (int n = 1; n <= 4; ++n) {
    long long want = 0;
    for (const auto& o : st.orbits())
      if (o.period <= n) ++want;
    CHECK(pi_count(st, n + 0.5) == want);
  }

  // completeness error names the required n_max
  try {
    pi_count(st, 20.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PreconditionViolated);
    CHECK(std::string(e.what()).find("N_max") != std::string::npos);
  }
}

TEST_CASE("pi is a non-decreasing step function with steps at orbit lengths") {
  Potential smooth = smooth_sample_potential();
  auto cert = eventual_positivity(smooth, cat0(), 8, 3);
  OrbitStore st = build_orbit_store(cat0(), 5, smooth, std::nullopt, cert);

  double cap = st.certified_length_bound();
  long long prev = 0;
  for (double t = 0.5; t <= cap; t += 0.25) {
    long long p = pi_count(st, t);
    CHECK(p >= prev);
    prev = p;
  }
  // crossing one orbit length increments the count
  double l = 0;
  for (const auto& o : st.orbits())
    if (o.birkhoff < cap) l = std::max(l, o.birkhoff);
  CHECK(pi_count(st, l + 1e-9) == pi_count(st, l - 1e-9) + 1);
}

TEST_CASE("pot report: flags and columns") {
  Potential one = constant_potential(1.0);
  auto cert1 = eventual_positivity(one, cat0(), 4, 3);
  OrbitStore st1 = build_orbit_store(cat0(), 5, one, std::nullopt, cert1);
  CountReport r1 = pot_report(st1, std::log(4.0), {2.0, 3.0, 4.0, 5.0});
  CHECK(r1.oscillation_flagged);  // lattice lengths: co-homologous case
  CHECK(r1.length_spread < 1e-9);

  Potential smooth = smooth_sample_potential();
  auto cert = eventual_positivity(smooth, cat0(), 8, 3);
  OrbitStore st = build_orbit_store(cat0(), 5, smooth, std::nullopt, cert);
  double s0 = solve_s0(cat0().map(), smooth, 8, cat0().base_point(Side::Black), *cert);
  CountReport r = pot_report(st, s0, {2.0, 3.0, 4.0, 5.0});
  CHECK(!r.oscillation_flagged);
  CHECK(r.length_spread > 0.01);
  for (std::size_t i = 0; i < r.t_grid.size(); ++i) {
    CHECK(r.li_vals[i] >= 0.0);
    CHECK(r.secondary[i] == doctest::Approx(std::exp(s0 * r.t_grid[i]) / (s0 * r.t_grid[i])));
  }
  // secondary asymptote: Li(e^{s0 T}) * s0 T / e^{s0 T} drifts toward 1
  double g1 = std::fabs(r.li_vals[0] / r.secondary[0] - 1.0);
  double g2 = std::fabs(r.li_vals.back() / r.secondary.back() - 1.0);
  CHECK(g2 < g1);
}
