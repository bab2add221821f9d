#include "etm/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace etm {

namespace {
constexpr double kLiftMargin = 1e-13;
double cabs2(Complex z) { return z.real() * z.real() + z.imag() * z.imag(); }
}  // namespace

void validate_potential(const Potential& phi) {
  double v_inf = phi(SpherePoint::inf());
  if (!std::isfinite(v_inf))
    fail(ErrorKind::BadInput, "potential: value at inf is not finite");
  Rng rng(20240207);
  for (int k = 0; k < 10000; ++k) {
    double u = 2.0 * rng.uniform() - 1.0;          // z-coordinate on the sphere
    double t = 2.0 * M_PI * rng.uniform();
    double r = std::sqrt(std::max(0.0, 1.0 - u * u));
    // stereographic pullback of a uniform-ish sphere sample
    SpherePoint p = (1.0 - u < 1e-12)
                        ? SpherePoint::inf()
                        : SpherePoint(r * std::cos(t) / (1.0 - u), r * std::sin(t) / (1.0 - u));
    double v = phi(p);
    if (!std::isfinite(v) || std::fabs(v) > 1e12)
      fail(ErrorKind::BadInput, "potential: unbounded or non-finite on the sphere sample");
  }
}

Potential constant_potential(double c) {
  Potential p;
  p.value = [c](const SpherePoint&) { return c; };
  p.hoelder_exponent = 1.0;
  p.description = "constant " + std::to_string(c);
  p.differentiable = true;
  return p;
}

Potential smooth_sample_potential(double base, double amp) {
  Potential p;
  p.value = [base, amp](const SpherePoint& z) {
    if (z.infinite) return base;
    return base + amp * z.z.real() / (1.0 + cabs2(z.z));
  };
  p.hoelder_exponent = 1.0;
  std::ostringstream os;
  os << "smooth " << base << " + " << amp << " Re(z)/(1+|z|^2)";
  p.description = os.str();
  p.differentiable = true;
  return p;
}

Potential coboundary_potential(std::shared_ptr<const RationalMap> f, double base, double amp) {
  auto u = [amp](const SpherePoint& z) {
    if (z.infinite) return 0.0;
    return amp * z.z.real() / (1.0 + cabs2(z.z));
  };
  Potential p;
  p.value = [f, u, base](const SpherePoint& z) { return base + u(f->eval(z)) - u(z); };
  p.hoelder_exponent = 1.0;
  std::ostringstream os;
  os << "coboundary " << base << " + u o f - u, amp " << amp;
  p.description = os.str();
  p.differentiable = true;
  return p;
}

double birkhoff_sum(const Potential& phi, const SpherePoint& x, int n, const RationalMap& f) {
  double s = 0.0;
  SpherePoint p = x;
  for (int j = 0; j < n; ++j) {
    s += phi(p);
    p = f.eval(p);
  }
  return s;
}

double weighted_length(const PeriodicOrbit& orbit, const Potential& phi, const RationalMap& f) {
  return birkhoff_sum(phi, orbit.representative, orbit.period, f);
}

std::uint64_t trace_of_power(const TileCatalog& cat, int n) {
  int m = cat.tile_count();
  auto A = cat.transition_matrix();
  std::vector<std::vector<std::uint64_t>> P(m, std::vector<std::uint64_t>(m, 0));
  for (int i = 0; i < m; ++i) P[i][i] = 1;
  for (int step = 0; step < n; ++step) {
    std::vector<std::vector<std::uint64_t>> Q(m, std::vector<std::uint64_t>(m, 0));
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) {
        if (P[i][k] == 0) continue;
        for (int j = 0; j < m; ++j)
          if (A[k][j]) Q[i][j] += P[i][k];
      }
    P = std::move(Q);
  }
  std::uint64_t tr = 0;
  for (int i = 0; i < m; ++i) tr += P[i][i];
  return tr;
}

std::vector<TileWord> periodic_words(const TileCatalog& cat, int n, std::size_t budget_words) {
  if (n < 1) fail(ErrorKind::BadInput, "periodic_words: n must be >= 1");
  double expect = 2.0 * std::pow(double(cat.degree()), double(n));
  if (expect > double(budget_words)) fail(ErrorKind::BudgetExceeded, "periodic_words: level too deep");

  std::vector<TileWord> out;
  TileWord w(n);
  std::function<void(int)> dfs = [&](int k) {
    if (k == n) {
      if (cat.transition(w[n - 1], w[0])) out.push_back(w);
      return;
    }
    for (int t = 0; t < cat.tile_count(); ++t) {
      if (k > 0 && !cat.transition(w[k - 1], t)) continue;
      w[k] = t;
      dfs(k + 1);
    }
  };
  dfs(0);
  return out;
}

TileWord canonical_rotation(const TileWord& w) {
  TileWord best = w;
  TileWord rot = w;
  for (std::size_t r = 1; r < w.size(); ++r) {
    std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    if (rot < best) best = rot;
  }
  return best;
}

bool is_primitive_word(const TileWord& w) {
  std::size_t n = w.size();
  for (std::size_t p = 1; p <= n / 2; ++p) {
    if (n % p != 0) continue;
    bool rep = true;
    for (std::size_t i = p; i < n && rep; ++i)
      if (w[i] != w[i % p]) rep = false;
    if (rep) return false;
  }
  return true;
}

namespace {

// Points this far out are chordally indistinguishable from inf at tau_dedupe
// scale; storing them as inf keeps dumps and oracle matching clean.
SpherePoint canonicalize_inf(const SpherePoint& p) {
  if (p.is_finite() && std::abs(p.z) > 1e10) return SpherePoint::inf();
  return p;
}

// Chart-aware Newton on f^n(z) = z with numerically differenced derivative.
SpherePoint newton_fixed_point(const RationalMap& f, int n, SpherePoint x) {
  auto orbit_end = [&](const SpherePoint& p) { return f.eval_n(p, n); };

  for (int it = 0; it < 60; ++it) {
    double res = chordal_dist(orbit_end(x), x);
    if (res < 1e-13) break;
    bool inverted = x.infinite || std::abs(x.z) > 1.0;
    Complex w = x.infinite ? Complex(0, 0) : (inverted ? 1.0 / x.z : x.z);
    auto G = [&](Complex ww) -> std::optional<Complex> {
      SpherePoint p = inverted ? (std::abs(ww) < 1e-300 ? SpherePoint::inf() : SpherePoint(1.0 / ww))
                               : SpherePoint(ww);
      SpherePoint q = orbit_end(p);
      if (inverted) {
        if (q.infinite) return Complex(0, 0);
        if (std::abs(q.z) < 1e-2) return std::nullopt;  // left the chart
        return 1.0 / q.z;
      }
      if (q.infinite || std::abs(q.z) > 1e2) return std::nullopt;
      return q.z;
    };
    auto g0 = G(w);
    if (!g0) break;
    double h = 1e-7 * (1.0 + std::abs(w));
    auto gp = G(w + Complex(h, 0)), gm = G(w - Complex(h, 0));
    if (!gp || !gm) break;
    Complex D = (*gp - *gm) / (2.0 * h);
    Complex denom = D - Complex(1, 0);
    if (std::abs(denom) < 1e-12) break;
    Complex wn = w - (*g0 - w) / denom;
    if (std::isnan(wn.real()) || std::isnan(wn.imag())) break;
    SpherePoint xn = inverted ? (std::abs(wn) < 1e-300 ? SpherePoint::inf() : SpherePoint(1.0 / wn))
                              : SpherePoint(wn);
    if (chordal_dist(orbit_end(xn), xn) <= res) x = xn;
    else break;
  }
  return canonicalize_inf(x);
}

// Periodic points on the invariant curve itself. Points of the curve's grand
// orbit can lack any length-k itinerary (the factor map is non-injective
// there), so the symbolic enumeration alone misses them; since they satisfy
// f^j(x) in C for large j and are periodic, they all lie exactly on C and are
// found by a sign-change sweep of the one-dimensional restriction f|_C.
std::vector<SpherePoint> boundary_periodic_candidates(const TileCatalog& cat, int k) {
  const RationalMap& f = cat.map();
  const InvariantCurve& curve = cat.curve();
  auto point_at = [&](double t) {
    return curve.from_chart(Side::Black, Complex(std::cos(t), std::sin(t)));
  };
  auto angle_of = [&](const SpherePoint& p) { return std::arg(curve.to_chart(Side::Black, p)); };
  auto delta = [&](double t) -> std::optional<double> {
    SpherePoint z = point_at(t);
    SpherePoint w = f.eval_n(z, k);
    if (curve.dist(w) > 1e-5) return std::nullopt;  // drifted off the curve numerically
    return std::remainder(angle_of(w) - t, 2.0 * M_PI);
  };

  const int N = std::max(8192, 128 << std::min(k, 12));
  std::vector<SpherePoint> out;
  std::optional<double> prev = delta(2.0 * M_PI * 0.5 / N);
  double prev_t = 2.0 * M_PI * 0.5 / N;
  for (int i = 1; i <= N; ++i) {
    double t = 2.0 * M_PI * (i + 0.5) / N;
    std::optional<double> cur = delta(t);
    if (prev && cur && *prev * *cur <= 0.0 && std::fabs(*prev) < 1.2 && std::fabs(*cur) < 1.2 &&
        std::fabs(*prev - *cur) < 1.0) {
      double a = prev_t, b = t, fa = *prev;
      for (int it = 0; it < 60; ++it) {
        double m = 0.5 * (a + b);
        auto fm = delta(m);
        if (!fm) break;
        if (fa * *fm <= 0.0) {
          b = m;
        } else {
          a = m;
          fa = *fm;
        }
      }
      SpherePoint x = canonicalize_inf(point_at(0.5 * (a + b)));
      x = newton_fixed_point(f, k, x);
      if (chordal_dist(f.eval_n(x, k), x) < f.tol().root) {
        bool dup = false;
        for (const auto& q : out)
          if (chordal_dist(q, x) <= f.tol().dedupe) dup = true;
        if (!dup) out.push_back(x);
      }
    }
    prev = cur;
    prev_t = t;
  }
  return out;
}

}  // namespace

SpherePoint locate_periodic_point(const TileCatalog& cat, const TileWord& w) {
  if (!cat.is_cyclically_admissible(w))
    fail(ErrorKind::PreconditionViolated, "locate_periodic_point: word not cyclically admissible");
  const RationalMap& f = cat.map();
  const int n = static_cast<int>(w.size());

  SpherePoint x = cat.base_point(cat.one_tiles()[w.back()].color);
  for (int sweep = 0; sweep < 200; ++sweep) {
    SpherePoint prev = x;
    try {
      for (int k = n; k-- > 0;) x = inverse_branch(cat, cat.one_tiles()[w[k]], x, kLiftMargin, false);
    } catch (const Error&) {
      // the chain tightened onto the curve; Newton finishes from the last
      // full sweep (boundary periodic point)
      x = prev;
      break;
    }
    if (chordal_dist(x, prev) < 1e-12) break;
  }
  x = newton_fixed_point(f, n, x);

  double res = chordal_dist(f.eval_n(x, n), x);
  if (res >= f.tol().root) {
    std::ostringstream os;
    os << "locate_periodic_point: residual " << res << " at word of period " << n;
    fail(ErrorKind::NumericFailure, os.str());
  }
  return x;
}

OrbitStore build_orbit_store(const TileCatalog& cat, int n_max, const Potential& phi,
                             std::optional<double> t_cut, std::optional<PositivityCertificate> cert) {
  if (n_max < 1) fail(ErrorKind::BadInput, "build_orbit_store: n_max must be >= 1");
  if (t_cut && !cert)
    fail(ErrorKind::PreconditionViolated,
         "build_orbit_store: t_cut pruning requires an eventual-positivity certificate");
  const RationalMap& f = cat.map();
  const double dedupe = f.tol().dedupe;

  OrbitStore store;
  store.cat_ = &cat;
  store.n_max_ = n_max;
  store.phi_ = phi;
  store.cert_ = cert;
  store.t_cut_ = t_cut;
  store.fixed_.resize(n_max + 1);
  store.prim_.resize(n_max + 1);
  store.pruned_.assign(n_max + 1, false);

  PointIndex orbit_points(dedupe);  // every point of every registered orbit

  // registers the orbit through pts[0] at its minimal geometric period, if new
  auto register_orbit = [&](const std::vector<SpherePoint>& pts_full, const TileWord& word) {
    if (orbit_points.find(pts_full[0]) >= 0) return;
    const int max_period = static_cast<int>(pts_full.size());
    int period = max_period;
    for (int k = 1; k < max_period; ++k) {
      if (max_period % k != 0) continue;
      if (chordal_dist(pts_full[k], pts_full[0]) <= dedupe) {
        period = k;
        break;
      }
    }
    std::vector<SpherePoint> pts(pts_full.begin(), pts_full.begin() + period);
    PeriodicOrbit orbit;
    orbit.period = period;
    orbit.representative = pts[0];
    orbit.points = pts;
    orbit.primitive = true;
    orbit.word = word;
    orbit.birkhoff = birkhoff_sum(phi, pts[0], period, f);
    orbit.degree_weight = 1;
    for (const auto& p : pts) orbit.degree_weight *= f.local_degree(p);
    int id = static_cast<int>(store.orbits_.size());
    for (const auto& p : pts) orbit_points.insert(p, id);
    store.orbits_.push_back(std::move(orbit));
  };

  for (int n = 1; n <= n_max; ++n) {
    if (t_cut && cert) {
      double min_len = std::floor(double(n) / cert->n) * cert->margin;
      if (min_len > *t_cut) {
        store.pruned_[n] = true;  // provably above the cut
        continue;
      }
    }

    // symbolically primitive necklaces of period n
    std::vector<TileWord> necklaces;
    for (auto& w : periodic_words(cat, n)) {
      if (!is_primitive_word(w)) continue;
      if (canonical_rotation(w) != w) continue;
      necklaces.push_back(std::move(w));
    }

    std::vector<std::vector<SpherePoint>> orbits_pts(necklaces.size());
    parallel_for(necklaces.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        std::vector<SpherePoint>& pts = orbits_pts[i];
        pts.push_back(locate_periodic_point(cat, necklaces[i]));
        for (int j = 1; j < n; ++j) pts.push_back(newton_fixed_point(f, n, f.eval(pts.back())));
      }
    });

    // per-point counts of primitive length-n words (n rotations per necklace)
    std::vector<FixRecord>& prim = store.prim_[n];
    PointIndex prim_idx(dedupe);
    auto add_prim = [&](const SpherePoint& p, int count) {
      int id = prim_idx.find(p);
      if (id >= 0) {
        prim[id].word_count += count;
        return;
      }
      prim_idx.insert(p, static_cast<int>(prim.size()));
      FixRecord r;
      r.point = p;
      r.word_count = count;
      prim.push_back(r);
    };

    for (std::size_t i = 0; i < necklaces.size(); ++i) {
      for (const auto& p : orbits_pts[i]) add_prim(p, 1);
      // a symbolically primitive word can still collapse onto a shorter
      // geometric cycle (boundary points carry several itineraries)
      register_orbit(orbits_pts[i], necklaces[i]);
    }

    // periodic points on the curve itself may lack any length-n itinerary;
    // sweep the one-dimensional restriction to pick them up
    for (const auto& x : boundary_periodic_candidates(cat, n)) {
      std::vector<SpherePoint> pts;
      pts.push_back(x);
      for (int j = 1; j < n; ++j) pts.push_back(newton_fixed_point(f, n, f.eval(pts.back())));
      register_orbit(pts, TileWord{});
    }
  }

  // geometric fixed points of f^n: union of the period-k orbit points over
  // k | n, carrying the symbolic word multiplicities (0 for points with no
  // length-n itinerary)
  for (int n = 1; n <= n_max; ++n) {
    if (store.pruned_[n]) continue;
    bool divisors_ok = true;
    for (int k = 1; k <= n; ++k)
      if (n % k == 0 && store.pruned_[k]) divisors_ok = false;
    if (!divisors_ok) continue;

    std::vector<FixRecord>& fx = store.fixed_[n];
    PointIndex fx_idx(dedupe);
    for (const auto& o : store.orbits_) {
      if (n % o.period != 0) continue;
      for (const auto& p : o.points) {
        if (fx_idx.find(p) >= 0) continue;
        fx_idx.insert(p, static_cast<int>(fx.size()));
        fx.push_back({p, 0, 0.0});
      }
    }
    for (int k = 1; k <= n; ++k) {
      if (n % k != 0) continue;
      for (const auto& r : store.prim_[k]) {
        int id = fx_idx.find(r.point);
        if (id < 0)
          fail(ErrorKind::NumericFailure, "build_orbit_store: word point missing from orbit census");
        fx[id].word_count += r.word_count;
      }
    }
    for (auto& r : fx) r.birkhoff = birkhoff_sum(phi, r.point, n, f);
  }
  return store;
}

std::vector<const PeriodicOrbit*> OrbitStore::orbits_of_period(int n) const {
  std::vector<const PeriodicOrbit*> out;
  for (const auto& o : orbits_)
    if (o.period == n) out.push_back(&o);
  return out;
}

const std::vector<FixRecord>& OrbitStore::fixed_points(int n) const {
  if (n < 1 || n > n_max_) {
    std::ostringstream os;
    os << "fixed_points: period " << n << " outside store (n_max " << n_max_ << ")";
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  for (int k = 1; k <= n; ++k)
    if (n % k == 0 && pruned_[k])
      fail(ErrorKind::PreconditionViolated, "fixed_points: a divisor period was pruned by t_cut");
  return fixed_[n];
}

double OrbitStore::certified_length_bound() const {
  if (!cert_) return 0.0;
  // periods n > n_max have floor(n/N)*margin >= floor((n_max+1)/N)*margin
  double bound = std::floor(double(n_max_ + 1) / cert_->n) * cert_->margin - 1e-12;
  for (int n = 1; n <= n_max_; ++n)
    if (pruned_[n] && t_cut_) bound = std::min(bound, *t_cut_);
  return bound;
}

std::optional<PositivityCertificate> eventual_positivity(const Potential& phi, const TileCatalog& cat,
                                                         int n_probe, int level) {
  TileHierarchy hier(cat, level, false);
  const auto& pts = hier.level(level).point;
  const RationalMap& f = cat.map();

  std::vector<double> sums(pts.size(), 0.0);
  std::vector<SpherePoint> cur(pts.begin(), pts.end());
  for (int n = 1; n <= n_probe; ++n) {
    double inf_s = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sums[i] += phi(cur[i]);
      cur[i] = f.eval(cur[i]);
      inf_s = std::min(inf_s, sums[i]);
    }
    if (inf_s > 0.0) return PositivityCertificate{n, inf_s};
  }
  return std::nullopt;
}

}  // namespace etm
