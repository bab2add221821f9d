#include "etm/tiles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace etm {

namespace {

constexpr double kLiftMargin = 1e-13;  // internal floor for pullback targets

double cabs2(Complex z) { return z.real() * z.real() + z.imag() * z.imag(); }

}  // namespace

InvariantCurve InvariantCurve::extended_real_line() {
  InvariantCurve c;
  c.kind_ = Kind::ExtendedRealLine;
  return c;
}

InvariantCurve InvariantCurve::circle(Complex center, double radius) {
  if (!(radius > 0)) fail(ErrorKind::BadInput, "curve: circle radius must be positive");
  InvariantCurve c;
  c.kind_ = Kind::Circle;
  c.center_ = center;
  c.radius_ = radius;
  return c;
}

double InvariantCurve::dist(const SpherePoint& z) const {
  if (kind_ == Kind::ExtendedRealLine) {
    if (z.infinite) return 0.0;
    // exact chordal distance to the great circle that R-hat maps to
    double b = 2.0 * z.z.imag() / (1.0 + cabs2(z.z));
    double r = std::sqrt(std::max(0.0, 1.0 - b * b));
    return std::sqrt((1.0 - r) * (1.0 - r) + b * b);
  }
  double edge = std::hypot(center_.real(), center_.imag()) + radius_;
  if (z.infinite) return 2.0 / std::sqrt(1.0 + edge * edge);
  // chordal-density scaled Euclidean gap; exact enough near the curve
  double de = std::abs(std::abs(z.z - center_) - radius_);
  Complex nearest = center_ + radius_ * (std::abs(z.z - center_) < 1e-300
                                             ? Complex(1, 0)
                                             : (z.z - center_) / std::abs(z.z - center_));
  return 2.0 * de / (std::sqrt(1.0 + cabs2(z.z)) * std::sqrt(1.0 + cabs2(nearest)));
}

Side InvariantCurve::side(const SpherePoint& z) const {
  if (kind_ == Kind::ExtendedRealLine) {
    if (z.infinite) fail(ErrorKind::PreconditionViolated, "side: point lies on the curve");
    return z.z.imag() > 0 ? Side::Black : Side::White;
  }
  if (z.infinite) return Side::White;
  return std::abs(z.z - center_) < radius_ ? Side::Black : Side::White;
}

std::vector<SpherePoint> InvariantCurve::samples(int n) const {
  std::vector<SpherePoint> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * M_PI * k / n;
    if (kind_ == Kind::ExtendedRealLine) {
      // parameter via the Cayley chart: w = e^{it} on the unit circle
      Complex w(std::cos(t), std::sin(t));
      if (std::abs(w - Complex(1, 0)) < 1e-12) {
        out.push_back(SpherePoint::inf());
      } else {
        Complex z = Complex(0, 1) * (Complex(1, 0) + w) / (Complex(1, 0) - w);
        out.push_back(SpherePoint(Complex(z.real(), 0.0)));  // clamp to the line exactly
      }
    } else {
      out.push_back(SpherePoint(center_ + radius_ * Complex(std::cos(t), std::sin(t))));
    }
  }
  return out;
}

Complex InvariantCurve::to_chart(Side s, const SpherePoint& z) const {
  if (kind_ == Kind::ExtendedRealLine) {
    const Complex i(0, 1);
    if (z.infinite) return Complex(1, 0);
    return s == Side::Black ? (z.z - i) / (z.z + i) : (z.z + i) / (z.z - i);
  }
  if (s == Side::Black) {
    if (z.infinite) fail(ErrorKind::PreconditionViolated, "to_chart: inf is not inside the circle");
    return (z.z - center_) / radius_;
  }
  if (z.infinite) return Complex(0, 0);
  return radius_ / (z.z - center_);
}

SpherePoint InvariantCurve::from_chart(Side s, Complex w) const {
  if (kind_ == Kind::ExtendedRealLine) {
    const Complex i(0, 1);
    Complex denom = Complex(1, 0) - w;
    if (std::abs(denom) < 1e-300) return SpherePoint::inf();
    Complex z = s == Side::Black ? i * (Complex(1, 0) + w) / denom : -i * (Complex(1, 0) + w) / denom;
    return SpherePoint(z);
  }
  if (s == Side::Black) return SpherePoint(center_ + radius_ * w);
  if (std::abs(w) < 1e-300) return SpherePoint::inf();
  return SpherePoint(center_ + radius_ / w);
}

void InvariantCurve::verify_invariance(const RationalMap& f, double tau, int n_samples) const {
  for (const auto& p : f.postcritical_set())
    if (dist(p) > tau) {
      std::ostringstream os;
      os << "curve: postcritical point off the curve by " << dist(p);
      fail(ErrorKind::BadInput, os.str());
    }
  int bad = 0;
  for (const auto& s : samples(n_samples)) {
    SpherePoint img = f.eval(s);
    if (dist(img) > tau) ++bad;
  }
  if (bad > 0) {
    std::ostringstream os;
    os << "curve: not f-invariant (" << bad << "/" << n_samples << " samples leave the curve)";
    fail(ErrorKind::BadInput, os.str());
  }
}

namespace {

// Newton solve of f(w) = target from w0, staying on one side of the curve.
struct LiftResult {
  Complex w;
  bool ok = false;
};

LiftResult newton_lift(const RationalMap& f, const InvariantCurve& curve, Side stay, Complex w0,
                       Complex target, double jump_cap) {
  Complex w = w0;
  for (int it = 0; it < 40; ++it) {
    SpherePoint wp(w);
    SpherePoint fw = f.eval(wp);
    if (fw.infinite) return {w, false};
    Complex r = fw.z - target;
    double res = 2.0 * std::abs(r) / ((1.0 + std::abs(fw.z)) * (1.0 + std::abs(target)));
    if (res < 1e-14) {
      if (chordal_dist(SpherePoint(w), SpherePoint(w0)) > jump_cap) return {w, false};
      if (curve.side(SpherePoint(w)) != stay) return {w, false};
      return {w, true};
    }
    Complex dw;
    try {
      dw = f.derivative(wp);
    } catch (const Error&) {
      return {w, false};
    }
    if (std::abs(dw) < 1e-250) return {w, false};
    Complex step = r / dw;
    if (std::abs(step) > 0.5 * (1.0 + std::abs(w))) return {w, false};
    w -= step;
    if (std::isnan(w.real()) || std::isnan(w.imag())) return {w, false};
  }
  return {w, false};
}

}  // namespace

SpherePoint inverse_branch(const TileCatalog& cat, const OneTile& tile, const SpherePoint& z,
                           double min_margin, bool check_ambiguity) {
  const RationalMap& f = cat.map();
  const InvariantCurve& curve = cat.curve();
  if (z.infinite || curve.dist(z) < std::max(min_margin, kLiftMargin)) {
    std::ostringstream os;
    os << "inverse_branch: target too close to the curve (dist "
       << (z.infinite ? 0.0 : curve.dist(z)) << ", margin " << min_margin << ")";
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  if (curve.side(z) != tile.color)
    fail(ErrorKind::PreconditionViolated, "inverse_branch: target side does not match tile color");

  const Side stay = tile.side;
  const Side target_side = tile.color;
  Complex a = curve.to_chart(target_side, cat.base_point(target_side));
  Complex b = curve.to_chart(target_side, z);

  Complex w = tile.sample.z;  // samples are finite interior points
  double t = 0.0, dt = 1.0;
  int fails = 0;
  while (t < 1.0) {
    double tn = std::min(1.0, t + dt);
    SpherePoint target = curve.from_chart(target_side, a + (b - a) * tn);
    if (target.infinite) {  // chart midpoint can hit inf only for degenerate curves
      dt *= 0.5;
      ++fails;
      continue;
    }
    LiftResult res = newton_lift(f, curve, stay, w, target.z, 0.35);
    if (res.ok) {
      w = res.w;
      t = tn;
      dt = std::min(1.0, dt * 1.6);
    } else {
      dt *= 0.5;
      if (++fails > 90)
        fail(ErrorKind::Ambiguous, "inverse_branch: path lift stalled (target near a branch cut)");
    }
  }

  // final polish against the exact target
  LiftResult fin = newton_lift(f, curve, stay, w, z.z, 0.35);
  if (!fin.ok) fail(ErrorKind::NumericFailure, "inverse_branch: final polish failed");
  SpherePoint out(fin.w);
  double res = chordal_dist(f.eval(out), z);
  if (res >= f.tol().root) {
    std::ostringstream os;
    os << "inverse_branch: residual " << res << " over tolerance";
    fail(ErrorKind::NumericFailure, os.str());
  }

  if (check_ambiguity) {
    Rng rng(101);
    auto pre = f.preimages(z, rng);
    for (const auto& e : pre) {
      if (chordal_dist(e.point, out) <= f.tol().cluster) continue;
      if (!e.point.infinite && curve.dist(e.point) > kLiftMargin &&
          curve.side(e.point) == stay && chordal_dist(e.point, out) <= 4.0 * f.tol().cluster)
        fail(ErrorKind::Ambiguous, "inverse_branch: two same-side preimages nearly coincide");
    }
  }
  return out;
}

TileCatalog build_catalog(std::shared_ptr<const RationalMap> f, const InvariantCurve& curve,
                          double metric_exponent) {
  const Tolerances& tol = f->tol();
  curve.verify_invariance(*f, tol.curve);

  TileCatalog cat;
  cat.map_ = f;
  cat.curve_ = curve;
  cat.metric_exponent_ = metric_exponent;

  // base and probe points per side, given in the convex chart of the side
  const std::vector<Complex> chart_probes = {Complex(0.02, 0.03), Complex(0.52, 0.31),
                                             Complex(-0.57, 0.22), Complex(0.08, -0.55),
                                             Complex(-0.11, 0.78)};
  for (Side s : {Side::Black, Side::White}) {
    int si = static_cast<int>(s);
    cat.base_[si] = curve.from_chart(s, Complex(-0.21, 0.13));
    for (Complex w : chart_probes) cat.probes_[si].push_back(curve.from_chart(s, w));
  }

  // one-tiles: preimages of the side base points, classified by side
  Rng rng(31);
  std::vector<OneTile> tiles;
  for (Side color : {Side::Black, Side::White}) {
    const SpherePoint& y = cat.base_[static_cast<int>(color)];
    auto pre = f->preimages(y, rng);
    int count = 0;
    for (const auto& e : pre) {
      if (e.multiplicity != 1)
        fail(ErrorKind::NumericFailure, "build_catalog: base point hit a critical value");
      if (e.point.infinite || curve.dist(e.point) < 10.0 * tol.curve)
        fail(ErrorKind::NumericFailure,
             "build_catalog: a sample preimage fell within 10*tau_curve of the curve");
      OneTile t;
      t.side = curve.side(e.point);
      t.color = color;
      t.sample = e.point;
      tiles.push_back(t);
      ++count;
    }
    if (count != f->degree())
      fail(ErrorKind::NumericFailure, "build_catalog: color census violated");
  }

  std::sort(tiles.begin(), tiles.end(), [&](const OneTile& a, const OneTile& b) {
    if (a.side != b.side) return static_cast<int>(a.side) < static_cast<int>(b.side);
    if (a.color != b.color) return static_cast<int>(a.color) < static_cast<int>(b.color);
    Complex ca = curve.to_chart(a.side, a.sample), cb = curve.to_chart(b.side, b.sample);
    if (ca.real() != cb.real()) return ca.real() < cb.real();
    return ca.imag() < cb.imag();
  });
  for (std::size_t i = 0; i < tiles.size(); ++i) tiles[i].id = static_cast<int>(i);
  cat.tiles_ = std::move(tiles);

  if (static_cast<int>(cat.tiles_.size()) != 2 * f->degree())
    fail(ErrorKind::NumericFailure, "build_catalog: tile count != 2 deg f");
  for (Side c : {Side::Black, Side::White}) {
    auto& lst = cat.by_color_[static_cast<int>(c)];
    for (const auto& t : cat.tiles_)
      if (t.color == c) lst.push_back(t.id);
    if (static_cast<int>(lst.size()) != f->degree())
      fail(ErrorKind::NumericFailure, "build_catalog: color class size != deg f");
  }
  cat.mixing_power();  // throws if not mixing

  // fitted expansion rate from median probe diameters over shallow levels
  {
    TileHierarchy hier(cat, 4, true);
    std::vector<double> logmed;
    for (int l = 1; l <= 4; ++l) {
      std::vector<double> d = hier.level(l).diam;
      std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
      logmed.push_back(std::log(d[d.size() / 2]));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logmed.size(); ++i) {
      double x = double(i + 1);
      sx += x;
      sy += logmed[i];
      sxx += x * x;
      sxy += x * logmed[i];
    }
    double n = double(logmed.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    cat.expansion_estimate_ = std::exp(-slope);
  }
  return cat;
}

std::vector<std::vector<int>> TileCatalog::transition_matrix() const {
  int n = tile_count();
  std::vector<std::vector<int>> A(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A[i][j] = transition(i, j) ? 1 : 0;
  return A;
}

int TileCatalog::mixing_power() const {
  int n = tile_count();
  auto A = transition_matrix();
  std::vector<std::vector<std::uint64_t>> P(n, std::vector<std::uint64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) P[i][j] = A[i][j];
  for (int power = 1; power <= 2 * degree(); ++power) {
    bool all = true;
    for (int i = 0; i < n && all; ++i)
      for (int j = 0; j < n && all; ++j)
        if (P[i][j] == 0) all = false;
    if (all) return power;
    std::vector<std::vector<std::uint64_t>> Q(n, std::vector<std::uint64_t>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        if (P[i][k] == 0) continue;
        std::uint64_t v = std::min<std::uint64_t>(P[i][k], 1u << 20);
        for (int j = 0; j < n; ++j) Q[i][j] += v * A[k][j];
      }
    P = std::move(Q);
  }
  fail(ErrorKind::NumericFailure, "transition matrix is not mixing within 2 deg f powers");
}

bool TileCatalog::is_admissible(const TileWord& w) const {
  if (w.empty()) return false;
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    if (!transition(w[i], w[i + 1])) return false;
  return true;
}

bool TileCatalog::is_cyclically_admissible(const TileWord& w) const {
  return is_admissible(w) && transition(w.back(), w.front());
}

std::vector<TileWord> enumerate_tiles(const TileCatalog& cat, int n, std::size_t budget_words) {
  if (n < 0) fail(ErrorKind::BadInput, "enumerate_tiles: negative level");
  if (n == 0) return {TileWord{}, TileWord{}};  // the two 0-tiles, synthetic roots
  double expect = 2.0 * std::pow(double(cat.degree()), double(n));
  if (expect > double(budget_words)) fail(ErrorKind::BudgetExceeded, "enumerate_tiles: level too deep");

  std::vector<TileWord> words;
  for (int t = 0; t < cat.tile_count(); ++t) words.push_back({t});
  for (int l = 2; l <= n; ++l) {
    std::vector<TileWord> next;
    next.reserve(words.size() * cat.degree());
    for (const auto& v : words) {
      Side s = cat.one_tiles()[v.front()].side;
      for (int x : cat.by_color(s)) {
        TileWord w;
        w.reserve(v.size() + 1);
        w.push_back(x);
        w.insert(w.end(), v.begin(), v.end());
        next.push_back(std::move(w));
      }
    }
    words = std::move(next);
  }
  return words;
}

TileRealization realize_tile(const TileCatalog& cat, const TileWord& w) {
  if (!cat.is_admissible(w)) fail(ErrorKind::PreconditionViolated, "realize_tile: word not admissible");
  const OneTile& last = cat.one_tiles()[w.back()];
  SpherePoint x = last.sample;
  std::vector<SpherePoint> probes = cat.probe_points(last.color);
  for (auto& p : probes) p = inverse_branch(cat, last, p, kLiftMargin, false);
  for (std::size_t k = w.size() - 1; k-- > 0;) {
    const OneTile& t = cat.one_tiles()[w[k]];
    x = inverse_branch(cat, t, x, kLiftMargin, false);
    for (auto& p : probes) p = inverse_branch(cat, t, p, kLiftMargin, false);
  }
  TileRealization out;
  out.point = x;
  double d = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    d = std::max(d, chordal_dist(probes[i], x));
    for (std::size_t j = i + 1; j < probes.size(); ++j)
      d = std::max(d, chordal_dist(probes[i], probes[j]));
  }
  out.diam_estimate = d;
  return out;
}

TileHierarchy::TileHierarchy(const TileCatalog& cat, int max_level, bool with_probes) : cat_(&cat) {
  if (max_level < 1) fail(ErrorKind::BadInput, "TileHierarchy: max_level must be >= 1");
  double words_deepest = 2.0 * std::pow(double(cat.degree()), double(max_level));
  if (words_deepest > double(1u << 23))
    fail(ErrorKind::BudgetExceeded, "TileHierarchy: level too deep for the memory budget");

  levels_.resize(max_level + 1);
  const int d = cat.degree();
  const std::size_t np = cat.probe_points(Side::Black).size();

  // level 1 = the one-tiles themselves
  Level& l1 = levels_[1];
  for (const auto& t : cat.one_tiles()) {
    l1.first.push_back(t.id);
    l1.shift.push_back(0);
    l1.prefix.push_back(0);
    l1.point.push_back(t.sample);
  }
  if (with_probes) {
    l1.probes.resize(l1.first.size() * np);
    l1.diam.resize(l1.first.size());
    parallel_for(l1.first.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        const OneTile& t = cat.one_tiles()[l1.first[j]];
        auto probe0 = cat.probe_points(t.color);
        double dm = 0.0;
        for (std::size_t q = 0; q < np; ++q) {
          SpherePoint p = inverse_branch(cat, t, probe0[q], kLiftMargin, false);
          l1.probes[j * np + q] = p;
          dm = std::max(dm, chordal_dist(p, l1.point[j]));
        }
        for (std::size_t a = 0; a < np; ++a)
          for (std::size_t b = a + 1; b < np; ++b)
            dm = std::max(dm, chordal_dist(l1.probes[j * np + a], l1.probes[j * np + b]));
        l1.diam[j] = dm;
      }
    });
  }

  for (int l = 2; l <= max_level; ++l) {
    const Level& par = levels_[l - 1];
    Level& cur = levels_[l];
    std::size_t n_par = par.first.size();
    std::size_t n_cur = n_par * d;
    cur.first.resize(n_cur);
    cur.shift.resize(n_cur);
    cur.prefix.resize(n_cur);
    cur.point.resize(n_cur);
    if (with_probes) {
      cur.probes.resize(n_cur * np);
      cur.diam.resize(n_cur);
    }
    parallel_for(n_par, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        Side s = cat.one_tiles()[par.first[j]].side;
        const auto& succ = cat.by_color(s);
        for (int r = 0; r < d; ++r) {
          std::size_t idx = j * d + r;
          const OneTile& t = cat.one_tiles()[succ[r]];
          cur.first[idx] = t.id;
          cur.shift[idx] = static_cast<std::uint32_t>(j);
          cur.prefix[idx] = (l == 2) ? static_cast<std::uint32_t>(t.id)
                                     : static_cast<std::uint32_t>(par.prefix[j] * d + r);
          cur.point[idx] = inverse_branch(cat, t, par.point[j], kLiftMargin, false);
          if (with_probes) {
            double dm = 0.0;
            for (std::size_t q = 0; q < np; ++q) {
              SpherePoint p = inverse_branch(cat, t, par.probes[j * np + q], kLiftMargin, false);
              cur.probes[idx * np + q] = p;
              dm = std::max(dm, chordal_dist(p, cur.point[idx]));
            }
            for (std::size_t a = 0; a < np; ++a)
              for (std::size_t b = a + 1; b < np; ++b)
                dm = std::max(dm, chordal_dist(cur.probes[idx * np + a], cur.probes[idx * np + b]));
            cur.diam[idx] = dm;
          }
        }
      }
    });
  }
}

std::size_t TileHierarchy::prefix_at(int level, std::size_t idx, int to_level) const {
  if (to_level > level) fail(ErrorKind::BadInput, "prefix_at: to_level above word level");
  std::size_t cur = idx;
  for (int l = level; l > to_level; --l) cur = levels_[l].prefix[cur];
  return cur;
}

TileWord TileHierarchy::word_of(int level, std::size_t idx) const {
  TileWord w;
  std::size_t cur = idx;
  for (int l = level; l >= 1; --l) {
    w.push_back(levels_[l].first[cur]);
    cur = levels_[l].shift[cur];
  }
  return w;
}

bool TileCatalog::no_tile_joins_opposite_sides(int boundary_samples) const {
  const RationalMap& f = *map_;
  // 0-edges: arcs of the curve between consecutive postcritical points,
  // ordered by the chart angle.
  std::vector<double> post_t;
  for (const auto& p : f.postcritical_set())
    post_t.push_back(std::arg(curve_.to_chart(Side::Black, p)));
  std::sort(post_t.begin(), post_t.end());
  const int k = static_cast<int>(post_t.size());
  if (k < 3) fail(ErrorKind::BadInput, "joins-opposite-sides check requires card(post) >= 3");

  auto edge_of = [&](const SpherePoint& z) {
    double t = std::arg(curve_.to_chart(Side::Black, z));
    for (int e = 0; e < k; ++e) {
      double lo = post_t[e], hi = (e + 1 < k) ? post_t[e + 1] : post_t[0] + 2 * M_PI;
      double tt = t;
      if (tt < lo) tt += 2 * M_PI;
      if (tt >= lo && tt < hi) return e;
    }
    return 0;
  };
  auto near_post = [&](double t) {
    for (double pt : post_t) {
      double dt = std::fabs(std::remainder(t - pt, 2 * M_PI));
      if (dt < 0.06) return true;
    }
    return false;
  };

  const double eps = 1e-4;        // inward chordal offset of curve samples
  const double near_c = 3e-3;     // pulled point this close to C => boundary piece on C
  for (const auto& tile : tiles_) {
    std::vector<bool> meets(k, false);
    for (int s = 0; s < boundary_samples; ++s) {
      double t = 2 * M_PI * (s + 0.5) / boundary_samples;
      if (near_post(t)) continue;
      // point at chordal offset ~eps inside the 0-tile of the tile color
      Complex wchart = (1.0 - eps) * Complex(std::cos(t), std::sin(t));
      SpherePoint y = curve_.from_chart(tile.color == Side::Black ? Side::Black : Side::White,
                                        tile.color == Side::Black ? wchart : std::conj(wchart));
      if (y.infinite || curve_.dist(y) < kLiftMargin) continue;
      if (curve_.side(y) != tile.color) continue;
      SpherePoint w;
      try {
        w = inverse_branch(*this, tile, y, kLiftMargin, false);
      } catch (const Error&) {
        continue;  // heuristic sampling: skip stalled lifts near vertices
      }
      if (curve_.dist(w) <= near_c) meets[edge_of(w)] = true;
    }
    // joins opposite sides: two disjoint 0-edges met (card post >= 4), or all
    // three (card post == 3)
    if (k == 3) {
      if (meets[0] && meets[1] && meets[2]) return false;
    } else {
      for (int a = 0; a < k; ++a)
        for (int b = a + 2; b < k; ++b) {
          if (a == 0 && b == k - 1) continue;  // cyclically adjacent
          if (meets[a] && meets[b]) return false;
        }
    }
  }
  return true;
}

}  // namespace etm
