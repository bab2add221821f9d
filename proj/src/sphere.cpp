#include "etm/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace etm {

namespace {

constexpr double kInfCutoff = 1e120;    // eval results beyond this collapse to inf
constexpr double kCanonInf = 1e12;      // orbit points beyond this are stored as inf
constexpr double kEscapeModulus = 1e4;  // suspicious growth threshold, see below
constexpr double kPoleMargin = 1e-5;    // chordal margin under which a jump to inf is a pole hit

double cabs2(Complex z) { return z.real() * z.real() + z.imag() * z.imag(); }

}  // namespace

void SpherePoint::check() const {
  if (std::isnan(z.real()) || std::isnan(z.imag()) || std::isinf(z.real()) || std::isinf(z.imag()))
    fail(ErrorKind::NumericFailure, "SpherePoint: non-representable finite value");
}

double chordal_dist(const SpherePoint& a, const SpherePoint& b) {
  if (a.infinite && b.infinite) return 0.0;
  if (a.infinite) return 2.0 / std::sqrt(1.0 + cabs2(b.z));
  if (b.infinite) return 2.0 / std::sqrt(1.0 + cabs2(a.z));
  // Large moduli are routed through the inverted chart so 1+|z|^2 cannot overflow.
  Complex za = a.z, zb = b.z;
  if (std::abs(za) > 1e100 || std::abs(zb) > 1e100) {
    if (std::abs(za) < 1.0 || std::abs(zb) < 1.0)
      return 2.0;  // one point near 0, other near inf: diameter up to rounding
    za = 1.0 / za;
    zb = 1.0 / zb;
  }
  return 2.0 * std::abs(za - zb) / (std::sqrt(1.0 + cabs2(za)) * std::sqrt(1.0 + cabs2(zb)));
}

Polynomial::Polynomial(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {
  while (!c_.empty() && c_.back() == Complex(0.0, 0.0)) c_.pop_back();
}

Polynomial Polynomial::from_reals(std::initializer_list<double> coeffs) {
  std::vector<Complex> c;
  for (double x : coeffs) c.emplace_back(x, 0.0);
  return Polynomial(std::move(c));
}

Complex Polynomial::eval(Complex z) const {
  Complex acc(0.0, 0.0);
  for (std::size_t i = c_.size(); i-- > 0;) acc = acc * z + c_[i];
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (c_.size() <= 1) return Polynomial{};
  std::vector<Complex> d(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * double(i);
  return Polynomial(std::move(d));
}

Polynomial Polynomial::reversed(int degree) const {
  std::vector<Complex> r(static_cast<std::size_t>(degree) + 1, Complex(0, 0));
  for (std::size_t i = 0; i < c_.size(); ++i) r[degree - i] = c_[i];
  return Polynomial(std::move(r));
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
  if (is_zero() || rhs.is_zero()) return Polynomial{};
  std::vector<Complex> out(c_.size() + rhs.c_.size() - 1, Complex(0, 0));
  for (std::size_t i = 0; i < c_.size(); ++i)
    for (std::size_t j = 0; j < rhs.c_.size(); ++j) out[i + j] += c_[i] * rhs.c_[j];
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
  std::vector<Complex> out(std::max(c_.size(), rhs.c_.size()), Complex(0, 0));
  for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
  for (std::size_t i = 0; i < rhs.c_.size(); ++i) out[i] += rhs.c_[i];
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const { return *this + rhs.scaled(Complex(-1, 0)); }

Polynomial Polynomial::scaled(Complex s) const {
  std::vector<Complex> out(c_);
  for (auto& x : out) x *= s;
  return Polynomial(std::move(out));
}

namespace {

// Relative trim used before root finding; dropped leading coefficients
// correspond to roots pushed off to infinity, which callers account for.
std::vector<Complex> trimmed_for_solve(const std::vector<Complex>& c) {
  double mx = 0.0;
  for (const auto& x : c) mx = std::max(mx, std::abs(x));
  std::vector<Complex> out(c);
  while (out.size() > 1 && std::abs(out.back()) <= 1e-13 * mx) out.pop_back();
  return out;
}

double residual_scale(const std::vector<Complex>& c, Complex z) {
  // backward-error scale, floored by the coefficient magnitude so that
  // multiple roots at the origin (where every term vanishes) still converge
  double az = std::abs(z), p = 1.0, s = 0.0, mx = 0.0;
  for (const auto& a : c) {
    s += std::abs(a) * p;
    p *= az;
    mx = std::max(mx, std::abs(a));
  }
  return s + mx + 1e-300;
}

}  // namespace

std::vector<Complex> polynomial_roots(const Polynomial& poly, Rng& rng, int max_iter) {
  std::vector<Complex> c = trimmed_for_solve(poly.coeffs());
  const int n = static_cast<int>(c.size()) - 1;
  if (n <= 0) return {};
  if (n == 1) return {-c[0] / c[1]};

  // monic normalization
  Complex lead = c.back();
  for (auto& a : c) a /= lead;
  std::vector<Complex> d(n);
  for (int i = 1; i <= n; ++i) d[i - 1] = c[i] * double(i);

  double radius = 0.0;
  for (int i = 0; i < n; ++i) radius = std::max(radius, std::abs(c[i]));
  radius = 1.0 + radius;

  std::vector<Complex> z(n);
  for (int k = 0; k < n; ++k) {
    double ang = 2.0 * M_PI * (k + 0.25) / n + 0.2 * rng.uniform();
    z[k] = radius * Complex(std::cos(ang), std::sin(ang));
  }

  auto horner = [&](const std::vector<Complex>& a, Complex x) {
    Complex acc(0, 0);
    for (std::size_t i = a.size(); i-- > 0;) acc = acc * x + a[i];
    return acc;
  };

  std::vector<bool> done(n, false);
  for (int it = 0; it < max_iter; ++it) {
    double max_step = 0.0;
    for (int k = 0; k < n; ++k) {
      if (done[k]) continue;
      Complex pv = horner(c, z[k]);
      if (std::abs(pv) <= 1e-14 * residual_scale(c, z[k])) {
        done[k] = true;
        continue;
      }
      Complex dv = horner(d, z[k]);
      if (dv == Complex(0, 0)) {
        z[k] += 1e-8 * radius * Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
        continue;
      }
      Complex newton = pv / dv;
      Complex s(0, 0);
      for (int j = 0; j < n; ++j) {
        if (j == k) continue;
        Complex diff = z[k] - z[j];
        if (diff == Complex(0, 0)) {
          diff = Complex(1e-12 * radius, 1e-12 * radius);
        }
        s += 1.0 / diff;
      }
      Complex denom = 1.0 - newton * s;
      Complex step = (denom == Complex(0, 0)) ? newton : newton / denom;
      z[k] -= step;
      max_step = std::max(max_step, std::abs(step) / (1.0 + std::abs(z[k])));
    }
    if (max_step < 1e-15 && it > 2) break;
    if (std::all_of(done.begin(), done.end(), [](bool b) { return b; })) break;
  }

  // Newton polish (helps simple roots reach full precision)
  for (int k = 0; k < n; ++k) {
    for (int step = 0; step < 3; ++step) {
      Complex pv = horner(c, z[k]);
      Complex dv = horner(d, z[k]);
      if (dv == Complex(0, 0)) break;
      Complex delta = pv / dv;
      if (std::abs(delta) > 0.5 * (1.0 + std::abs(z[k]))) break;
      z[k] -= delta;
    }
  }

  for (int k = 0; k < n; ++k) {
    double res = std::abs(horner(c, z[k]));
    if (!(res <= 1e-9 * residual_scale(c, z[k]))) {
      std::ostringstream os;
      os << "polynomial_roots: non-convergence, degree " << n << ", root " << k << " residual " << res;
      fail(ErrorKind::NumericFailure, os.str());
    }
  }
  return z;
}

std::array<double, 3> sphere_embed(const SpherePoint& p) {
  if (p.infinite) return {0.0, 0.0, 1.0};
  double a2 = cabs2(p.z);
  if (a2 > 1e200) return {0.0, 0.0, 1.0};
  double den = 1.0 + a2;
  return {2.0 * p.z.real() / den, 2.0 * p.z.imag() / den, (a2 - 1.0) / den};
}

std::uint64_t PointIndex::key(long ix, long iy, long iz) const {
  // hashed cell key; collisions only cost an extra (verified) distance check
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](long v) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 1099511628211ull;
  };
  mix(ix);
  mix(iy);
  mix(iz);
  return h;
}

void PointIndex::insert(const SpherePoint& p, int id) {
  auto e = sphere_embed(p);
  long ix = std::lround(e[0] / cell_), iy = std::lround(e[1] / cell_), iz = std::lround(e[2] / cell_);
  buckets_[key(ix, iy, iz)].push_back({e, id});
}

int PointIndex::find(const SpherePoint& p) const {
  auto e = sphere_embed(p);
  long ix = std::lround(e[0] / cell_), iy = std::lround(e[1] / cell_), iz = std::lround(e[2] / cell_);
  // embedded distance equals chordal distance, so scanning the 27 neighbor
  // cells covers every point within one cell size
  for (long dx = -1; dx <= 1; ++dx)
    for (long dy = -1; dy <= 1; ++dy)
      for (long dz = -1; dz <= 1; ++dz) {
        auto it = buckets_.find(key(ix + dx, iy + dy, iz + dz));
        if (it == buckets_.end()) continue;
        for (const auto& [q, id] : it->second) {
          double d2 = (q[0] - e[0]) * (q[0] - e[0]) + (q[1] - e[1]) * (q[1] - e[1]) +
                      (q[2] - e[2]) * (q[2] - e[2]);
          if (d2 <= radius_ * radius_) return id;
        }
      }
  return -1;
}

std::vector<PreimageEntry> cluster_points(const std::vector<SpherePoint>& pts, double radius) {
  std::vector<PreimageEntry> out;
  for (const auto& p : pts) {
    bool merged = false;
    for (auto& e : out) {
      if (chordal_dist(e.point, p) <= radius) {
        e.multiplicity += 1;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back({p, 1});
  }
  return out;
}

SpherePoint RationalMap::eval(const SpherePoint& zp) const {
  if (zp.infinite) {
    int dp = num_.degree(), dq = den_.degree();
    if (dp > dq) return SpherePoint::inf();
    if (dp < dq) return SpherePoint(0.0, 0.0);
    Complex v = num_.coeffs().back() / den_.coeffs().back();
    return std::abs(v) > kInfCutoff ? SpherePoint::inf() : SpherePoint(v);
  }
  Complex P, Q;
  if (std::abs(zp.z) <= 1.0) {
    P = num_.eval(zp.z);
    Q = den_.eval(zp.z);
  } else {
    Complex w = 1.0 / zp.z;
    P = num_rev_.eval(w);
    Q = den_rev_.eval(w);
  }
  if (std::abs(Q) < 1e-300) {
    if (std::abs(P) < 1e-300)
      fail(ErrorKind::NumericFailure, "RationalMap::eval: 0/0, map not reduced at this point");
    return SpherePoint::inf();
  }
  Complex v = P / Q;
  if (std::isnan(v.real()) || std::isnan(v.imag()))
    fail(ErrorKind::NumericFailure, "RationalMap::eval: NaN value");
  if (std::abs(v) > kInfCutoff) return SpherePoint::inf();
  return SpherePoint(v);
}

SpherePoint RationalMap::eval_n(const SpherePoint& z, int n) const {
  SpherePoint p = z;
  for (int i = 0; i < n; ++i) p = eval(p);
  return p;
}

Complex RationalMap::derivative(const SpherePoint& zp) const {
  if (zp.infinite) {
    // chart derivative at 0 of w -> chart(f(1/w)); output chart depends on f(inf)
    Complex p = num_rev_.eval(Complex(0, 0));
    Complex q = den_rev_.eval(Complex(0, 0));
    Complex dp = num_rev_.derivative().eval(Complex(0, 0));
    Complex dq = den_rev_.derivative().eval(Complex(0, 0));
    SpherePoint v = eval(SpherePoint::inf());
    if (v.infinite || std::abs(v.z) > 1.0) {
      if (std::abs(p) < 1e-300 && !v.infinite)
        fail(ErrorKind::NumericFailure, "derivative: degenerate chart at inf (chart: inverted)");
      return (dq * p - q * dp) / (p * p);  // d/dw of 1/f(1/w)
    }
    if (std::abs(q) < 1e-300)
      fail(ErrorKind::NumericFailure, "derivative: pole of the chart map at inf (chart: plane)");
    return (dp * q - p * dq) / (q * q);  // d/dw of f(1/w)
  }
  if (std::abs(zp.z) <= 1.0) {
    Complex q = den_.eval(zp.z);
    if (std::abs(q) < 1e-300)
      fail(ErrorKind::NumericFailure, "derivative: pole in the plane chart (chart: plane)");
    Complex p = num_.eval(zp.z);
    Complex dp = num_.derivative().eval(zp.z);
    Complex dq = den_.derivative().eval(zp.z);
    return (dp * q - p * dq) / (q * q);
  }
  Complex w = 1.0 / zp.z;
  Complex q = den_rev_.eval(w);
  if (std::abs(q) < 1e-300)
    fail(ErrorKind::NumericFailure, "derivative: pole in the inverted chart (chart: inverted)");
  Complex p = num_rev_.eval(w);
  Complex dp = num_rev_.derivative().eval(w);
  Complex dq = den_rev_.derivative().eval(w);
  Complex Fw = (dp * q - p * dq) / (q * q);  // d/dw of f(1/w)
  return Fw * (-w * w);
}

std::vector<PreimageEntry> RationalMap::preimages(const SpherePoint& w, Rng& rng) const {
  Polynomial r;
  if (w.infinite) {
    r = den_;
  } else {
    r = num_ - den_.scaled(w.z);
  }
  std::vector<Complex> roots = polynomial_roots(r, rng);

  // Newton polish against the true preimage equation, chart-aware.
  Polynomial rd = r.derivative();
  for (auto& z : roots) {
    for (int it = 0; it < 4; ++it) {
      Complex pv = r.eval(z), dv = rd.eval(z);
      if (std::abs(dv) < 1e-300) break;
      Complex delta = pv / dv;
      if (std::abs(delta) > 1.0 + std::abs(z)) break;
      z -= delta;
    }
  }

  std::vector<Complex> rtrim = trimmed_for_solve(r.coeffs());
  int finite_roots = static_cast<int>(rtrim.size()) - 1;
  int inf_mult = degree_ - finite_roots;

  std::vector<SpherePoint> pts;
  for (auto& z : roots) pts.push_back(std::abs(z) > kInfCutoff ? SpherePoint::inf() : SpherePoint(z));
  for (int i = 0; i < inf_mult; ++i) pts.push_back(SpherePoint::inf());

  auto clustered = cluster_points(pts, tol_.cluster);
  int total = 0;
  for (auto& e : clustered) total += e.multiplicity;
  if (total != degree_)
    fail(ErrorKind::NumericFailure, "preimages: multiplicity census mismatch");
  for (auto& e : clustered) {
    double res = chordal_dist(eval(e.point), w);
    if (res >= tol_.root) {
      std::ostringstream os;
      os << "preimages: residual " << res << " over tolerance " << tol_.root;
      fail(ErrorKind::NumericFailure, os.str());
    }
  }
  return clustered;
}

int RationalMap::local_degree(const SpherePoint& x) const {
  for (const auto& cp : critical_)
    if (chordal_dist(cp.point, x) <= tol_.cluster) return cp.local_degree;
  return 1;
}

std::vector<CriticalPoint> critical_points_of(const Polynomial& num, const Polynomial& den,
                                              const Tolerances& tol, Rng& rng) {
  const int d = std::max(num.degree(), den.degree());
  Polynomial W = num.derivative() * den - num * den.derivative();
  if (W.is_zero()) fail(ErrorKind::BadInput, "critical_points: degenerate map (constant)");

  // Trim at a relative threshold; the degree drop of W is the vanishing order
  // of the chart Wronskian at w=0, i.e. the branching at infinity.
  std::vector<Complex> wc = W.coeffs();
  double mx = 0.0;
  for (auto& x : wc) mx = std::max(mx, std::abs(x));
  while (wc.size() > 1 && std::abs(wc.back()) <= 1e-10 * mx) wc.pop_back();
  Polynomial Wt(std::move(wc));

  std::vector<Complex> roots = polynomial_roots(Wt, rng);
  std::vector<SpherePoint> pts;
  for (auto& z : roots) pts.push_back(std::abs(z) > kInfCutoff ? SpherePoint::inf() : SpherePoint(z));
  auto clustered = cluster_points(pts, tol.cluster);

  std::vector<CriticalPoint> out;
  for (auto& e : clustered) out.push_back({e.point, e.multiplicity + 1});
  int inf_order = 2 * d - 2 - Wt.degree();
  if (inf_order > 0) {
    bool have_inf = false;
    for (auto& cp : out)
      if (cp.point.infinite) {
        cp.local_degree += inf_order;
        have_inf = true;
      }
    if (!have_inf) out.push_back({SpherePoint::inf(), 1 + inf_order});
  }

  int branching = 0;
  for (auto& cp : out) branching += cp.local_degree - 1;
  if (branching != 2 * d - 2) {
    std::ostringstream os;
    os << "critical_points: branching census " << branching << " != " << 2 * d - 2
       << " (degenerate clustering)";
    fail(ErrorKind::NumericFailure, os.str());
  }
  return out;
}

namespace {

// True postcritical sets close exactly; in floats a near-pole hit produces a
// huge finite value that must be identified with inf, while a gradually
// escaping orbit (not postcritically finite) climbs through moderate moduli.
// A jump into |z| > kEscapeModulus is accepted only from a predecessor that
// is chordally close to a pole (or already essentially inf).
bool near_pole(const SpherePoint& x, const std::vector<SpherePoint>& poles) {
  for (const auto& p : poles)
    if (chordal_dist(x, p) <= kPoleMargin) return true;
  return false;
}

SpherePoint canonicalize(const SpherePoint& p) {
  if (!p.infinite && std::abs(p.z) > kCanonInf) return SpherePoint::inf();
  return p;
}

}  // namespace

std::vector<SpherePoint> postcritical_set_of(const RationalMap& f, int budget) {
  if (budget < 1) fail(ErrorKind::BadInput, "postcritical_set: budget must be >= 1");
  const double tau = f.tol().orbit;

  Rng rng(11);
  std::vector<SpherePoint> poles;
  if (!f.den().is_zero() && f.den().degree() >= 1)
    for (auto& z : polynomial_roots(f.den(), rng))
      poles.push_back(std::abs(z) > kInfCutoff ? SpherePoint::inf() : SpherePoint(z));
  if (f.num().degree() > f.den().degree()) poles.push_back(SpherePoint::inf());

  std::vector<SpherePoint> set;
  auto member = [&](const SpherePoint& p) {
    for (const auto& q : set)
      if (chordal_dist(p, q) <= tau) return true;
    return false;
  };
  auto add = [&](const SpherePoint& p) {
    if (member(p)) return false;
    set.push_back(canonicalize(p));
    return true;
  };

  std::vector<SpherePoint> frontier;
  for (const auto& cp : f.critical_points()) {
    SpherePoint v = f.eval(cp.point);
    if (add(v)) frontier.push_back(canonicalize(v));
  }

  while (!frontier.empty()) {
    if (static_cast<int>(set.size()) > budget)
      fail(ErrorKind::NotPostcriticallyFinite, "postcritical orbit did not close within budget");
    std::vector<SpherePoint> next;
    for (const auto& x : frontier) {
      SpherePoint y = f.eval(x);
      if (y.is_finite() && std::abs(y.z) > kEscapeModulus) {
        bool pred_huge = !x.is_finite() || std::abs(x.z) > kEscapeModulus;
        if (!pred_huge && !near_pole(x, poles))
          fail(ErrorKind::NotPostcriticallyFinite, "critical orbit escapes without hitting a pole");
      }
      if (add(y)) next.push_back(canonicalize(y));
    }
    frontier = std::move(next);
  }
  return set;
}

RationalMap RationalMap::create(Polynomial num, Polynomial den, const Tolerances& tol,
                                int postcritical_budget, std::uint64_t seed, bool require_class) {
  if (num.is_zero() || den.is_zero()) fail(ErrorKind::BadInput, "RationalMap: zero numerator or denominator");
  RationalMap f;
  f.tol_ = tol;
  f.num_ = std::move(num);
  f.den_ = std::move(den);
  f.degree_ = std::max(f.num_.degree(), f.den_.degree());
  if (f.degree_ < 2) fail(ErrorKind::BadInput, "RationalMap: degree must be >= 2");
  f.num_rev_ = f.num_.reversed(f.degree_);
  f.den_rev_ = f.den_.reversed(f.degree_);

  Rng rng(seed);
  // shared-root rejection
  {
    auto nr = polynomial_roots(f.num_, rng);
    auto dr = polynomial_roots(f.den_, rng);
    for (auto& a : nr)
      for (auto& b : dr)
        if (chordal_dist(SpherePoint(a), SpherePoint(b)) < tol.gcd)
          fail(ErrorKind::BadInput, "RationalMap: numerator and denominator share a root");
  }

  f.critical_ = critical_points_of(f.num_, f.den_, tol, rng);
  f.postcritical_ = postcritical_set_of(f, postcritical_budget);

  if (require_class) {
    // No periodic critical points (required map class). A periodic critical
    // point lies on its own forward orbit, which cycles inside the finite
    // postcritical set, so a short forward scan suffices.
    int steps = static_cast<int>(f.postcritical_.size()) + 2;
    for (const auto& cp : f.critical_) {
      SpherePoint p = cp.point;
      for (int k = 0; k < steps; ++k) {
        p = f.eval(p);
        if (chordal_dist(p, cp.point) <= tol.orbit)
          fail(ErrorKind::BadInput, "RationalMap: periodic critical point (outside supported class)");
      }
    }
  }
  return f;
}

RationalMap RationalMap::iterate(int n) const {
  if (n < 1) fail(ErrorKind::BadInput, "iterate: n must be >= 1");
  if (n == 1) return *this;
  // pad both to common degree d and compose homogeneously
  RationalMap cur = *this;
  for (int step = 1; step < n; ++step) {
    const Polynomial& P = cur.num_;
    const Polynomial& Q = cur.den_;
    int d = std::max(num_.degree(), den_.degree());
    std::vector<Complex> pc(num_.coeffs());
    pc.resize(d + 1, Complex(0, 0));
    std::vector<Complex> qc(den_.coeffs());
    qc.resize(d + 1, Complex(0, 0));

    // powers of P and Q
    std::vector<Polynomial> Ppow(d + 1), Qpow(d + 1);
    Ppow[0] = Polynomial({Complex(1, 0)});
    Qpow[0] = Polynomial({Complex(1, 0)});
    for (int i = 1; i <= d; ++i) {
      Ppow[i] = Ppow[i - 1] * P;
      Qpow[i] = Qpow[i - 1] * Q;
    }
    Polynomial num2, den2;
    for (int i = 0; i <= d; ++i) {
      Polynomial term = Ppow[i] * Qpow[d - i];
      num2 = num2 + term.scaled(pc[i]);
      den2 = den2 + term.scaled(qc[i]);
    }
    RationalMap nxt;
    nxt.tol_ = tol_;
    nxt.num_ = num2;
    nxt.den_ = den2;
    nxt.degree_ = std::max(num2.degree(), den2.degree());
    nxt.num_rev_ = num2.reversed(nxt.degree_);
    nxt.den_rev_ = den2.reversed(nxt.degree_);
    cur = nxt;
  }

  // crit f^n = union of f^{-j}(crit f) for j < n, with local degrees
  // multiplying along orbits; pulling back through the base map stays at
  // degree-d solves where the composed Wronskian would be ill-scaled.
  Rng rng(23);
  std::vector<SpherePoint> pts;
  for (const auto& cp : critical_) pts.push_back(cp.point);
  for (int j = 1; j < n; ++j) {
    std::vector<SpherePoint> next;
    for (const auto& p : pts)
      for (const auto& e : preimages(p, rng)) next.push_back(e.point);
    for (const auto& cp : critical_) next.push_back(cp.point);
    auto clustered = cluster_points(next, tol_.cluster);
    pts.clear();
    for (const auto& e : clustered) pts.push_back(e.point);
  }
  cur.critical_.clear();
  int branching = 0;
  for (const auto& p : pts) {
    int ld = 1;
    SpherePoint q = p;
    for (int i = 0; i < n; ++i) {
      ld *= local_degree(q);
      q = eval(q);
    }
    if (ld >= 2) {
      cur.critical_.push_back({p, ld});
      branching += ld - 1;
    }
  }
  if (branching != 2 * cur.degree_ - 2)
    fail(ErrorKind::NumericFailure, "iterate: branching census of the composed map is off");
  cur.postcritical_ = postcritical_;  // post f^n = post f
  return cur;
}

RationalMap lattes_f0(const Tolerances& tol) {
  // (z^2+1)^2 = z^4 + 2z^2 + 1 ; 4z(z^2-1) = 4z^3 - 4z
  Polynomial num = Polynomial::from_reals({1, 0, 2, 0, 1});
  Polynomial den = Polynomial::from_reals({0, -4, 0, 4});
  return RationalMap::create(std::move(num), std::move(den), tol);
}

}  // namespace etm
