#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "etm/common.hpp"

namespace etm {

using Complex = std::complex<double>;

// A point of the Riemann sphere: a finite complex value or the point at
// infinity, exactly one of the two.
struct SpherePoint {
  Complex z{};
  bool infinite = false;

  SpherePoint() = default;
  SpherePoint(double re, double im) : z(re, im) { check(); }
  explicit SpherePoint(Complex v) : z(v) { check(); }
  static SpherePoint inf() {
    SpherePoint p;
    p.infinite = true;
    return p;
  }

  bool is_finite() const { return !infinite; }

 private:
  void check() const;
};

// sigma(z,w) = 2|z-w| / sqrt(1+|z|^2) / sqrt(1+|w|^2), sigma(inf,z) = 2/sqrt(1+|z|^2).
double chordal_dist(const SpherePoint& a, const SpherePoint& b);

// Coefficients lowest to highest degree. Trailing (near-)zero leading
// coefficients are trimmed on construction.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Complex> coeffs);
  static Polynomial from_reals(std::initializer_list<double> coeffs);

  int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero poly
  bool is_zero() const { return c_.empty(); }
  const std::vector<Complex>& coeffs() const { return c_; }

  Complex eval(Complex z) const;
  Polynomial derivative() const;
  // Coefficient-reversed polynomial padded to `degree`: r(w) = w^degree * p(1/w).
  Polynomial reversed(int degree) const;

  Polynomial operator*(const Polynomial& rhs) const;
  Polynomial operator+(const Polynomial& rhs) const;
  Polynomial operator-(const Polynomial& rhs) const;
  Polynomial scaled(Complex s) const;

 private:
  std::vector<Complex> c_;
};

// All complex roots by Aberth-Ehrlich simultaneous iteration, multiplic roots
// returned as nearby simple ones (callers cluster). Deterministic given `rng`.
std::vector<Complex> polynomial_roots(const Polynomial& p, Rng& rng, int max_iter = 400);

struct PreimageEntry {
  SpherePoint point;
  int multiplicity = 1;
};

struct CriticalPoint {
  SpherePoint point;
  int local_degree = 2;
};

// Degree >= 2 rational self-map of the sphere, postcritically finite without
// periodic critical points. Immutable once constructed; safe to share.
class RationalMap {
 public:
  // Validates: no shared num/den root (tau.gcd), Riemann-Hurwitz census,
  // postcritical finiteness; with require_class also the absence of periodic
  // critical points (the supported map class; catalog loads use it).
  static RationalMap create(Polynomial num, Polynomial den, const Tolerances& tol = {},
                            int postcritical_budget = 64, std::uint64_t seed = 7,
                            bool require_class = true);

  int degree() const { return degree_; }
  const Polynomial& num() const { return num_; }
  const Polynomial& den() const { return den_; }
  const std::vector<CriticalPoint>& critical_points() const { return critical_; }
  const std::vector<SpherePoint>& postcritical_set() const { return postcritical_; }
  const Tolerances& tol() const { return tol_; }

  SpherePoint eval(const SpherePoint& z) const;
  SpherePoint eval_n(const SpherePoint& z, int n) const;

  // Ordinary complex derivative f'(z) for finite z (evaluated in the w = 1/z
  // chart when |z| > 1 to keep arguments bounded); for z = inf the derivative
  // at 0 of the conjugated chart map w -> 1/f(1/w).
  Complex derivative(const SpherePoint& z) const;

  // f^{-1}(w) with multiplicities; total multiplicity == degree().
  std::vector<PreimageEntry> preimages(const SpherePoint& w, Rng& rng) const;

  // Local degree of f at x (1 away from critical points).
  int local_degree(const SpherePoint& x) const;

  // f^n as an explicit rational map (coefficient composition).
  RationalMap iterate(int n) const;

 private:
  RationalMap() = default;

  Polynomial num_, den_;        // padded to common length internally where needed
  Polynomial num_rev_, den_rev_;  // chart versions: p~(w) = w^d p(1/w)
  int degree_ = 0;
  std::vector<CriticalPoint> critical_;
  std::vector<SpherePoint> postcritical_;
  Tolerances tol_;
};

// Critical points with local degrees for a num/den pair (used by create and
// directly testable).
std::vector<CriticalPoint> critical_points_of(const Polynomial& num, const Polynomial& den,
                                              const Tolerances& tol, Rng& rng);

// Forward closure of the critical values; error if it does not close within
// `budget` points.
std::vector<SpherePoint> postcritical_set_of(const RationalMap& f, int budget);

// The default catalog map f0(z) = (z^2+1)^2 / (4z(z^2-1)), a flexible Lattes
// map of degree 4 with postcritical set {-1, 0, 1, inf}.
RationalMap lattes_f0(const Tolerances& tol = {});

// Merge points closer than `radius` (chordal), summing multiplicities.
std::vector<PreimageEntry> cluster_points(const std::vector<SpherePoint>& pts, double radius);

// Embedding into R^3 with the chordal metric as the Euclidean one (sphere of
// radius 1, scaled so that chordal distances match).
std::array<double, 3> sphere_embed(const SpherePoint& p);

// Hash grid over the embedded sphere for radius queries at a fixed scale.
class PointIndex {
 public:
  explicit PointIndex(double radius) : radius_(radius), cell_(std::max(radius, 1e-300)) {}

  void insert(const SpherePoint& p, int id);
  // id of some stored point within `radius_` of p, or -1
  int find(const SpherePoint& p) const;
  double radius() const { return radius_; }

 private:
  std::uint64_t key(long ix, long iy, long iz) const;
  double radius_, cell_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::array<double, 3>, int>>> buckets_;
};

}  // namespace etm
