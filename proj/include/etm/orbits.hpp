#pragma once

#include <functional>
#include <optional>
#include <string>

#include "etm/tiles.hpp"

namespace etm {

// Real Hoelder function on the sphere; finite at inf, bounded (checked on a
// point sample at construction time by callers that need the invariant).
struct Potential {
  std::function<double(const SpherePoint&)> value;
  double hoelder_exponent = 1.0;
  std::string description;
  bool differentiable = false;

  double operator()(const SpherePoint& z) const { return value(z); }
};

// Boundedness on a 10^4-point deterministic sphere sample plus finiteness at
// inf; errors on violations.
void validate_potential(const Potential& phi);

Potential constant_potential(double c);
// phi(z) = base + amp * Re(z) / (1+|z|^2); eventually positive for amp < 2*base.
Potential smooth_sample_potential(double base = 1.0, double amp = 0.2);
// phi = base + u o f - u with u(z) = amp * Re(z) / (1+|z|^2).
Potential coboundary_potential(std::shared_ptr<const RationalMap> f, double base = 1.0,
                               double amp = 1e-5);

double birkhoff_sum(const Potential& phi, const SpherePoint& x, int n, const RationalMap& f);

struct PeriodicOrbit {
  int period = 1;
  SpherePoint representative;
  std::vector<SpherePoint> points;  // forward orbit of the representative
  bool primitive = true;
  double birkhoff = 0.0;  // S_period phi at the representative (= weighted length)
  long long degree_weight = 1;
  TileWord word;  // canonical cyclic representative
};

double weighted_length(const PeriodicOrbit& orbit, const Potential& phi, const RationalMap& f);

std::uint64_t trace_of_power(const TileCatalog& cat, int n);

// All cyclically admissible words of length n (rotations included).
std::vector<TileWord> periodic_words(const TileCatalog& cat, int n,
                                     std::size_t budget_words = (1u << 22));

TileWord canonical_rotation(const TileWord& w);
bool is_primitive_word(const TileWord& w);

// The unique point of the n-tile of a cyclically admissible word fixed by f^n:
// contraction along the inverse-branch chain, then Newton on f^n(z) - z.
SpherePoint locate_periodic_point(const TileCatalog& cat, const TileWord& w);

struct FixRecord {
  SpherePoint point;   // geometric fixed point of f^n, listed once
  int word_count = 0;  // number of length-n cyclic words refining to it
  double birkhoff = 0.0;  // S_n phi at the point
};

struct PositivityCertificate {
  int n = 1;
  double margin = 0.0;  // observed inf of S_n phi over the probe set
};

class OrbitStore {
 public:
  int n_max() const { return n_max_; }
  const Potential& potential() const { return phi_; }
  const std::vector<PeriodicOrbit>& orbits() const { return orbits_; }
  std::vector<const PeriodicOrbit*> orbits_of_period(int n) const;

  // Geometric fixed points of f^n with word multiplicities, n <= n_max.
  const std::vector<FixRecord>& fixed_points(int n) const;

  // Periods n with floor(n/N)*margin > t contain no orbit of weighted length
  // <= t; the store is complete for pi(T) up to this bound.
  double certified_length_bound() const;
  const std::optional<PositivityCertificate>& certificate() const { return cert_; }

  friend OrbitStore build_orbit_store(const TileCatalog& cat, int n_max, const Potential& phi,
                                      std::optional<double> t_cut,
                                      std::optional<PositivityCertificate> cert);
  const TileCatalog* catalog() const { return cat_; }

 private:
  const TileCatalog* cat_ = nullptr;
  int n_max_ = 0;
  Potential phi_;
  std::vector<PeriodicOrbit> orbits_;
  std::vector<std::vector<FixRecord>> fixed_;  // geometric Fix(f^n), indexed by period
  std::vector<std::vector<FixRecord>> prim_;   // primitive length-n word counts
  std::vector<bool> pruned_;
  std::optional<PositivityCertificate> cert_;
  std::optional<double> t_cut_;
};

OrbitStore build_orbit_store(const TileCatalog& cat, int n_max, const Potential& phi,
                             std::optional<double> t_cut = std::nullopt,
                             std::optional<PositivityCertificate> cert = std::nullopt);

// Smallest n <= n_probe with inf of S_n phi over the probe set positive.
// Probes are the level-`level` collocation points. Failure is a value.
std::optional<PositivityCertificate> eventual_positivity(const Potential& phi,
                                                         const TileCatalog& cat, int n_probe,
                                                         int level = 4);

}  // namespace etm
