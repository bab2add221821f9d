#pragma once

#include "etm/orbits.hpp"

namespace etm {

// Finite prefix (xi_0, xi_{-1}, ..., xi_{-K}) of a backward-admissible one-tile
// sequence: f(xi_{-(i+1)}) contains xi_{-i}.
struct BranchSequence {
  std::vector<int> tiles;
  int depth() const { return static_cast<int>(tiles.size()) - 1; }
};

bool backward_admissible(const TileCatalog& cat, const BranchSequence& xi);
BranchSequence random_backward_sequence(const TileCatalog& cat, int first_tile, int depth, Rng& rng);

struct TemporalDelta {
  double value = 0.0;
  double tail_bound = 0.0;
};

// Truncated series sum_{i<=K} [phi(tau_i x) - phi(tau_i y)] along the composed
// inverse branches of xi; x, y must lie on the side matching color(xi_0).
TemporalDelta temporal_delta(const TileCatalog& cat, const Potential& phi, const BranchSequence& xi,
                             const SpherePoint& x, const SpherePoint& y, int K);

// Delta_xi - Delta_eta; requires f(xi_0) = f(eta_0) (matching colors).
double temporal_distance(const TileCatalog& cat, const Potential& phi, const BranchSequence& xi,
                         const BranchSequence& eta, const SpherePoint& x, const SpherePoint& y,
                         int K);

struct SniSample {
  TileWord tile_word;
  double separation = 0.0;
  double best_quotient = 0.0;  // max over the sampled branch pairs
};

struct SniResult {
  double epsilon_estimate = 0.0;  // min over samples of the per-sample max
  std::vector<SniSample> samples;
};

// Empirical strong non-integrability statistic: Birkhoff double differences
// over branch pairs at depth N, scaled by d(x1,x2)^alpha. Never a certified
// epsilon; a failing probe is inconclusive.
SniResult sni_probe(const TileCatalog& cat, const Potential& phi, int tile_level, int depth,
                    int n_samples, std::uint64_t seed);

struct CohomResult {
  double spread = 0.0;  // max - min of l(tau)/period over the store
  double min_average = 0.0;
  double max_average = 0.0;
};

// Orbit averages l(tau)/period collapse to a single value exactly when the
// potential is co-homologous to a constant.
CohomResult cohomology_probe(const OrbitStore& store);

}  // namespace etm
