#include "etm/nli.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace etm {

namespace {
constexpr double kLiftMargin = 1e-13;
}

bool backward_admissible(const TileCatalog& cat, const BranchSequence& xi) {
  if (xi.tiles.empty()) return false;
  for (std::size_t i = 0; i + 1 < xi.tiles.size(); ++i)
    if (!cat.transition(xi.tiles[i + 1], xi.tiles[i])) return false;  // f(xi_{-(i+1)}) has xi_{-i}
  return true;
}

BranchSequence random_backward_sequence(const TileCatalog& cat, int first_tile, int depth, Rng& rng) {
  BranchSequence xi;
  xi.tiles.push_back(first_tile);
  for (int i = 0; i < depth; ++i) {
    // predecessors: tiles T with A(T, current) = 1, i.e. color(T) = side(current)
    Side need = cat.one_tiles()[xi.tiles.back()].side;
    const auto& cand = cat.by_color(need);
    xi.tiles.push_back(cand[rng.uniform_int(static_cast<int>(cand.size()))]);
  }
  return xi;
}

TemporalDelta temporal_delta(const TileCatalog& cat, const Potential& phi, const BranchSequence& xi,
                             const SpherePoint& x, const SpherePoint& y, int K) {
  if (!backward_admissible(cat, xi))
    fail(ErrorKind::PreconditionViolated, "temporal_delta: sequence not backward admissible");
  if (K > xi.depth()) fail(ErrorKind::PreconditionViolated, "temporal_delta: K exceeds sequence depth");
  const OneTile& head = cat.one_tiles()[xi.tiles.front()];
  for (const SpherePoint* p : {&x, &y}) {
    if (p->infinite || cat.curve().dist(*p) < cat.map().tol().branch)
      fail(ErrorKind::PreconditionViolated, "temporal_delta: point too close to the curve");
    if (cat.curve().side(*p) != head.color)
      fail(ErrorKind::PreconditionViolated, "temporal_delta: point not in f(xi_0)");
  }

  SpherePoint zx = x, zy = y;
  double sum = 0.0;
  std::vector<double> terms;
  for (int i = 0; i <= K; ++i) {
    const OneTile& t = cat.one_tiles()[xi.tiles[i]];
    zx = inverse_branch(cat, t, zx, kLiftMargin, false);
    zy = inverse_branch(cat, t, zy, kLiftMargin, false);
    double term = phi(zx) - phi(zy);
    terms.push_back(term);
    sum += term;
  }

  TemporalDelta out;
  out.value = sum;
  // geometric envelope |t_i| <= A rho^i with rho from the fitted contraction
  // at the potential's Hoelder exponent. A is fitted over a trailing window;
  // the slack factor absorbs the step-to-step fluctuation of the chordal
  // contraction near the postcritical points (the bi-Lipschitz constants of
  // the metric surrogate).
  double rho = std::min(0.9, std::pow(cat.expansion_estimate(), -phi.hoelder_exponent));
  double A = 0.0;
  for (std::size_t i = terms.size() >= 8 ? terms.size() - 8 : 0; i < terms.size(); ++i)
    A = std::max(A, std::fabs(terms[i]) / std::pow(rho, double(i)));
  out.tail_bound = 6.0 * A * std::pow(rho, double(K + 1)) / (1.0 - rho) + 1e-15;
  return out;
}

double temporal_distance(const TileCatalog& cat, const Potential& phi, const BranchSequence& xi,
                         const BranchSequence& eta, const SpherePoint& x, const SpherePoint& y,
                         int K) {
  if (cat.one_tiles()[xi.tiles.front()].color != cat.one_tiles()[eta.tiles.front()].color)
    fail(ErrorKind::PreconditionViolated, "temporal_distance: branch roots have different images");
  return temporal_delta(cat, phi, xi, x, y, K).value - temporal_delta(cat, phi, eta, x, y, K).value;
}

namespace {

// Pullback of a point through a backward word (chain recorded front to back)
// returning the Birkhoff sum of phi over the chain points.
double chain_birkhoff(const TileCatalog& cat, const Potential& phi, const std::vector<int>& word,
                      const SpherePoint& x) {
  SpherePoint z = x;
  double s = 0.0;
  for (std::size_t k = word.size(); k-- > 0;) {
    z = inverse_branch(cat, cat.one_tiles()[word[k]], z, kLiftMargin, false);
    s += phi(z);
  }
  return s;
}

}  // namespace

SniResult sni_probe(const TileCatalog& cat, const Potential& phi, int tile_level, int depth,
                    int n_samples, std::uint64_t seed) {
  if (tile_level < 1 || depth < 1 || n_samples < 1)
    fail(ErrorKind::BadInput, "sni_probe: levels and sample count must be positive");
  Rng rng(seed);
  const double alpha = phi.hoelder_exponent;

  SniResult out;
  out.epsilon_estimate = 1e300;
  int produced = 0, attempts = 0;
  while (produced < n_samples && attempts < 20 * n_samples) {
    ++attempts;
    // random admissible tile word of the requested level
    TileWord w;
    w.push_back(rng.uniform_int(cat.tile_count()));
    for (int i = 1; i < tile_level; ++i) {
      Side s = cat.one_tiles()[w.front()].side;
      const auto& cand = cat.by_color(s);
      TileWord nw;
      nw.push_back(cand[rng.uniform_int(static_cast<int>(cand.size()))]);
      nw.insert(nw.end(), w.begin(), w.end());
      w = nw;
    }

    // realize with probes; pick the farthest probe pair as x1, x2
    TileRealization real;
    std::vector<SpherePoint> pulled = cat.probe_points(cat.one_tiles()[w.back()].color);
    try {
      real = realize_tile(cat, w);
      for (std::size_t k = w.size(); k-- > 0;)
        for (auto& p : pulled) p = inverse_branch(cat, cat.one_tiles()[w[k]], p, kLiftMargin, false);
    } catch (const Error&) {
      continue;
    }
    double best = -1.0;
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < pulled.size(); ++i)
      for (std::size_t j = i + 1; j < pulled.size(); ++j) {
        double dd = chordal_dist(pulled[i], pulled[j]);
        if (dd > best) {
          best = dd;
          bi = i;
          bj = j;
        }
      }
    if (best < 0.2 * real.diam_estimate) continue;  // insufficient separation
    SpherePoint x1 = pulled[bi], x2 = pulled[bj];

    // branch pairs: distinct backward words of length `depth` landing on w
    double sample_max = 0.0;
    int pairs = 0;
    for (int trial = 0; trial < 24 && pairs < 8; ++trial) {
      auto backward_word = [&]() {
        std::vector<int> v(depth);
        Side need = cat.one_tiles()[w.front()].side;
        for (int k = depth - 1; k >= 0; --k) {
          const auto& cand = cat.by_color(need);
          v[k] = cand[rng.uniform_int(static_cast<int>(cand.size()))];
          need = cat.one_tiles()[v[k]].side;
        }
        return v;
      };
      std::vector<int> v1 = backward_word(), v2 = backward_word();
      if (v1 == v2) continue;
      double q;
      try {
        double s11 = chain_birkhoff(cat, phi, v1, x1);
        double s21 = chain_birkhoff(cat, phi, v2, x1);
        double s12 = chain_birkhoff(cat, phi, v1, x2);
        double s22 = chain_birkhoff(cat, phi, v2, x2);
        q = std::fabs(s11 - s21 - s12 + s22) / std::pow(chordal_dist(x1, x2), alpha);
      } catch (const Error&) {
        continue;
      }
      sample_max = std::max(sample_max, q);
      ++pairs;
    }
    if (pairs == 0) continue;

    SniSample sample;
    sample.tile_word = w;
    sample.separation = best;
    sample.best_quotient = sample_max;
    out.samples.push_back(sample);
    out.epsilon_estimate = std::min(out.epsilon_estimate, sample_max);
    ++produced;
  }
  if (out.samples.empty())
    fail(ErrorKind::NumericFailure, "sni_probe: no well-separated point pairs produced");
  return out;
}

CohomResult cohomology_probe(const OrbitStore& store) {
  CohomResult out;
  if (store.orbits().empty()) return out;
  double lo = 1e300, hi = -1e300;
  for (const auto& orbit : store.orbits()) {
    double avg = orbit.birkhoff / orbit.period;
    lo = std::min(lo, avg);
    hi = std::max(hi, avg);
  }
  out.min_average = lo;
  out.max_average = hi;
  out.spread = hi - lo;
  return out;
}

}  // namespace etm
