#pragma once

#include "etm/orbits.hpp"

namespace etm {

struct ZetaEvaluation {
  Complex s{};
  int truncation = 0;
  Complex log_sum{};    // sum_{n<=N} Z^(n)(s)/n
  Complex euler_log{};  // sum over primitive orbits of -log(1 - e^{-s l})
  double tail_estimate = 0.0;
  std::vector<Complex> per_n;  // Z^(1..N)(s)
};

// Z^(n)(s) = sum over geometric fixed points of f^n of e^{-s S_n phi(x)}.
Complex z_n(const OrbitStore& store, Complex s, int n);

// The boundary-multiplicity convention: every length-n cyclic word contributes
// one term, i.e. points weighted by their word counts. This is the Z of the
// tile subshift pushed through the factor map; it differs from z_n only on
// the grand orbit of the curve.
Complex z_n_symbolic(const OrbitStore& store, Complex s, int n);

// Partial log zeta with a last-ratio geometric tail estimate.
ZetaEvaluation log_zeta_partial(const OrbitStore& store, Complex s, int N);

// Degree-weighted variant; equals log_zeta_partial when no orbit meets a
// critical point (the supported class).
Complex dirichlet_partial(const OrbitStore& store, Complex s, int N);

// log of the truncated Euler product over primitive orbits of period <= N;
// errors when a factor has modulus >= 1 (divergence region).
Complex euler_product_partial(const OrbitStore& store, Complex s, int N);

}  // namespace etm
