#pragma once

#include "etm/orbits.hpp"

namespace etm {

// Eulerian logarithmic integral Li(y) = int_2^y dt/log t, y >= 2, by adaptive
// Gauss-Kronrod quadrature with relative error below 1e-10.
double li(double y);

// Number of primitive orbits with weighted length <= T. Errors (naming the
// required n_max) when the store cannot certify completeness at T.
long long pi_count(const OrbitStore& store, double T);

struct CountReport {
  std::vector<double> t_grid;
  std::vector<long long> pi_vals;
  std::vector<double> li_vals;      // Li(e^{s0 T})
  std::vector<double> ratios;       // pi / Li
  std::vector<double> secondary;    // e^{s0 T} / (s0 T)
  double remainder_slope = 0.0;     // fit of log|pi - Li| against T, when defined
  double length_spread = 0.0;       // max - min of l(tau)/period over the store
  bool oscillation_flagged = false; // lattice-length (co-homologous) signature
};

CountReport pot_report(const OrbitStore& store, double s0, const std::vector<double>& t_grid);

}  // namespace etm
