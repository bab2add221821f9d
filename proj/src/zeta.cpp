#include "etm/zeta.hpp"

#include <cmath>
#include <sstream>

namespace etm {

Complex z_n(const OrbitStore& store, Complex s, int n) {
  if (n < 1 || n > store.n_max()) {
    std::ostringstream os;
    os << "z_n: period " << n << " missing from the orbit store (n_max " << store.n_max() << ")";
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  Complex sum(0, 0);
  for (const auto& r : store.fixed_points(n)) sum += std::exp(-s * r.birkhoff);
  return sum;
}

Complex z_n_symbolic(const OrbitStore& store, Complex s, int n) {
  if (n < 1 || n > store.n_max())
    fail(ErrorKind::PreconditionViolated, "z_n_symbolic: period missing from the orbit store");
  Complex sum(0, 0);
  for (const auto& r : store.fixed_points(n))
    sum += double(r.word_count) * std::exp(-s * r.birkhoff);
  return sum;
}

ZetaEvaluation log_zeta_partial(const OrbitStore& store, Complex s, int N) {
  if (N > store.n_max()) fail(ErrorKind::PreconditionViolated, "log_zeta_partial: N beyond store");
  ZetaEvaluation ev;
  ev.s = s;
  ev.truncation = N;
  for (int n = 1; n <= N; ++n) {
    Complex zn = z_n(store, s, n);
    ev.per_n.push_back(zn);
    ev.log_sum += zn / double(n);
  }
  ev.euler_log = (N >= 1) ? euler_product_partial(store, s, N) : Complex(0, 0);

  if (N >= 2) {
    double zN = std::abs(ev.per_n[N - 1]), zN1 = std::abs(ev.per_n[N - 2]);
    if (zN1 > 0) {
      double r = (zN / zN1) * double(N - 1) / double(N);
      ev.tail_estimate = (r >= 1.0) ? std::numeric_limits<double>::infinity()
                                    : (zN / double(N)) * r / (1.0 - r);
    }
  }
  return ev;
}

Complex dirichlet_partial(const OrbitStore& store, Complex s, int N) {
  if (N > store.n_max()) fail(ErrorKind::PreconditionViolated, "dirichlet_partial: N beyond store");
  const RationalMap& f = store.catalog()->map();
  Complex sum(0, 0);
  for (int n = 1; n <= N; ++n) {
    Complex zn(0, 0);
    for (const auto& r : store.fixed_points(n)) {
      double w = 1.0;
      SpherePoint p = r.point;
      for (int i = 0; i < n; ++i) {
        w *= f.local_degree(p);
        p = f.eval(p);
      }
      zn += w * std::exp(-s * r.birkhoff);
    }
    sum += zn / double(n);
  }
  return sum;
}

Complex euler_product_partial(const OrbitStore& store, Complex s, int N) {
  if (N > store.n_max()) fail(ErrorKind::PreconditionViolated, "euler_product_partial: N beyond store");
  Complex sum(0, 0);
  for (const auto& orbit : store.orbits()) {
    if (orbit.period > N) continue;
    Complex factor = std::exp(-s * orbit.birkhoff);
    if (std::abs(factor) >= 1.0) {
      std::ostringstream os;
      os << "euler_product_partial: factor modulus " << std::abs(factor)
         << " >= 1 at period " << orbit.period << " (s in the divergence region)";
      fail(ErrorKind::PreconditionViolated, os.str());
    }
    sum += -std::log(Complex(1, 0) - factor);
  }
  return sum;
}

}  // namespace etm
