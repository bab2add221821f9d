#include "etm/counting.hpp"

#include <cmath>
#include <sstream>

namespace etm {

namespace {

// Gauss-Kronrod 7-15 nodes on [-1,1]
const double kXgk[8] = {0.991455371120812639206854697526329,
                        0.949107912342758524526189684047851,
                        0.864864423359769072789712788640926,
                        0.741531185599394439863864773280788,
                        0.586087235467691130294144838258730,
                        0.405845151377397166906606412076961,
                        0.207784955007898467600689403773245,
                        0.000000000000000000000000000000000};
const double kWk[8] = {0.022935322010529224963732008058970,
                       0.063092092629978553290700663189204,
                       0.104790010322250183839876322541518,
                       0.140653259715525918745189590510238,
                       0.169004726639267902826583426598550,
                       0.190350578064785409913256402421014,
                       0.204432940075298892414161999234649,
                       0.209482141084727828012999174891714};
const double kWg[4] = {0.129484966168869693270611432679082,
                       0.279705391489276667901467771423780,
                       0.381830050505118944950369775488975,
                       0.417959183673469387755102040816327};

struct GkResult {
  double value;
  double error;
};

GkResult gk15(const std::function<double(double)>& fn, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = fn(c);
  double resk = kWk[7] * fc, resg = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    double x = h * kXgk[j];
    double f1 = fn(c - x), f2 = fn(c + x);
    resk += kWk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  GkResult r;
  r.value = resk * h;
  r.error = std::fabs((resk - resg) * h);
  return r;
}

double adaptive_quad(const std::function<double(double)>& fn, double a, double b, double rel_tol) {
  struct Seg {
    double a, b, value, error;
  };
  GkResult whole = gk15(fn, a, b);
  std::vector<Seg> segs{{a, b, whole.value, whole.error}};
  for (int round = 0; round < 60; ++round) {
    double total = 0, err = 0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total += segs[i].value;
      err += segs[i].error;
      if (segs[i].error > segs[worst].error) worst = i;
    }
    if (err <= rel_tol * std::max(1e-300, std::fabs(total)) || segs.size() > 4000) return total;
    Seg s = segs[worst];
    double m = 0.5 * (s.a + s.b);
    GkResult l = gk15(fn, s.a, m), r = gk15(fn, m, s.b);
    segs[worst] = {s.a, m, l.value, l.error};
    segs.push_back({m, s.b, r.value, r.error});
  }
  double total = 0;
  for (auto& s : segs) total += s.value;
  return total;
}

}  // namespace

double li(double y) {
  if (!(y >= 2.0)) fail(ErrorKind::PreconditionViolated, "li: domain is y >= 2");
  if (y == 2.0) return 0.0;
  auto integrand = [](double t) { return 1.0 / std::log(t); };
  // interval doubling from 2 keeps the adaptive splits local
  double total = 0.0, a = 2.0;
  while (a < y) {
    double b = std::min(y, a * 2.0);
    total += adaptive_quad(integrand, a, b, 1e-12);
    a = b;
  }
  return total;
}

long long pi_count(const OrbitStore& store, double T) {
  const auto& cert = store.certificate();
  if (!cert)
    fail(ErrorKind::PreconditionViolated, "pi_count: store has no positivity certificate");
  if (T > store.certified_length_bound()) {
    long long needed = static_cast<long long>(cert->n) *
                       static_cast<long long>(std::ceil(T / cert->margin));
    std::ostringstream os;
    os << "pi_count: store complete only to T = " << store.certified_length_bound()
       << "; T = " << T << " requires N_max >= " << needed;
    fail(ErrorKind::PreconditionViolated, os.str());
  }
  long long count = 0;
  for (const auto& orbit : store.orbits())
    if (orbit.birkhoff <= T) ++count;
  return count;
}

CountReport pot_report(const OrbitStore& store, double s0, const std::vector<double>& t_grid) {
  CountReport rep;
  rep.t_grid = t_grid;

  double lo = 1e300, hi = -1e300;
  for (const auto& orbit : store.orbits()) {
    double avg = orbit.birkhoff / orbit.period;
    lo = std::min(lo, avg);
    hi = std::max(hi, avg);
  }
  rep.length_spread = store.orbits().empty() ? 0.0 : hi - lo;
  rep.oscillation_flagged = rep.length_spread < 1e-6;

  for (double T : t_grid) {
    double y = std::exp(s0 * T);
    if (y < 2.0) fail(ErrorKind::BadInput, "pot_report: grid point with e^{s0 T} < 2");
    long long p = pi_count(store, T);
    double L = li(y);
    rep.pi_vals.push_back(p);
    rep.li_vals.push_back(L);
    rep.ratios.push_back(L > 0 ? double(p) / L : 0.0);
    rep.secondary.push_back(y / (s0 * T));
  }

  // slope of log |pi - Li| against T where the difference is nonzero
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    double diff = std::fabs(double(rep.pi_vals[i]) - rep.li_vals[i]);
    if (diff <= 0) continue;
    double x = t_grid[i], yv = std::log(diff);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
    ++n;
  }
  if (n >= 2) rep.remainder_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return rep;
}

}  // namespace etm
