#include "etm/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace etm {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
  double mx = -1e300;
  for (double x : xs) mx = std::max(mx, x);
  if (mx == -1e300) return -1e300;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

void tree_leaves(const RationalMap& f, const std::function<double(const SpherePoint&)>& phi, int m,
                 const SpherePoint& y, Rng& rng, double sum_phi, double log_deg,
                 std::vector<double>& out_sum, std::vector<double>& out_logdeg) {
  if (m == 0) {
    out_sum.push_back(sum_phi);
    out_logdeg.push_back(log_deg);
    return;
  }
  auto pre = f.preimages(y, rng);
  for (const auto& e : pre)
    tree_leaves(f, phi, m - 1, e.point, rng, sum_phi + phi(e.point),
                log_deg + std::log(double(e.multiplicity)), out_sum, out_logdeg);
}

}  // namespace

double log_transfer_value(const RationalMap& f, const std::function<double(const SpherePoint&)>& psi,
                          int m, const SpherePoint& y, std::uint64_t seed) {
  if (m < 0) fail(ErrorKind::BadInput, "log_transfer_value: negative depth");
  if (m == 0) return 0.0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      Rng rng(seed + attempt);
      std::vector<double> s, ld;
      SpherePoint base = y;
      if (attempt > 0 && y.is_finite()) base = SpherePoint(y.z + Complex(1e-9, 1e-9));
      tree_leaves(f, psi, m, base, rng, 0.0, 0.0, s, ld);
      std::vector<double> terms(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) terms[i] = s[i] + ld[i];
      return log_sum_exp(terms);
    } catch (const Error& e) {
      if (attempt == 1 || e.kind() != ErrorKind::NumericFailure) throw;
    }
  }
  fail(ErrorKind::NumericFailure, "log_transfer_value: unreachable");
}

double transfer_value(const RationalMap& f, const std::function<double(const SpherePoint&)>& psi,
                      int m, const SpherePoint& y) {
  return std::exp(log_transfer_value(f, psi, m, y));
}

// Leaf cache: the tree geometry does not depend on a, so p_m(a) for psi=-a phi
// reduces to one log-sum-exp over (S_m phi, log deg) pairs.
class PressureCurve {
 public:
  PressureCurve(const RationalMap& f, const Potential& phi, int m, const SpherePoint& base)
      : m_(m) {
    Rng rng(997);
    tree_leaves(f, phi.value, m, base, rng, 0.0, 0.0, sum_, logdeg_);
  }

  double operator()(double a) const {
    double mx = -1e300;
    for (std::size_t i = 0; i < sum_.size(); ++i) mx = std::max(mx, logdeg_[i] - a * sum_[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < sum_.size(); ++i) s += std::exp(logdeg_[i] - a * sum_[i] - mx);
    return (mx + std::log(s)) / m_;
  }

 private:
  int m_;
  std::vector<double> sum_, logdeg_;
};

double pressure(const RationalMap& f, const Potential& phi, double a, int m, const SpherePoint& y) {
  auto psi = [&](const SpherePoint& z) { return -a * phi(z); };
  return log_transfer_value(f, psi, m, y) / double(m);
}

namespace {

double solve_root(const PressureCurve& curve, double lo, double hi, double p_lo, double p_hi,
                  double tol_pressure) {
  double a = lo, b = hi, fa = p_lo, fb = p_hi;
  double mid = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    // secant proposal, clipped into the bracket, else bisection
    double prop = b - fb * (b - a) / (fb - fa);
    if (!(prop > a && prop < b)) prop = 0.5 * (a + b);
    double fp = curve(prop);
    if (std::fabs(fp) < tol_pressure) return prop;
    if (fp > 0) {
      a = prop;
      fa = fp;
    } else {
      b = prop;
      fb = fp;
    }
    mid = 0.5 * (a + b);
    if (b - a < 1e-13 * (1.0 + std::fabs(mid))) break;
  }
  return mid;
}

}  // namespace

double solve_s0(const RationalMap& f, const Potential& phi, int m, const SpherePoint& base,
                const PositivityCertificate& cert) {
  if (!(cert.margin > 0)) fail(ErrorKind::PreconditionViolated, "solve_s0: empty positivity margin");
  PressureCurve curve(f, phi, m, base);
  double lo = 1e-6;
  double hi = std::log(double(f.degree())) * cert.n / cert.margin + 1.0;
  double p_lo = curve(lo), p_hi = curve(hi);
  if (!(p_lo > 0.0 && p_hi < 0.0)) {
    std::ostringstream os;
    os << "solve_s0: no sign change on [" << lo << ", " << hi << "] (p_lo " << p_lo << ", p_hi "
       << p_hi << "); potential not eventually positive or m too small";
    fail(ErrorKind::NumericFailure, os.str());
  }
  double s0 = solve_root(curve, lo, hi, p_lo, p_hi, f.tol().pressure);
  if (std::fabs(curve(s0)) >= f.tol().pressure)
    fail(ErrorKind::NumericFailure, "solve_s0: residual above tau_pressure");
  return s0;
}

ThermoGrid::ThermoGrid(const TileCatalog& cat, const Potential& phi, int max_level)
    : cat_(&cat), phi_(phi), hier_(cat, max_level, false) {
  phi_vals_.resize(max_level + 1);
  for (int l = 1; l <= max_level; ++l) {
    const auto& pts = hier_.level(l).point;
    phi_vals_[l].resize(pts.size());
    parallel_for(pts.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) phi_vals_[l][i] = phi_(pts[i]);
    });
  }
}

double ThermoGrid::birkhoff_at(int level, std::size_t idx, int k) const {
  if (k > level) fail(ErrorKind::BadInput, "birkhoff_at: k exceeds word level");
  double s = 0.0;
  std::size_t cur = idx;
  for (int i = 0; i < k; ++i) {
    s += phi_vals_[level - i][cur];
    cur = hier_.level(level - i).shift[cur];
  }
  return s;
}

Normalization::Normalization(std::shared_ptr<const ThermoGrid> grid, int level, double t)
    : grid_(std::move(grid)), level_(level), d_(grid_->catalog().degree()), t_(t) {
  if (level + 1 > grid_->max_level())
    fail(ErrorKind::BadInput, "Normalization: grid lacks the child level");
  const std::size_t n = grid_->hierarchy().words_at(level);
  const auto& child_level = grid_->hierarchy().level(level + 1);

  std::vector<double> chi(n * d_), ew(n * d_);
  std::vector<std::uint32_t> pref(n * d_);
  for (std::size_t w = 0; w < n; ++w)
    for (int r = 0; r < d_; ++r) {
      std::size_t c = w * d_ + r;
      chi[c] = t_ * grid_->phi_at(level + 1, c);
      ew[c] = std::exp(chi[c]);
      pref[c] = child_level.prefix[c];
    }

  auto apply_raw = [&](const std::vector<double>& u, std::vector<double>& out) {
    for (std::size_t w = 0; w < n; ++w) {
      double s = 0.0;
      for (int r = 0; r < d_; ++r) {
        std::size_t c = w * d_ + r;
        s += ew[c] * u[pref[c]];
      }
      out[w] = s;
    }
  };

  // right Perron vector by power iteration with Collatz-Wielandt bounds
  u_.assign(n, 1.0);
  std::vector<double> next(n);
  double lam = 1.0;
  bool converged = false;
  for (int it = 0; it < 20000; ++it) {
    apply_raw(u_, next);
    double lo = 1e300, hi = -1e300, mx = 0.0;
    for (std::size_t w = 0; w < n; ++w) {
      double ratio = next[w] / u_[w];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      mx = std::max(mx, next[w]);
    }
    for (std::size_t w = 0; w < n; ++w) u_[w] = next[w] / mx;
    lam = 0.5 * (lo + hi);
    if (hi - lo < 5e-14 * lam && it > 4) {
      converged = true;
      break;
    }
  }
  if (!converged) fail(ErrorKind::NumericFailure, "Normalization: Perron iteration stalled");
  log_lambda_ = std::log(lam);

  // left Perron vector (invariant weights of the normalized operator)
  pi_.assign(n, 1.0 / double(n));
  std::vector<double> pnext(n);
  for (int it = 0; it < 5000; ++it) {
    std::fill(pnext.begin(), pnext.end(), 0.0);
    for (std::size_t w = 0; w < n; ++w)
      for (int r = 0; r < d_; ++r) {
        std::size_t c = w * d_ + r;
        pnext[pref[c]] += ew[c] * pi_[w];
      }
    double tot = std::accumulate(pnext.begin(), pnext.end(), 0.0);
    double diff = 0.0;
    for (std::size_t w = 0; w < n; ++w) {
      pnext[w] /= tot;
      diff = std::max(diff, std::fabs(pnext[w] - pi_[w]));
    }
    pi_.swap(pnext);
    if (diff < 1e-15 && it > 4) break;
  }
  // weight by u and renormalize: the invariant measure of the tilde operator
  // has density u against the eigenmeasure
  double tot = 0.0;
  for (std::size_t w = 0; w < n; ++w) {
    pi_[w] *= u_[w];
    tot += pi_[w];
  }
  for (auto& x : pi_) x /= tot;

  tw_.resize(n * d_);
  etw_.resize(n * d_);
  for (std::size_t w = 0; w < n; ++w)
    for (int r = 0; r < d_; ++r) {
      std::size_t c = w * d_ + r;
      tw_[c] = chi[c] - log_lambda_ + std::log(u_[pref[c]]) - std::log(u_[w]);
      etw_[c] = std::exp(tw_[c]);
    }
}

double Normalization::phi_child(std::size_t w, int r) const {
  return grid_->phi_at(level_ + 1, w * d_ + r);
}

std::size_t Normalization::child_prefix(std::size_t w, int r) const {
  return grid_->hierarchy().level(level_ + 1).prefix[w * d_ + r];
}

TileFunctionR Normalization::apply(const TileFunctionR& u) const {
  if (u.level != level_ || u.v.size() != grid_->hierarchy().words_at(level_))
    fail(ErrorKind::BadInput, "Normalization::apply: level mismatch");
  TileFunctionR out;
  out.level = level_;
  out.v.resize(u.v.size());
  const std::size_t n = u.v.size();
  for (std::size_t w = 0; w < n; ++w) {
    double s = 0.0;
    for (int r = 0; r < d_; ++r) s += etw_[w * d_ + r] * u.v[child_prefix(w, r)];
    out.v[w] = s;
  }
  return out;
}

SplitOperator::SplitOperator(std::shared_ptr<const Normalization> norm, double im_s)
    : norm_(std::move(norm)), b_(im_s) {
  const auto& hier = norm_->grid().hierarchy();
  const std::size_t n = hier.words_at(norm_->level());
  side_rank_.resize(n);
  for (std::size_t w = 0; w < n; ++w) {
    int s = static_cast<int>(hier.side_of(norm_->level(), w));
    side_rank_[w] = static_cast<std::uint32_t>(side_words_[s].size());
    side_words_[s].push_back(static_cast<std::uint32_t>(w));
  }
}

TileFunctionC SplitOperator::apply(const TileFunctionC& u) const {
  const std::size_t n = norm_->grid().hierarchy().words_at(norm_->level());
  if (u.level != norm_->level() || u.v.size() != n)
    fail(ErrorKind::BadInput, "SplitOperator::apply: level mismatch");
  const int d = norm_->grid().catalog().degree();
  TileFunctionC out;
  out.level = u.level;
  out.v.resize(n);
  for (std::size_t w = 0; w < n; ++w) {
    Complex s(0, 0);
    for (int r = 0; r < d; ++r) {
      double lw = norm_->tilde_log_weight(w, r);
      double ph = -b_ * norm_->phi_child(w, r);
      s += std::exp(lw) * Complex(std::cos(ph), std::sin(ph)) * u.v[norm_->child_prefix(w, r)];
    }
    out.v[w] = s;
  }
  return out;
}

SplitOperator::BlockMatrix SplitOperator::one_step() const {
  const int d = norm_->grid().catalog().degree();
  const auto& hier = norm_->grid().hierarchy();
  BlockMatrix B;
  for (int c = 0; c < 2; ++c)
    for (int cc = 0; cc < 2; ++cc) B.row_ptr[c][cc].push_back(0);
  for (int c = 0; c < 2; ++c) {
    for (std::uint32_t w : side_words_[c]) {
      std::array<std::vector<std::pair<std::uint32_t, Complex>>, 2> row;
      for (int r = 0; r < d; ++r) {
        std::size_t col = norm_->child_prefix(w, r);
        int cc = static_cast<int>(hier.side_of(norm_->level(), col));
        double lw = norm_->tilde_log_weight(w, r);
        double ph = -b_ * norm_->phi_child(w, r);
        row[cc].push_back({side_rank_[col], std::exp(lw) * Complex(std::cos(ph), std::sin(ph))});
      }
      for (int cc = 0; cc < 2; ++cc) {
        std::sort(row[cc].begin(), row[cc].end(),
                  [](auto& a, auto& b) { return a.first < b.first; });
        for (auto& e : row[cc]) {
          B.col[c][cc].push_back(e.first);
          B.val[c][cc].push_back(e.second);
        }
        B.row_ptr[c][cc].push_back(B.col[c][cc].size());
      }
    }
  }
  return B;
}

SplitOperator::BlockMatrix SplitOperator::power_blocks(int n) const {
  if (n < 1) fail(ErrorKind::BadInput, "power_blocks: n must be >= 1");
  BlockMatrix A = one_step();
  BlockMatrix P = A;
  for (int k = 1; k < n; ++k) {
    // next(c,c') = sum_{c''} A(c,c'') P(c'',c')
    BlockMatrix N;
    for (int c = 0; c < 2; ++c) {
      std::size_t rows = side_words_[c].size();
      for (int cc = 0; cc < 2; ++cc) N.row_ptr[c][cc].assign(1, 0);
      std::array<std::vector<Complex>, 2> scratch;
      std::array<std::vector<std::uint32_t>, 2> touched;
      for (int cc = 0; cc < 2; ++cc) scratch[cc].assign(side_words_[cc].size(), Complex(0, 0));
      for (std::size_t i = 0; i < rows; ++i) {
        for (int cc = 0; cc < 2; ++cc) touched[cc].clear();
        for (int cm = 0; cm < 2; ++cm) {
          for (std::size_t e = A.row_ptr[c][cm][i]; e < A.row_ptr[c][cm][i + 1]; ++e) {
            std::uint32_t k2 = A.col[c][cm][e];
            Complex av = A.val[c][cm][e];
            for (int cc = 0; cc < 2; ++cc) {
              for (std::size_t e2 = P.row_ptr[cm][cc][k2]; e2 < P.row_ptr[cm][cc][k2 + 1]; ++e2) {
                std::uint32_t col = P.col[cm][cc][e2];
                if (scratch[cc][col] == Complex(0, 0)) touched[cc].push_back(col);
                scratch[cc][col] += av * P.val[cm][cc][e2];
              }
            }
          }
        }
        for (int cc = 0; cc < 2; ++cc) {
          std::sort(touched[cc].begin(), touched[cc].end());
          for (std::uint32_t col : touched[cc]) {
            N.col[c][cc].push_back(col);
            N.val[c][cc].push_back(scratch[cc][col]);
            scratch[cc][col] = Complex(0, 0);
          }
          N.row_ptr[c][cc].push_back(N.col[c][cc].size());
        }
      }
    }
    P = std::move(N);
  }
  return P;
}

TileFunctionC SplitOperator::apply_blocks(const BlockMatrix& B, const TileFunctionC& u) const {
  const std::size_t n = norm_->grid().hierarchy().words_at(norm_->level());
  if (u.level != norm_->level() || u.v.size() != n)
    fail(ErrorKind::BadInput, "apply_blocks: level mismatch");
  TileFunctionC out;
  out.level = u.level;
  out.v.assign(n, Complex(0, 0));
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < side_words_[c].size(); ++i) {
      Complex s(0, 0);
      for (int cc = 0; cc < 2; ++cc) {
        for (std::size_t e = B.row_ptr[c][cc][i]; e < B.row_ptr[c][cc][i + 1]; ++e)
          s += B.val[c][cc][e] * u.v[side_words_[cc][B.col[c][cc][e]]];
      }
      out.v[side_words_[c][i]] = s;
    }
  }
  return out;
}

namespace {

// g[j] = Lbar^j(1)(y) for j = 0..depth via one exact tree traversal
void cesaro_tree(const RationalMap& f, const std::function<double(const SpherePoint&)>& phibar,
                 int depth, const SpherePoint& y, Rng& rng, std::vector<double>& g) {
  g.assign(depth + 1, 0.0);
  g[0] = 1.0;
  if (depth == 0) return;
  auto pre = f.preimages(y, rng);
  std::vector<double> child;
  for (const auto& e : pre) {
    cesaro_tree(f, phibar, depth - 1, e.point, rng, child);
    double wgt = double(e.multiplicity) * std::exp(phibar(e.point));
    for (int j = 0; j + 1 <= depth; ++j) g[j + 1] += wgt * child[j];
  }
}

}  // namespace

CesaroEigenfunction eigenfunction(const ThermoGrid& grid, int level, int iterations,
                                  double log_pressure) {
  if (iterations < 1) fail(ErrorKind::BadInput, "eigenfunction: iterations must be >= 1");
  if (iterations > 12) fail(ErrorKind::BudgetExceeded, "eigenfunction: depth budget exceeded (J <= 12)");
  const RationalMap& f = grid.catalog().map();
  auto phibar = [&](const SpherePoint& z) { return grid.potential()(z) - log_pressure; };

  const auto& pts = grid.hierarchy().level(level).point;
  CesaroEigenfunction out;
  out.u.level = level;
  out.u.v.resize(pts.size());
  parallel_for(pts.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> g;
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng(1234567 + i);
      cesaro_tree(f, phibar, iterations - 1, pts[i], rng, g);
      double s = 0.0;
      for (double x : g) s += x;
      out.u.v[i] = s / double(iterations);
    }
  });

  // residual with grid reading of u at the children
  double res = 0.0;
  const int d = grid.catalog().degree();
  const auto& child_level = grid.hierarchy().level(level + 1);
  for (std::size_t w = 0; w < pts.size(); ++w) {
    double s = 0.0;
    for (int r = 0; r < d; ++r) {
      std::size_t c = w * d + r;
      s += std::exp(phibar(grid.hierarchy().level(level + 1).point[c])) * out.u.v[child_level.prefix[c]];
    }
    res = std::max(res, std::fabs(s - out.u.v[w]));
  }
  out.residual = res;
  for (double x : out.u.v)
    if (!(x > 0.0)) fail(ErrorKind::NumericFailure, "eigenfunction: non-positive value");
  return out;
}

GibbsWeights gibbs_weights(const ThermoGrid& grid, int level, double log_pressure) {
  GibbsWeights gw;
  gw.level = level;
  const std::size_t n = grid.hierarchy().words_at(level);
  std::vector<double> logs(n);
  for (std::size_t w = 0; w < n; ++w)
    logs[w] = grid.birkhoff_at(level, w, level) - level * log_pressure;
  double lse = log_sum_exp(logs);
  gw.w.resize(n);
  for (std::size_t w = 0; w < n; ++w) gw.w[w] = std::exp(logs[w] - lse);

  if (level >= 2) {
    // parent (level-1 prefix) mass over child mass
    std::vector<double> plogs(grid.hierarchy().words_at(level - 1));
    for (std::size_t w = 0; w < plogs.size(); ++w)
      plogs[w] = grid.birkhoff_at(level - 1, w, level - 1) - (level - 1) * log_pressure;
    double plse = log_sum_exp(plogs);
    double mx = 0.0;
    for (std::size_t w = 0; w < n; ++w) {
      std::size_t par = grid.hierarchy().level(level).prefix[w];
      mx = std::max(mx, std::exp(plogs[par] - plse) / gw.w[w]);
    }
    gw.max_doubling_ratio = mx;
  }
  return gw;
}

namespace {

double fit_ratio(const std::vector<double>& norms) {
  // least squares slope of log norm against n, ignoring zero/denormal entries
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < norms.size(); ++i)
    if (norms[i] > 1e-250) pts.push_back({double(i + 1), std::log(norms[i])});
  if (pts.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = double(pts.size());
  for (auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return std::exp(slope);
}

}  // namespace

DecayProbe spectral_decay_probe(const Normalization& norm, const GibbsWeights& gw,
                                const TileFunctionR& u, int n_max) {
  if (gw.level != norm.level() || u.level != norm.level())
    fail(ErrorKind::BadInput, "spectral_decay_probe: level mismatch");
  double mean = 0.0;
  for (std::size_t w = 0; w < u.v.size(); ++w) mean += gw.w[w] * u.v[w];
  TileFunctionR cur = u;
  for (auto& x : cur.v) x -= mean;

  DecayProbe probe;
  for (int n = 1; n <= n_max; ++n) {
    cur = norm.apply(cur);
    double sup = 0.0;
    for (double x : cur.v) sup = std::max(sup, std::fabs(x));
    probe.norms.push_back(sup);
  }
  probe.fitted_ratio = fit_ratio(probe.norms);
  return probe;
}

DecayProbe l2_decay_probe(const SplitOperator& op, const Normalization& s0_norm, int n_max) {
  if (s0_norm.level() != op.level()) fail(ErrorKind::BadInput, "l2_decay_probe: level mismatch");
  const auto& pi = s0_norm.invariant_weights();
  TileFunctionC cur;
  cur.level = op.level();
  cur.v.assign(pi.size(), Complex(1, 0));

  DecayProbe probe;
  for (int n = 1; n <= n_max; ++n) {
    cur = op.apply(cur);
    double s = 0.0;
    for (std::size_t w = 0; w < pi.size(); ++w) s += pi[w] * std::norm(cur.v[w]);
    probe.norms.push_back(std::sqrt(s));
  }
  probe.fitted_ratio = fit_ratio(probe.norms);
  return probe;
}

ThermoSolution solve_thermo(const TileCatalog& cat, const Potential& phi, const ThermoOptions& opts) {
  ThermoSolution sol;
  sol.phi = phi;

  auto cert = eventual_positivity(phi, cat, opts.n_probe, opts.probe_level);
  if (!cert)
    fail(ErrorKind::PreconditionViolated,
         "solve_thermo: potential has no eventual-positivity certificate on the probe grid");
  sol.certificate = *cert;

  const RationalMap& f = cat.map();
  const SpherePoint& base = cat.base_point(Side::Black);
  PressureCurve curve(f, phi, opts.m_pressure, base);

  double hi = std::log(double(f.degree())) * cert->n / cert->margin + 1.0;
  double p_lo = curve(1e-6), p_hi = curve(hi);
  if (!(p_lo > 0.0 && p_hi < 0.0))
    fail(ErrorKind::NumericFailure, "solve_thermo: pressure has no sign change in the bracket");
  sol.s0 = solve_root(curve, 1e-6, hi, p_lo, p_hi, f.tol().pressure);
  sol.s0_residual = std::fabs(curve(sol.s0));
  if (sol.s0_residual >= f.tol().pressure)
    fail(ErrorKind::NumericFailure, "solve_thermo: s0 residual above tau_pressure");

  sol.pressure_tree_phi = curve(-1.0);  // P(f, +phi)

  double prev = 0.0;
  bool first = true;
  for (double a = 0.0; a <= 1.2 * sol.s0 + opts.a_grid_step; a += opts.a_grid_step) {
    double p = curve(a);
    sol.pressure_samples.push_back({a, opts.m_pressure, p});
    if (!first && !(p < prev)) sol.pressure_monotone = false;
    prev = p;
    first = false;
  }

  auto grid = std::make_shared<const ThermoGrid>(cat, phi, opts.m_grid + 1);
  sol.grid = grid;
  sol.norm_phi = std::make_shared<const Normalization>(grid, opts.m_grid, 1.0);
  sol.norm_minus_s0 = std::make_shared<const Normalization>(grid, opts.m_grid, -sol.s0);
  sol.gibbs = gibbs_weights(*grid, opts.m_grid, sol.pressure_tree_phi);

  if (opts.cesaro_iterations >= 1) {
    CesaroEigenfunction ces =
        eigenfunction(*grid, std::min(opts.m_grid, 4), opts.cesaro_iterations, sol.pressure_tree_phi);
    sol.cesaro_residual = ces.residual;
    // compare shapes after mean-1 scaling on the coarser grid
    const auto& hier = grid->hierarchy();
    int lc = ces.u.level;
    std::vector<double> perron_coarse(hier.words_at(lc), 0.0);
    // push the Perron vector down by averaging grid values over coarse prefixes
    std::vector<int> counts(hier.words_at(lc), 0);
    for (std::size_t w = 0; w < sol.norm_phi->u().size(); ++w) {
      std::size_t p = hier.prefix_at(opts.m_grid, w, lc);
      perron_coarse[p] += sol.norm_phi->u()[w];
      counts[p] += 1;
    }
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < perron_coarse.size(); ++i) {
      perron_coarse[i] /= std::max(1, counts[i]);
      m1 += perron_coarse[i];
      m2 += ces.u.v[i];
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < perron_coarse.size(); ++i)
      gap = std::max(gap, std::fabs(perron_coarse[i] / m1 - ces.u.v[i] / m2) * perron_coarse.size());
    sol.eigenfunction_gap = gap;
  }

  for (double x : sol.norm_phi->u())
    if (!(x > 0)) fail(ErrorKind::NumericFailure, "solve_thermo: eigenfunction not positive");
  double wsum = 0.0;
  for (double x : sol.gibbs.w) wsum += x;
  if (std::fabs(wsum - 1.0) > 1e-12)
    fail(ErrorKind::NumericFailure, "solve_thermo: Gibbs weights do not sum to 1");
  return sol;
}

}  // namespace etm
