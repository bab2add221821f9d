#pragma once

#include <complex>
#include <memory>

#include "etm/orbits.hpp"

namespace etm {

// log of the exact preimage-tree sum  sum_{z in f^{-m}(y)} deg_{f^m}(z) e^{S_m psi(z)},
// accumulated by log-sum-exp over the tree.
double log_transfer_value(const RationalMap& f, const std::function<double(const SpherePoint&)>& psi,
                          int m, const SpherePoint& y, std::uint64_t seed = 97);

double transfer_value(const RationalMap& f, const std::function<double(const SpherePoint&)>& psi,
                      int m, const SpherePoint& y);

// p_m(a) estimator: (1/m) log of the tree sum for psi = -a phi.
double pressure(const RationalMap& f, const Potential& phi, double a, int m, const SpherePoint& y);

// Unique positive root of a -> pressure(a, m); bracketing plus Brent-style
// refinement, |pressure(s0)| < tol.pressure on exit.
double solve_s0(const RationalMap& f, const Potential& phi, int m, const SpherePoint& base,
                const PositivityCertificate& cert);

template <typename T>
struct TileFunction {
  int level = 0;
  std::vector<T> v;  // one value per level word, hierarchy order
};

using TileFunctionR = TileFunction<double>;
using TileFunctionC = TileFunction<Complex>;

// Shared grid data: collocation hierarchy plus potential values per level.
class ThermoGrid {
 public:
  ThermoGrid(const TileCatalog& cat, const Potential& phi, int max_level);

  const TileCatalog& catalog() const { return *cat_; }
  const TileHierarchy& hierarchy() const { return hier_; }
  const Potential& potential() const { return phi_; }
  int max_level() const { return hier_.max_level(); }
  double phi_at(int level, std::size_t idx) const { return phi_vals_[level][idx]; }
  // S_k phi along the forward orbit of a level-l word (k <= l-? uses shift chain, k < l).
  double birkhoff_at(int level, std::size_t idx, int k) const;

 private:
  const TileCatalog* cat_;
  Potential phi_;
  TileHierarchy hier_;
  std::vector<std::vector<double>> phi_vals_;
};

// Level-m normalization for the real potential chi = t * phi: the Perron pair
// of the grid transfer matrix M u[w] = sum_children e^{chi(child)} u[prefix].
// log_lambda estimates P(f, chi); the tilde weights make row sums exactly one,
// realizing the normalized operator on the grid.
class Normalization {
 public:
  Normalization(std::shared_ptr<const ThermoGrid> grid, int level, double t_times_phi);

  int level() const { return level_; }
  double factor() const { return t_; }
  double log_lambda() const { return log_lambda_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& invariant_weights() const { return pi_; }  // left Perron vector
  const ThermoGrid& grid() const { return *grid_; }

  // log weight of child r of word w: chi(child) - log lambda + log u[pfx] - log u[w]
  double tilde_log_weight(std::size_t w, int r) const { return tw_[w * d_ + r]; }
  double phi_child(std::size_t w, int r) const;          // phi at the child point
  std::size_t child_prefix(std::size_t w, int r) const;  // level-m index read by the child

  // One application of the normalized real operator to a level-m grid function.
  TileFunctionR apply(const TileFunctionR& u) const;

 private:
  std::shared_ptr<const ThermoGrid> grid_;
  int level_;
  int d_;
  double t_;
  double log_lambda_ = 0.0;
  std::vector<double> u_, pi_, tw_, etw_;
};

// Complex split operator L_{tilde(-s phi)} on the pair of side families of a
// level-m grid function, with the real normalization taken at a = Re(s).
class SplitOperator {
 public:
  SplitOperator(std::shared_ptr<const Normalization> norm, double im_s);

  int level() const { return norm_->level(); }
  const Normalization& normalization() const { return *norm_; }

  TileFunctionC apply(const TileFunctionC& u) const;

  // Explicit block matrices of the n-th power, composed blockwise per the
  // coordinate formula L^{n}_{c,c'} = sum_{c''} L^{1}_{c,c''} L^{n-1}_{c'',c'}.
  struct BlockMatrix {
    // blocks[c][c']: CSR over side-local indices
    std::array<std::array<std::vector<std::size_t>, 2>, 2> row_ptr;
    std::array<std::array<std::vector<std::uint32_t>, 2>, 2> col;
    std::array<std::array<std::vector<Complex>, 2>, 2> val;
  };
  BlockMatrix power_blocks(int n) const;
  TileFunctionC apply_blocks(const BlockMatrix& B, const TileFunctionC& u) const;

  const std::vector<std::uint32_t>& side_index(Side s) const {
    return side_words_[static_cast<int>(s)];
  }

 private:
  BlockMatrix one_step() const;
  std::shared_ptr<const Normalization> norm_;
  double b_;
  std::array<std::vector<std::uint32_t>, 2> side_words_;   // side-local -> global
  std::vector<std::uint32_t> side_rank_;                   // global -> side-local
};

// Cesaro average (1/J) sum_{j<J} Lbar^j(1) at the level-m collocation points,
// each term an exact preimage tree of depth j; log_pressure = P estimate used
// for the normalization phi - P.
struct CesaroEigenfunction {
  TileFunctionR u;
  double residual = 0.0;  // sup |Lbar(u) - u| with grid reading of u
};
CesaroEigenfunction eigenfunction(const ThermoGrid& grid, int level, int iterations,
                                  double log_pressure);

// Gibbs tile weights: w(X) proportional to exp(S_m phi(x_X) - m P); also the
// parent/child mass-ratio diagnostic across levels m-1, m.
struct GibbsWeights {
  int level = 0;
  std::vector<double> w;
  double max_doubling_ratio = 0.0;
};
GibbsWeights gibbs_weights(const ThermoGrid& grid, int level, double log_pressure);

struct DecayProbe {
  std::vector<double> norms;  // n = 1..n_max
  double fitted_ratio = 0.0;
};

// sup norms of iterates of the normalized real operator on a mean-zero input.
DecayProbe spectral_decay_probe(const Normalization& norm, const GibbsWeights& gw,
                                const TileFunctionR& u, int n_max);

// L^2(pi) norms of iterates of the complex split operator applied to (1,1);
// pi is the invariant vector of the s0-normalization (the grid stand-in for
// the equilibrium state of -s0 phi).
DecayProbe l2_decay_probe(const SplitOperator& op, const Normalization& s0_norm, int n_max);

struct PressureSample {
  double a = 0.0;
  int m = 0;
  double value = 0.0;
};

struct ThermoSolution {
  Potential phi;
  std::vector<PressureSample> pressure_samples;
  double s0 = 0.0;
  double s0_residual = 0.0;
  PositivityCertificate certificate;
  std::shared_ptr<const ThermoGrid> grid;
  std::shared_ptr<const Normalization> norm_phi;      // normalization of +phi (grid level)
  std::shared_ptr<const Normalization> norm_minus_s0; // normalization of -s0 phi
  GibbsWeights gibbs;                                 // for phi at the grid level
  double pressure_tree_phi = 0.0;                     // tree estimate of P(f, phi)
  double eigenfunction_gap = 0.0;  // sup |Perron u - Cesaro u| / sup u, diagnostic
  double cesaro_residual = 0.0;    // sup |Lbar(u) - u| of the Cesaro eigenfunction
  bool pressure_monotone = true;   // strict decrease across the sampled a-grid
};

struct ThermoOptions {
  int m_pressure = 8;
  int m_grid = 6;
  int cesaro_iterations = 5;
  int n_probe = 16;
  int probe_level = 4;
  double a_grid_step = 0.05;
};

ThermoSolution solve_thermo(const TileCatalog& cat, const Potential& phi,
                            const ThermoOptions& opts = {});

}  // namespace etm
