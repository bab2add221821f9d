#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "etm/sphere.hpp"

namespace etm {

enum class Side : int { Black = 0, White = 1 };  // black = upper half plane by default
inline Side opposite(Side s) { return s == Side::Black ? Side::White : Side::Black; }

// An f-invariant Jordan curve containing post f. Default: the extended real
// line, side classifier sign(Im z). Circles are supported via a Moebius chart.
class InvariantCurve {
 public:
  enum class Kind { ExtendedRealLine, Circle };

  static InvariantCurve extended_real_line();
  static InvariantCurve circle(Complex center, double radius);

  Kind kind() const { return kind_; }
  Complex center() const { return center_; }
  double radius() const { return radius_; }

  // Exact chordal distance to the curve for the real line; a chordal-density
  // scaled surrogate for circles.
  double dist(const SpherePoint& z) const;
  bool contains(const SpherePoint& z, double tau) const { return dist(z) <= tau; }
  Side side(const SpherePoint& z) const;  // undefined result on the curve itself

  // n sample points spread along the curve (includes inf for the real line).
  std::vector<SpherePoint> samples(int n) const;

  // Map a point into the convex model chart of one complementary disk and back.
  Complex to_chart(Side s, const SpherePoint& z) const;
  SpherePoint from_chart(Side s, Complex w) const;

  // Verifies f(C) subset C and post f subset C on curve samples.
  void verify_invariance(const RationalMap& f, double tau, int n_samples = 256) const;

 private:
  Kind kind_ = Kind::ExtendedRealLine;
  Complex center_{0, 0};
  double radius_ = 1.0;
};

struct OneTile {
  int id = 0;
  Side side = Side::Black;   // which 0-tile contains it
  Side color = Side::Black;  // which 0-tile f maps it onto
  SpherePoint sample;        // strictly interior point, a preimage of the color base point
};

using TileWord = std::vector<int>;  // one-tile ids, admissible left to right

class TileCatalog {
 public:
  const RationalMap& map() const { return *map_; }
  const InvariantCurve& curve() const { return curve_; }
  const std::vector<OneTile>& one_tiles() const { return tiles_; }
  int tile_count() const { return static_cast<int>(tiles_.size()); }
  int degree() const { return map_->degree(); }

  bool transition(int from, int to) const { return tiles_[to].side == tiles_[from].color; }
  std::vector<std::vector<int>> transition_matrix() const;
  // Smallest N <= 2 deg f with A^N entrywise positive; error if none.
  int mixing_power() const;

  // Tiles listed by color, ascending id; every word has exactly deg f
  // admissible successors drawn from by_color(side of first symbol).
  const std::vector<int>& by_color(Side c) const { return by_color_[static_cast<int>(c)]; }

  const SpherePoint& base_point(Side s) const { return base_[static_cast<int>(s)]; }
  const std::vector<SpherePoint>& probe_points(Side s) const { return probes_[static_cast<int>(s)]; }

  double expansion_estimate() const { return expansion_estimate_; }
  void set_expansion_estimate(double v) { expansion_estimate_ = v; }
  double metric_exponent() const { return metric_exponent_; }

  // Heuristic check that no 1-tile joins opposite sides of C (samples tile
  // boundaries through pulled back curve points). Returns true when the check
  // passes; callers may then take n_iterate = 1.
  bool no_tile_joins_opposite_sides(int boundary_samples = 96) const;

  bool is_admissible(const TileWord& w) const;
  bool is_cyclically_admissible(const TileWord& w) const;

  friend TileCatalog build_catalog(std::shared_ptr<const RationalMap> f, const InvariantCurve& curve,
                                   double metric_exponent);

 private:
  std::shared_ptr<const RationalMap> map_;
  InvariantCurve curve_;
  std::vector<OneTile> tiles_;
  std::array<std::vector<int>, 2> by_color_;
  std::array<SpherePoint, 2> base_;
  std::array<std::vector<SpherePoint>, 2> probes_;
  double expansion_estimate_ = 0.0;
  double metric_exponent_ = 1.0;
};

TileCatalog build_catalog(std::shared_ptr<const RationalMap> f, const InvariantCurve& curve,
                          double metric_exponent = 1.0);

// Words of length n in generation order (first symbol ascending, then the
// successor rank digits); exactly 2 d^n of them for n >= 1.
std::vector<TileWord> enumerate_tiles(const TileCatalog& cat, int n,
                                      std::size_t budget_words = (1u << 22));

// The inverse branch f|_X^{-1} evaluated at z, computed by lifting a path from
// the color base point to z starting at the tile sample. `min_margin` guards
// how close to the curve the target may be; the public operation uses
// tol.branch, internal refinement loops pass smaller values. With
// check_ambiguity the d preimages of z are solved for and a second same-side
// candidate within tol.cluster raises Ambiguous.
SpherePoint inverse_branch(const TileCatalog& cat, const OneTile& tile, const SpherePoint& z,
                           double min_margin, bool check_ambiguity = true);

struct TileRealization {
  SpherePoint point;
  double diam_estimate = 0.0;
};

// Collocation point and probe-based diameter estimate of the tile of an
// admissible word; the point of X0 w is f|_{X0}^{-1} of the point of w.
TileRealization realize_tile(const TileCatalog& cat, const TileWord& w);

// Word-indexed tile levels. Level L holds 2 d^L entries; children of word j
// are d*j+r at level L+1, ordered by the color-matched tile list. `shift`
// drops the first symbol (the forward image), `prefix` drops the last.
class TileHierarchy {
 public:
  struct Level {
    std::vector<int> first;           // leading one-tile id
    std::vector<std::uint32_t> shift;   // index at level L-1 of the forward image
    std::vector<std::uint32_t> prefix;  // index at level L-1 of the length-(L-1) prefix
    std::vector<SpherePoint> point;   // collocation point
    std::vector<double> diam;         // probe diameter estimate (if probes on)
    std::vector<SpherePoint> probes;  // pulled probe points, stride = probe count
  };

  TileHierarchy(const TileCatalog& cat, int max_level, bool with_probes);

  const TileCatalog& catalog() const { return *cat_; }
  int max_level() const { return static_cast<int>(levels_.size()) - 1; }
  const Level& level(int l) const { return levels_[l]; }
  std::size_t words_at(int l) const { return levels_[l].first.size(); }

  Side side_of(int level, std::size_t idx) const {
    return cat_->one_tiles()[levels_[level].first[idx]].side;
  }
  // Index at `to_level` of the length-to_level prefix of word idx at `level`.
  std::size_t prefix_at(int level, std::size_t idx, int to_level) const;
  // Forward image chain: index at level-1 of f(point), etc.
  std::size_t shift_at(int level, std::size_t idx) const { return levels_[level].shift[idx]; }

  TileWord word_of(int level, std::size_t idx) const;

 private:
  const TileCatalog* cat_;
  std::vector<Level> levels_;
};

}  // namespace etm
