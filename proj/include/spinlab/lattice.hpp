#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace spinlab {

struct Site {
  int x1 = 0;
  int x2 = 0;

  auto operator<=>(const Site&) const = default;
  Site operator+(Site o) const { return {x1 + o.x1, x2 + o.x2}; }
  Site operator-(Site o) const { return {x1 - o.x1, x2 - o.x2}; }
};

int sup_norm(Site s);

inline constexpr std::array<Site, 4> kUnitSteps{Site{1, 0}, Site{0, 1}, Site{-1, 0}, Site{0, -1}};

struct SiteHash {
  std::size_t operator()(Site s) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.x1)) << 32) |
                                      static_cast<std::uint32_t>(s.x2));
  }
};

// Lambda_n = { x : |x|_inf <= n }.
class Box {
 public:
  explicit Box(int n);

  int radius() const { return n_; }
  int side() const { return 2 * n_ + 1; }
  std::size_t size() const { return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side()); }
  bool contains(Site s) const { return sup_norm(s) <= n_; }

  // Row-major index with x1 slowest; only valid for contained sites.
  std::size_t index(Site s) const {
    return static_cast<std::size_t>(s.x1 + n_) * static_cast<std::size_t>(side()) +
           static_cast<std::size_t>(s.x2 + n_);
  }
  Site site(std::size_t index) const {
    return {static_cast<int>(index / static_cast<std::size_t>(side())) - n_,
            static_cast<int>(index % static_cast<std::size_t>(side())) - n_};
  }
  std::vector<Site> sites() const;

 private:
  int n_;
};

// Unordered pair of sites, stored with a < b.
struct Bond {
  Site a;
  Site b;

  auto operator<=>(const Bond&) const = default;
};

Bond make_bond(Site x, Site y);
bool is_nearest_neighbour(const Bond& b);

// Layer L_k in canonical counterclockwise order: the east side upward from
// (k, -k+1), then the north side westward, the west side downward and the
// south side eastward, ending at (k, -k). L_0 = {(0,0)}.
std::vector<Site> layer_sites(int k);

// Nearest-neighbour bonds between L_k and L_{k+1}. In the returned bonds
// `a` is the site of L_k and `b` the site of L_{k+1} (not normalized).
std::vector<Bond> interlayer_bonds(int k);

// All nearest-neighbour bonds with at least one end in Lambda_n.
std::vector<Bond> nearest_neighbour_bonds(int n);

// A set of open bonds together with the box its bonds must touch. A negative
// radius means no domain restriction.
class BondSet {
 public:
  BondSet() = default;
  explicit BondSet(int box_radius) : box_radius_(box_radius) {}

  int box_radius() const { return box_radius_; }
  // Throws std::invalid_argument if neither endpoint lies in the box.
  void insert(Bond b);
  bool contains(const Bond& b) const { return bonds_.count(make_bond(b.a, b.b)) > 0; }
  std::size_t size() const { return bonds_.size(); }
  bool empty() const { return bonds_.empty(); }
  auto begin() const { return bonds_.begin(); }
  auto end() const { return bonds_.end(); }

  bool operator==(const BondSet& o) const { return box_radius_ == o.box_radius_ && bonds_ == o.bonds_; }

 private:
  int box_radius_ = -1;
  std::set<Bond> bonds_;
};

// ---------------------------------------------------------------------------
// Shell rectangles

enum class Side { North = 0, East = 1, South = 2, West = 3 };

const char* side_name(Side s);

// Clockwise rotation by quarter turns about the origin: (x, y) -> (y, -x).
Site rotate_clockwise(Site s, int quarter_turns);

struct ShellRectangle {
  int scale = 2;
  Side side = Side::North;
  int x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;  // inclusive primal ranges

  bool contains(Site s) const { return s.x1 >= x_lo && s.x1 <= x_hi && s.x2 >= y_lo && s.x2 <= y_hi; }
  std::size_t size() const {
    return static_cast<std::size_t>(x_hi - x_lo + 1) * static_cast<std::size_t>(y_hi - y_lo + 1);
  }
  // True for N and S, whose long axis is horizontal.
  bool horizontal() const { return side == Side::North || side == Side::South; }
  std::vector<Site> sites() const;
};

// R_N^l = [-2^l, 2^l] x [2^{l-1}+1, 2^l] and its clockwise rotations, in
// N, E, S, W order. Throws for l < 2.
std::array<ShellRectangle, 4> shell_rectangles(int l);

// ---------------------------------------------------------------------------
// Dual lattice. DualSite{u, v} sits at (u + 1/2, v + 1/2).

struct DualSite {
  int u = 0;
  int v = 0;

  auto operator<=>(const DualSite&) const = default;
};

struct DualBond {
  DualSite a;
  DualSite b;

  auto operator<=>(const DualBond&) const = default;
};

DualBond make_dual_bond(DualSite x, DualSite y);
bool dual_adjacent(DualSite x, DualSite y);

// The primal bond crossed by a d-bond, and the inverse map.
Bond crossed_bond(const DualBond& d);
DualBond dual_of(const Bond& b);

// A d-path stored as its d-site sequence. For a closed path the bond from the
// last site back to the first is implied and the first site is not repeated.
struct DualPath {
  std::vector<DualSite> sites;
  bool closed = false;

  std::size_t length() const;  // number of d-bonds
  std::vector<DualBond> bonds() const;
};

// Consecutive sites adjacent, no repeated site (hence no repeated bond).
bool is_simple_dual_path(const DualPath& p);

// Winding number of a closed d-path around the primal origin.
int winding_number(const DualPath& p);

bool is_circuit(const DualPath& p);

// True if no d-bond of the path crosses a bond of A.
bool avoids(const DualPath& p, const BondSet& A);

// d-sites strictly inside the hull of a rectangle: u in [x_lo, x_hi-1],
// v in [y_lo, y_hi-1].
std::vector<DualSite> interior_dual_sites(const ShellRectangle& r);

// Extracts the d-circuit formed by the d-bonds of the union that are visible
// from the origin: the outer boundary of the (hole-filled) connected component
// of the origin in the complement of the union. Throws std::runtime_error if
// the union does not enclose the origin.
DualPath circuit_from_crossings(std::span<const DualPath> crossings);

}  // namespace spinlab
