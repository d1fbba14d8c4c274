#include "spinlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <map>
#include <stdexcept>

#include "spinlab/angle.hpp"

namespace spinlab {

int sup_norm(Site s) { return std::max(std::abs(s.x1), std::abs(s.x2)); }

Box::Box(int n) : n_(n) {
  if (n < 0) throw std::invalid_argument("box radius must be nonnegative");
}

std::vector<Site> Box::sites() const {
  std::vector<Site> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(site(i));
  return out;
}

Bond make_bond(Site x, Site y) {
  if (x == y) throw std::invalid_argument("bond endpoints coincide");
  return x < y ? Bond{x, y} : Bond{y, x};
}

bool is_nearest_neighbour(const Bond& b) {
  return std::abs(b.a.x1 - b.b.x1) + std::abs(b.a.x2 - b.b.x2) == 1;
}

std::vector<Site> layer_sites(int k) {
  if (k < 0) throw std::invalid_argument("layer index must be nonnegative");
  if (k == 0) return {Site{0, 0}};
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(8 * k));
  for (int y = -k + 1; y <= k; ++y) out.push_back({k, y});
  for (int x = k - 1; x >= -k; --x) out.push_back({x, k});
  for (int y = k - 1; y >= -k; --y) out.push_back({-k, y});
  for (int x = -k + 1; x <= k; ++x) out.push_back({x, -k});
  return out;
}

std::vector<Bond> interlayer_bonds(int k) {
  std::vector<Bond> out;
  for (Site s : layer_sites(k)) {
    for (Site e : kUnitSteps) {
      Site t = s + e;
      if (sup_norm(t) == k + 1) out.push_back({s, t});
    }
  }
  return out;
}

std::vector<Bond> nearest_neighbour_bonds(int n) {
  Box box(n);
  std::set<Bond> bonds;
  for (Site s : box.sites())
    for (Site e : kUnitSteps) bonds.insert(make_bond(s, s + e));
  return {bonds.begin(), bonds.end()};
}

void BondSet::insert(Bond b) {
  b = make_bond(b.a, b.b);
  if (box_radius_ >= 0 && sup_norm(b.a) > box_radius_ && sup_norm(b.b) > box_radius_)
    throw std::invalid_argument("bond has no endpoint in the declared box");
  bonds_.insert(b);
}

const char* side_name(Side s) {
  switch (s) {
    case Side::North: return "N";
    case Side::East: return "E";
    case Side::South: return "S";
    case Side::West: return "W";
  }
  return "?";
}

Site rotate_clockwise(Site s, int quarter_turns) {
  int q = ((quarter_turns % 4) + 4) % 4;
  for (int i = 0; i < q; ++i) s = Site{s.x2, -s.x1};
  return s;
}

std::vector<Site> ShellRectangle::sites() const {
  std::vector<Site> out;
  out.reserve(size());
  for (int x = x_lo; x <= x_hi; ++x)
    for (int y = y_lo; y <= y_hi; ++y) out.push_back({x, y});
  return out;
}

std::array<ShellRectangle, 4> shell_rectangles(int l) {
  if (l < 2) throw std::invalid_argument("shell scale must be at least 2");
  if (l > 28) throw std::invalid_argument("shell scale too large");
  const int big = 1 << l;
  const int half = 1 << (l - 1);
  std::array<ShellRectangle, 4> out;
  out[0] = {l, Side::North, -big, big, half + 1, big};
  // Rotating the corners of N clockwise gives the other three.
  for (int q = 1; q < 4; ++q) {
    Site c1 = rotate_clockwise({out[0].x_lo, out[0].y_lo}, q);
    Site c2 = rotate_clockwise({out[0].x_hi, out[0].y_hi}, q);
    out[q] = {l, static_cast<Side>(q), std::min(c1.x1, c2.x1), std::max(c1.x1, c2.x1),
              std::min(c1.x2, c2.x2), std::max(c1.x2, c2.x2)};
  }
  return out;
}

DualBond make_dual_bond(DualSite x, DualSite y) {
  if (!dual_adjacent(x, y)) throw std::invalid_argument("d-sites are not adjacent");
  return x < y ? DualBond{x, y} : DualBond{y, x};
}

bool dual_adjacent(DualSite x, DualSite y) { return std::abs(x.u - y.u) + std::abs(x.v - y.v) == 1; }

Bond crossed_bond(const DualBond& d) {
  DualBond n = make_dual_bond(d.a, d.b);
  if (n.a.v == n.b.v)  // horizontal d-bond crosses a vertical primal bond
    return make_bond({n.a.u + 1, n.a.v}, {n.a.u + 1, n.a.v + 1});
  return make_bond({n.a.u, n.a.v + 1}, {n.a.u + 1, n.a.v + 1});
}

DualBond dual_of(const Bond& b) {
  Bond n = make_bond(b.a, b.b);
  if (!is_nearest_neighbour(n)) throw std::invalid_argument("only nearest-neighbour bonds have duals");
  if (n.a.x2 == n.b.x2)  // horizontal primal
    return make_dual_bond({n.a.x1, n.a.x2 - 1}, {n.a.x1, n.a.x2});
  return make_dual_bond({n.a.x1 - 1, n.a.x2}, {n.a.x1, n.a.x2});
}

std::size_t DualPath::length() const {
  if (sites.empty()) return 0;
  return closed ? sites.size() : sites.size() - 1;
}

std::vector<DualBond> DualPath::bonds() const {
  std::vector<DualBond> out;
  if (sites.size() < 2) return out;
  for (std::size_t i = 0; i + 1 < sites.size(); ++i) out.push_back(make_dual_bond(sites[i], sites[i + 1]));
  if (closed) out.push_back(make_dual_bond(sites.back(), sites.front()));
  return out;
}

bool is_simple_dual_path(const DualPath& p) {
  std::set<DualSite> seen(p.sites.begin(), p.sites.end());
  if (seen.size() != p.sites.size()) return false;
  for (std::size_t i = 0; i + 1 < p.sites.size(); ++i)
    if (!dual_adjacent(p.sites[i], p.sites[i + 1])) return false;
  if (p.closed) {
    if (p.sites.size() < 4) return false;
    if (!dual_adjacent(p.sites.back(), p.sites.front())) return false;
  }
  return true;
}

int winding_number(const DualPath& p) {
  if (!p.closed || p.sites.size() < 3) return 0;
  double total = 0.0;
  auto angle_of = [](DualSite s) { return std::atan2(s.v + 0.5, s.u + 0.5); };
  for (std::size_t i = 0; i < p.sites.size(); ++i) {
    DualSite a = p.sites[i];
    DualSite b = p.sites[(i + 1) % p.sites.size()];
    total += wrap_angle(angle_of(b) - angle_of(a));
  }
  return static_cast<int>(std::lround(total / kTwoPi));
}

bool is_circuit(const DualPath& p) {
  return p.closed && is_simple_dual_path(p) && std::abs(winding_number(p)) == 1;
}

bool avoids(const DualPath& p, const BondSet& A) {
  for (const DualBond& d : p.bonds())
    if (A.contains(crossed_bond(d))) return false;
  return true;
}

std::vector<DualSite> interior_dual_sites(const ShellRectangle& r) {
  std::vector<DualSite> out;
  for (int u = r.x_lo; u < r.x_hi; ++u)
    for (int v = r.y_lo; v < r.y_hi; ++v) out.push_back({u, v});
  return out;
}

DualPath circuit_from_crossings(std::span<const DualPath> crossings) {
  std::set<Bond> blocked;
  int lo1 = 0, hi1 = 0, lo2 = 0, hi2 = 0;
  for (const DualPath& p : crossings) {
    for (DualSite s : p.sites) {
      lo1 = std::min(lo1, s.u);
      hi1 = std::max(hi1, s.u + 1);
      lo2 = std::min(lo2, s.v);
      hi2 = std::max(hi2, s.v + 1);
    }
    for (const DualBond& d : p.bonds()) blocked.insert(crossed_bond(d));
  }
  // Primal frame one site wider than the union's hull.
  lo1 -= 1, lo2 -= 1, hi1 += 1, hi2 += 1;
  const int w = hi1 - lo1 + 1, h = hi2 - lo2 + 1;
  auto idx = [&](Site s) { return static_cast<std::size_t>(s.x1 - lo1) * h + static_cast<std::size_t>(s.x2 - lo2); };
  auto inside = [&](Site s) { return s.x1 >= lo1 && s.x1 <= hi1 && s.x2 >= lo2 && s.x2 <= hi2; };
  auto on_frame = [&](Site s) { return s.x1 == lo1 || s.x1 == hi1 || s.x2 == lo2 || s.x2 == hi2; };

  std::vector<char> reached(static_cast<std::size_t>(w) * h, 0);
  std::deque<Site> queue{Site{0, 0}};
  reached[idx({0, 0})] = 1;
  while (!queue.empty()) {
    Site s = queue.front();
    queue.pop_front();
    if (on_frame(s)) throw std::runtime_error("crossings do not enclose the origin");
    for (Site e : kUnitSteps) {
      Site t = s + e;
      if (!inside(t) || reached[idx(t)] || blocked.count(make_bond(s, t))) continue;
      reached[idx(t)] = 1;
      queue.push_back(t);
    }
  }

  // Everything the frame reaches without entering the origin's component.
  std::vector<char> outside(reached.size(), 0);
  for (int x = lo1; x <= hi1; ++x)
    for (int y = lo2; y <= hi2; ++y)
      if (on_frame({x, y})) {
        outside[idx({x, y})] = 1;
        queue.push_back({x, y});
      }
  while (!queue.empty()) {
    Site s = queue.front();
    queue.pop_front();
    for (Site e : kUnitSteps) {
      Site t = s + e;
      if (!inside(t) || outside[idx(t)] || reached[idx(t)]) continue;
      outside[idx(t)] = 1;
      queue.push_back(t);
    }
  }

  std::map<DualSite, std::vector<DualSite>> adj;
  for (int x = lo1; x <= hi1; ++x)
    for (int y = lo2; y <= hi2; ++y) {
      Site s{x, y};
      if (outside[idx(s)]) continue;
      for (Site e : kUnitSteps) {
        Site t = s + e;
        if (inside(t) && !outside[idx(t)]) continue;
        DualBond d = dual_of(make_bond(s, t));
        adj[d.a].push_back(d.b);
        adj[d.b].push_back(d.a);
      }
    }
  if (adj.empty()) throw std::runtime_error("empty circuit");

  DualPath out;
  out.closed = true;
  DualSite start = adj.begin()->first;
  DualSite prev = start, cur = start;
  do {
    const auto& nb = adj.at(cur);
    if (nb.size() != 2) throw std::runtime_error("boundary is not a simple cycle");
    out.sites.push_back(cur);
    DualSite next = (cur == start) ? std::min(nb[0], nb[1]) : (nb[0] == prev ? nb[1] : nb[0]);
    prev = cur;
    cur = next;
  } while (cur != start);
  if (out.sites.size() != adj.size()) throw std::runtime_error("boundary has several components");
  if (winding_number(out) < 0) std::reverse(out.sites.begin() + 1, out.sites.end());
  return out;
}

}  // namespace spinlab
