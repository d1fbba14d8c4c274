#include "spinlab/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

namespace spinlab {

namespace {

// Dinic on small integer-capacity graphs.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

  int add_edge(int u, int v, int cap) {
    edges_.push_back({v, cap, 0});
    adj_[static_cast<std::size_t>(u)].push_back(static_cast<int>(edges_.size()) - 1);
    edges_.push_back({u, 0, 0});
    adj_[static_cast<std::size_t>(v)].push_back(static_cast<int>(edges_.size()) - 1);
    return static_cast<int>(edges_.size()) - 2;
  }

  long run(int s, int t) {
    long total = 0;
    while (bfs(s, t)) {
      it_.assign(adj_.size(), 0);
      while (long f = dfs(s, t, std::numeric_limits<int>::max())) total += f;
    }
    return total;
  }

  int flow(int e) const { return edges_[static_cast<std::size_t>(e)].flow; }
  int head(int e) const { return edges_[static_cast<std::size_t>(e)].to; }
  const std::vector<int>& out(int u) const { return adj_[static_cast<std::size_t>(u)]; }
  bool forward(int e) const { return e % 2 == 0; }

 private:
  struct Edge {
    int to, cap, flow;
  };
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;

  bool bfs(int s, int t) {
    level_.assign(adj_.size(), -1);
    std::deque<int> q{s};
    level_[static_cast<std::size_t>(s)] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int e : adj_[static_cast<std::size_t>(u)]) {
        const Edge& ed = edges_[static_cast<std::size_t>(e)];
        if (ed.cap - ed.flow > 0 && level_[static_cast<std::size_t>(ed.to)] < 0) {
          level_[static_cast<std::size_t>(ed.to)] = level_[static_cast<std::size_t>(u)] + 1;
          q.push_back(ed.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  long dfs(int u, int t, int pushed) {
    if (u == t) return pushed;
    auto& i = it_[static_cast<std::size_t>(u)];
    for (; i < adj_[static_cast<std::size_t>(u)].size(); ++i) {
      int e = adj_[static_cast<std::size_t>(u)][i];
      Edge& ed = edges_[static_cast<std::size_t>(e)];
      if (ed.cap - ed.flow <= 0 || level_[static_cast<std::size_t>(ed.to)] != level_[static_cast<std::size_t>(u)] + 1)
        continue;
      long f = dfs(ed.to, t, std::min(pushed, ed.cap - ed.flow));
      if (f > 0) {
        ed.flow += static_cast<int>(f);
        edges_[static_cast<std::size_t>(e ^ 1)].flow -= static_cast<int>(f);
        return f;
      }
    }
    return 0;
  }
};

// The interior d-sites of a rectangle as a W x H grid, with the crossing
// direction along the long axis.
struct DualGrid {
  ShellRectangle rect;
  int W = 0, H = 0;
  bool along_u = true;

  explicit DualGrid(const ShellRectangle& r) : rect(r), W(r.x_hi - r.x_lo), H(r.y_hi - r.y_lo) {
    along_u = W >= H;
  }
  int size() const { return W * H; }
  int id(DualSite s) const { return (s.u - rect.x_lo) * H + (s.v - rect.y_lo); }
  DualSite site(int id) const { return {rect.x_lo + id / H, rect.y_lo + id % H}; }
  bool contains(DualSite s) const {
    return s.u >= rect.x_lo && s.u < rect.x_hi && s.v >= rect.y_lo && s.v < rect.y_hi;
  }
  bool is_start(DualSite s) const { return along_u ? s.u == rect.x_lo : s.v == rect.y_lo; }
  bool is_end(DualSite s) const { return along_u ? s.u == rect.x_hi - 1 : s.v == rect.y_hi - 1; }
  // neighbours inside the grid joined by a d-bond that avoids A
  std::vector<DualSite> open_neighbours(DualSite s, const BondSet& A) const {
    static constexpr int du[4] = {1, 0, -1, 0}, dv[4] = {0, 1, 0, -1};
    std::vector<DualSite> out;
    for (int k = 0; k < 4; ++k) {
      DualSite t{s.u + du[k], s.v + dv[k]};
      if (!contains(t)) continue;
      if (A.contains(crossed_bond(make_dual_bond(s, t)))) continue;
      out.push_back(t);
    }
    return out;
  }
};

// Outward coordinate of a d-site for the rectangle's side.
double outward(const ShellRectangle& r, DualSite s) {
  switch (r.side) {
    case Side::North: return s.v;
    case Side::South: return -s.v;
    case Side::East: return s.u;
    case Side::West: return -s.u;
  }
  return 0.0;
}

void sort_innermost(const ShellRectangle& r, std::vector<DualPath>& paths) {
  auto key = [&](const DualPath& p) {
    double s = 0.0;
    for (DualSite d : p.sites) s += outward(r, d);
    return s / static_cast<double>(p.sites.size());
  };
  std::sort(paths.begin(), paths.end(), [&](const DualPath& a, const DualPath& b) {
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ka < kb;
    return a.sites < b.sites;
  });
}

// Shortest crossing through d-sites not in `blocked`, or an empty path.
DualPath shortest_crossing(const DualGrid& g, const BondSet& A, const std::vector<char>& blocked) {
  std::vector<int> prev(static_cast<std::size_t>(g.size()), -2);
  std::deque<int> q;
  for (int i = 0; i < g.size(); ++i) {
    DualSite s = g.site(i);
    if (g.is_start(s) && !blocked[static_cast<std::size_t>(i)]) {
      prev[static_cast<std::size_t>(i)] = -1;
      q.push_back(i);
    }
  }
  while (!q.empty()) {
    int i = q.front();
    q.pop_front();
    DualSite s = g.site(i);
    if (g.is_end(s)) {
      DualPath p;
      for (int c = i; c != -1; c = prev[static_cast<std::size_t>(c)]) p.sites.push_back(g.site(c));
      std::reverse(p.sites.begin(), p.sites.end());
      return p;
    }
    for (DualSite t : g.open_neighbours(s, A)) {
      int j = g.id(t);
      if (blocked[static_cast<std::size_t>(j)] || prev[static_cast<std::size_t>(j)] != -2) continue;
      prev[static_cast<std::size_t>(j)] = i;
      q.push_back(j);
    }
  }
  return {};
}

}  // namespace

// ---------------------------------------------------------------------------
// Sampling

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Positive half of the sup-norm shell r (4r displacements).
Site half_shell(int r, int i) {
  if (i < 2 * r + 1) return {r, i - r};
  if (i < 3 * r) return {i - 2 * r, r};
  if (i < 4 * r - 1) return {i - 3 * r + 1, -r};
  return {0, r};
}

}  // namespace

BondProcessSample sample_bernoulli(double eps, int n, std::uint64_t seed) {
  if (!(eps >= 0 && eps < 1)) throw std::invalid_argument("eps must lie in [0, 1)");
  BondProcessSample out;
  out.bonds = BondSet(n);
  out.generator = "bernoulli(" + fmt_double(eps) + ")";
  out.seed = seed;
  if (eps == 0) return out;
  Rng rng = make_rng(seed);
  for (const Bond& b : nearest_neighbour_bonds(n))
    if (uniform01(rng) < eps) out.bonds.insert(b);
  return out;
}

BondProcessSample sample_coupling(double eps, const CouplingKernel& J, int n, std::uint64_t seed) {
  if (!(eps >= 0)) throw std::invalid_argument("eps must be nonnegative");
  if (n < 0) throw std::invalid_argument("box radius must be nonnegative");
  // displacement classes with a common probability
  std::vector<std::pair<double, std::vector<Site>>> classes;
  const int R = J.radius();
  for (int r = 1; r <= R; ++r) {
    if (J.is_shell()) {
      std::vector<Site> ds;
      for (int i = 0; i < 4 * r; ++i) ds.push_back(half_shell(r, i));
      classes.push_back({eps * J.shell_value(r), std::move(ds)});
    } else {
      for (int i = 0; i < 4 * r; ++i) {
        Site d = half_shell(r, i);
        classes.push_back({eps * J(d), {d}});
      }
    }
  }
  for (const auto& c : classes)
    if (!(c.first < 1)) throw std::invalid_argument("eps * J must stay below 1");

  BondProcessSample out;
  out.bonds = BondSet(n);
  out.generator = "coupling(" + J.name() + "," + fmt_double(eps) + ")";
  out.seed = seed;
  Rng rng = make_rng(seed);
  const long S = 2L * n + 1;
  const long area = S * S;
  Box box(n);
  for (const auto& [p, ds] : classes) {
    if (p <= 0) continue;
    // candidate pairs for d: {x, x+d} with x in the box, then {y-d, y} with
    // y in the box and y-d outside it
    std::vector<long> prefix{0};
    for (Site d : ds) {
      const long overlap = std::max(0L, S - std::abs(d.x1)) * std::max(0L, S - std::abs(d.x2));
      prefix.push_back(prefix.back() + 2 * area - overlap);
    }
    const long total = prefix.back();
    const double lq = std::log1p(-p);
    long idx = -1;
    while (true) {
      const double u = uniform01(rng);
      const double skip = std::floor(std::log1p(-u) / lq);
      if (skip >= static_cast<double>(total - idx - 1)) break;
      idx += 1 + static_cast<long>(skip);
      const std::size_t which =
          static_cast<std::size_t>(std::upper_bound(prefix.begin(), prefix.end(), idx) - prefix.begin() - 1);
      const Site d = ds[which];
      long j = idx - prefix[which];
      if (j < area) {
        Site x = box.site(static_cast<std::size_t>(j));
        out.bonds.insert(make_bond(x, x + d));
        continue;
      }
      j -= area;
      for (int y1 = -n; y1 <= n; ++y1) {
        const bool row_free = std::abs(y1 - d.x1) > n;
        const long a_lo = -n, a_hi = row_free ? n : std::min<long>(n, d.x2 - n - 1);
        const long b_lo = row_free ? n + 1 : std::max<long>(-n, d.x2 + n + 1), b_hi = n;
        const long ca = std::max(0L, a_hi - a_lo + 1), cb = std::max(0L, b_hi - b_lo + 1);
        if (j >= ca + cb) {
          j -= ca + cb;
          continue;
        }
        const long y2 = j < ca ? a_lo + j : b_lo + (j - ca);
        Site y{y1, static_cast<int>(y2)};
        out.bonds.insert(make_bond(y - d, y));
        break;
      }
    }
  }
  return out;
}

std::vector<Site> sample_sites(double eps, int n, std::uint64_t seed) {
  if (!(eps >= 0 && eps < 1)) throw std::invalid_argument("eps must lie in [0, 1)");
  std::vector<Site> out;
  if (eps == 0) return out;
  Rng rng = make_rng(seed);
  for (Site s : Box(n).sites())
    if (uniform01(rng) < eps) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Crossings

CrossingSet disjoint_good_crossings(const ShellRectangle& rect, const BondSet& A) {
  DualGrid g(rect);
  CrossingSet out;
  out.rect = rect;
  out.edge_flow = edge_disjoint_crossings(rect, A);
  const int N = g.size();
  const int S = 2 * N, T = 2 * N + 1;
  MaxFlow mf(2 * N + 2);
  std::vector<int> source_edge(static_cast<std::size_t>(N), -1);
  for (int i = 0; i < N; ++i) {
    DualSite s = g.site(i);
    mf.add_edge(2 * i, 2 * i + 1, 1);
    if (g.is_start(s)) source_edge[static_cast<std::size_t>(i)] = mf.add_edge(S, 2 * i, 1);
    if (g.is_end(s)) mf.add_edge(2 * i + 1, T, 1);
    for (DualSite t : g.open_neighbours(s, A)) mf.add_edge(2 * i + 1, 2 * g.id(t), 1);
  }
  mf.run(S, T);

  // follow the unit flow from each used start site
  std::vector<char> blocked(static_cast<std::size_t>(N), 0);
  for (int i = 0; i < N; ++i) {
    const int se = source_edge[static_cast<std::size_t>(i)];
    if (se < 0 || mf.flow(se) != 1) continue;
    DualPath p;
    int cur = i;
    while (true) {
      p.sites.push_back(g.site(cur));
      int next = -1;
      bool done = false;
      for (int e : mf.out(2 * cur + 1)) {
        if (!mf.forward(e) || mf.flow(e) != 1) continue;
        if (mf.head(e) == T) {
          done = true;
          break;
        }
        next = mf.head(e) / 2;
        break;
      }
      if (done) break;
      if (next < 0) throw std::logic_error("broken flow path");
      cur = next;
    }
    for (DualSite d : p.sites) blocked[static_cast<std::size_t>(g.id(d))] = 1;
    out.paths.push_back(std::move(p));
  }

  // shorten: reroute each path through the sites the others leave free
  sort_innermost(rect, out.paths);
  for (auto& p : out.paths) {
    for (DualSite d : p.sites) blocked[static_cast<std::size_t>(g.id(d))] = 0;
    DualPath q = shortest_crossing(g, A, blocked);
    if (!q.sites.empty() && q.sites.size() < p.sites.size()) p = std::move(q);
    for (DualSite d : p.sites) blocked[static_cast<std::size_t>(g.id(d))] = 1;
  }
  sort_innermost(rect, out.paths);
  return out;
}

std::size_t edge_disjoint_crossings(const ShellRectangle& rect, const BondSet& A) {
  DualGrid g(rect);
  const int N = g.size();
  const int S = N, T = N + 1;
  const int inf = N + 1;
  MaxFlow mf(N + 2);
  for (int i = 0; i < N; ++i) {
    DualSite s = g.site(i);
    if (g.is_start(s)) mf.add_edge(S, i, inf);
    if (g.is_end(s)) mf.add_edge(i, T, inf);
    for (DualSite t : g.open_neighbours(s, A)) mf.add_edge(i, g.id(t), 1);
  }
  return static_cast<std::size_t>(mf.run(S, T));
}

bool is_good_crossing(const DualPath& p, const ShellRectangle& rect, const BondSet& A) {
  if (p.closed || p.sites.empty()) return false;
  DualGrid g(rect);
  for (DualSite s : p.sites)
    if (!g.contains(s)) return false;
  if (!is_simple_dual_path(p)) return false;
  if (!g.is_start(p.sites.front()) || !g.is_end(p.sites.back())) return false;
  return avoids(p, A);
}

std::vector<Bond> cut_bonds(const ShellRectangle& rect) {
  DualGrid g(rect);
  std::set<Bond> out;
  for (int i = 0; i < g.size(); ++i) {
    DualSite s = g.site(i);
    for (DualSite t : {DualSite{s.u + 1, s.v}, DualSite{s.u, s.v + 1}})
      if (g.contains(t)) out.insert(crossed_bond(make_dual_bond(s, t)));
  }
  return {out.begin(), out.end()};
}

namespace {

// Cut paths run between the long sides: bottom to top for horizontal
// rectangles, left to right for vertical ones.
struct CutGraph {
  std::map<Site, std::vector<std::pair<Site, Bond>>> adj;
  std::function<bool(Site)> is_from, is_to;
};

CutGraph make_cut_graph(const ShellRectangle& rect) {
  CutGraph cg;
  for (const Bond& b : cut_bonds(rect)) {
    cg.adj[b.a].push_back({b.b, b});
    cg.adj[b.b].push_back({b.a, b});
  }
  DualGrid g(rect);
  if (g.along_u) {
    cg.is_from = [r = rect](Site s) { return s.x2 == r.y_lo; };
    cg.is_to = [r = rect](Site s) { return s.x2 == r.y_hi; };
  } else {
    cg.is_from = [r = rect](Site s) { return s.x1 == r.x_lo; };
    cg.is_to = [r = rect](Site s) { return s.x1 == r.x_hi; };
  }
  return cg;
}

template <class Visit>
void for_each_cut_path(const ShellRectangle& rect, int max_steps, Visit&& visit) {
  CutGraph cg = make_cut_graph(rect);
  std::set<Site> on_path;
  std::vector<Bond> bonds;
  std::function<void(Site)> dfs = [&](Site s) {
    if (cg.is_to(s)) {
      visit(bonds);
      return;
    }
    if (static_cast<int>(bonds.size()) >= max_steps) throw std::invalid_argument("rectangle too large to enumerate");
    for (const auto& [t, b] : cg.adj[s]) {
      if (on_path.count(t) || cg.is_from(t)) continue;
      on_path.insert(t);
      bonds.push_back(b);
      dfs(t);
      bonds.pop_back();
      on_path.erase(t);
    }
  };
  for (const auto& [s, nb] : cg.adj) {
    if (!cg.is_from(s)) continue;
    on_path = {s};
    dfs(s);
  }
}

}  // namespace

std::vector<std::vector<Bond>> enumerate_cut_paths(const ShellRectangle& rect, int max_steps) {
  std::vector<std::vector<Bond>> out;
  for_each_cut_path(rect, max_steps, [&](const std::vector<Bond>& p) { out.push_back(p); });
  return out;
}

std::size_t brute_force_min_cut(const ShellRectangle& rect, const BondSet& A, int max_steps) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for_each_cut_path(rect, max_steps, [&](const std::vector<Bond>& p) {
    std::size_t c = 0;
    for (const Bond& b : p) c += A.contains(b) ? 0 : 1;
    best = std::min(best, c);
  });
  return best == std::numeric_limits<std::size_t>::max() ? 0 : best;
}

std::size_t brute_force_disjoint_crossings(const ShellRectangle& rect, const BondSet& A) {
  DualGrid g(rect);
  if (g.size() > 16) throw std::invalid_argument("too many d-sites for exhaustive search");
  // all minimal crossings as site masks: start side only at the first site,
  // end side only at the last
  std::vector<unsigned> masks;
  std::function<void(DualSite, unsigned)> dfs = [&](DualSite s, unsigned mask) {
    if (g.is_end(s)) {
      masks.push_back(mask);
      return;
    }
    for (DualSite t : g.open_neighbours(s, A)) {
      const unsigned bit = 1u << g.id(t);
      if ((mask & bit) || g.is_start(t)) continue;
      dfs(t, mask | bit);
    }
  };
  for (int i = 0; i < g.size(); ++i)
    if (g.is_start(g.site(i))) dfs(g.site(i), 1u << i);
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
  std::size_t best = 0;
  std::function<void(std::size_t, unsigned, std::size_t)> pack = [&](std::size_t from, unsigned used, std::size_t count) {
    best = std::max(best, count);
    for (std::size_t i = from; i < masks.size(); ++i)
      if (!(masks[i] & used)) pack(i + 1, used | masks[i], count + 1);
  };
  pack(0, 0u, 0);
  return best;
}

double ShortCrossingEvent::length_limit() const { return std::ldexp(1.0, scale + 3) / alpha; }
double ShortCrossingEvent::count_threshold() const { return alpha * std::ldexp(1.0, scale - 2); }

ShortCrossingEvent short_crossing_event(const BondSet& A, int k, double alpha) {
  if (k < 2) throw std::invalid_argument("scale must be at least 2");
  if (!(alpha > 0 && alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
  ShortCrossingEvent ev;
  ev.scale = k;
  ev.alpha = alpha;
  const auto rects = shell_rectangles(k);
  ev.all = true;
  for (int q = 0; q < 4; ++q) {
    auto cs = disjoint_good_crossings(rects[static_cast<std::size_t>(q)], A);
    std::vector<DualPath> kept;
    for (auto& p : cs.paths)
      if (static_cast<double>(p.length()) < ev.length_limit()) kept.push_back(std::move(p));
    cs.paths = std::move(kept);
    ev.short_count[static_cast<std::size_t>(q)] = cs.paths.size();
    ev.holds[static_cast<std::size_t>(q)] = static_cast<double>(cs.paths.size()) >= ev.count_threshold();
    ev.all = ev.all && ev.holds[static_cast<std::size_t>(q)];
    ev.crossings[static_cast<std::size_t>(q)] = std::move(cs);
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Sparseness

double sparseness_tau(double alpha, double rho) { return alpha * alpha * (1 - rho) / (256.0 * std::log(2.0)); }

SparsenessCertificate sparseness_certificate(const BondSet& A, int n, double rho, double alpha) {
  if (n < 4) throw std::invalid_argument("box radius must be at least 4");
  if (!(rho > 0 && rho < 1)) throw std::invalid_argument("rho must lie in (0, 1)");
  SparsenessCertificate c;
  c.n = n;
  c.rho = rho;
  c.alpha = alpha;
  c.tau = sparseness_tau(alpha, rho);
  c.threshold = c.tau * std::log(static_cast<double>(n));
  const double l2 = std::log2(static_cast<double>(n));
  c.k_hi = static_cast<int>(std::floor(l2 + 1e-12));
  c.k_lo = std::max(2, static_cast<int>(std::floor(rho * l2 + 1e-12)));
  std::set<DualSite> used;
  for (int k = c.k_lo; k <= c.k_hi; ++k) {
    auto ev = short_crossing_event(A, k, alpha);
    if (!ev.all) continue;
    c.scales_with_event.push_back(k);
    std::size_t m = ev.short_count[0];
    for (std::size_t q = 1; q < 4; ++q) m = std::min(m, ev.short_count[q]);
    for (std::size_t i = 0; i < m; ++i) {
      std::array<DualPath, 4> four;
      for (std::size_t q = 0; q < 4; ++q) four[q] = ev.crossings[q].paths[i];
      DualPath circ;
      try {
        circ = circuit_from_crossings(four);
      } catch (const std::runtime_error&) {
        continue;
      }
      if (!is_circuit(circ) || !avoids(circ, A)) continue;
      bool clash = false;
      for (DualSite s : circ.sites)
        if (used.count(s)) {
          clash = true;
          break;
        }
      if (clash) continue;
      used.insert(circ.sites.begin(), circ.sites.end());
      c.value += 1.0 / static_cast<double>(circ.length());
      c.circuits.push_back({k, std::move(circ)});
    }
  }
  c.sparse = c.value >= c.threshold;
  return c;
}

namespace {

// Crossing-number test for a point strictly between d-site rows.
bool encloses(const DualPath& circuit, double px, double py) {
  bool in = false;
  const auto& s = circuit.sites;
  for (std::size_t i = 0, j = s.size() - 1; i < s.size(); j = i++) {
    const double xi = s[i].u, yi = s[i].v, xj = s[j].u, yj = s[j].v;
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

}  // namespace

bool validate_certificate(const SparsenessCertificate& c, const BondSet& A, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::set<DualSite> seen;
  double value = 0.0;
  for (std::size_t i = 0; i < c.circuits.size(); ++i) {
    const DualPath& p = c.circuits[i].circuit;
    if (!is_circuit(p)) return fail("not a circuit");
    if (!avoids(p, A)) return fail("circuit crosses A");
    for (DualSite s : p.sites) {
      if (std::max(std::abs(s.u), std::abs(s.u + 1)) > c.n || std::max(std::abs(s.v), std::abs(s.v + 1)) > c.n)
        return fail("circuit leaves the box");
      if (!seen.insert(s).second) return fail("circuits share a d-site");
    }
    if (i > 0) {
      const DualSite inner = c.circuits[i - 1].circuit.sites.front();
      if (!encloses(p, inner.u, inner.v + 0.25)) return fail("circuits out of inclusion order");
    }
    value += 1.0 / static_cast<double>(p.length());
  }
  if (std::abs(value - c.value) > 1e-12 * std::max(1.0, value)) return fail("value mismatch");
  if (c.sparse != (c.value >= c.threshold)) return fail("verdict mismatch");
  return true;
}

SparsenessEstimate estimate_sparseness_failure(double eps, int n, std::size_t samples, double alpha, double rho,
                                               std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  SparsenessEstimate est;
  est.n = n;
  est.eps = eps;
  est.alpha = alpha;
  est.rho = rho;
  est.samples = samples;
  for (std::size_t i = 0; i < samples; ++i) {
    auto A = sample_bernoulli(eps, n, split_seed(seed, i));
    auto cert = sparseness_certificate(A.bonds, n, rho, alpha);
    if (!validate_certificate(cert, A.bonds)) ++est.invalid;
    if (!cert.sparse) ++est.failures;
  }
  est.ci = wilson_interval(est.failures, est.samples);
  return est;
}

void write_certificate(std::ostream& os, const SparsenessCertificate& c) {
  os << "scale,length,sites\n";
  for (const auto& cc : c.circuits) {
    os << cc.scale << ',' << cc.circuit.length() << ',';
    for (std::size_t i = 0; i < cc.circuit.sites.size(); ++i)
      os << (i ? ";" : "") << cc.circuit.sites[i].u << ':' << cc.circuit.sites[i].v;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Blocks

bool SitePercolationField::is_good(int z1, int z2) const {
  if (z1 < z_lo || z1 > z_hi || z2 < z_lo || z2 > z_hi) throw std::out_of_range("block outside the field");
  return good[static_cast<std::size_t>(z1 - z_lo) * width() + static_cast<std::size_t>(z2 - z_lo)] != 0;
}

std::size_t SitePercolationField::bad_count() const {
  return static_cast<std::size_t>(std::count(good.begin(), good.end(), 0));
}

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

SitePercolationField empty_field(int n, int r, double eps) {
  if (r < 1) throw std::invalid_argument("interaction diameter must be positive");
  if (n < 0) throw std::invalid_argument("box radius must be nonnegative");
  if (!(eps >= 0 && eps < 1)) throw std::invalid_argument("eps must lie in [0, 1)");
  SitePercolationField f;
  f.r = r;
  f.block = 4 * r;
  f.z_lo = floor_div(-n, f.block);
  f.z_hi = floor_div(n, f.block);
  f.good.assign(static_cast<std::size_t>(f.width()) * f.width(), 1);
  f.recommended_eps = 1.0 / (160.0 * r * r);
  return f;
}

void mark(SitePercolationField& f, Site s) {
  const int z1 = floor_div(s.x1, f.block), z2 = floor_div(s.x2, f.block);
  if (z1 < f.z_lo || z1 > f.z_hi || z2 < f.z_lo || z2 > f.z_hi) return;
  f.good[static_cast<std::size_t>(z1 - f.z_lo) * f.width() + static_cast<std::size_t>(z2 - f.z_lo)] = 0;
}

}  // namespace

SitePercolationField block_site_field(const std::vector<Site>& A, int n, int r, double eps) {
  auto f = empty_field(n, r, eps);
  f.density_bound = 1.0 - std::pow(1.0 - eps, 16.0 * r * r);
  for (Site s : A) mark(f, s);
  return f;
}

SitePercolationField block_site_field(const BondSet& A, int n, int r, double eps) {
  auto f = empty_field(n, r, eps);
  const double L = f.block;
  f.density_bound = 1.0 - std::pow(1.0 - eps, 2 * L * L + 2 * L);
  for (const Bond& b : A) {
    mark(f, b.a);
    mark(f, b.b);
  }
  return f;
}

}  // namespace spinlab
