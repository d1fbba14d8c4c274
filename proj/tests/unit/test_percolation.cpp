#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "spinlab/percolation.hpp"

using namespace spinlab;

namespace {

ShellRectangle custom_rect(int x_lo, int x_hi, int y_lo, int y_hi) {
  ShellRectangle r;
  r.scale = 2;
  r.side = Side::North;
  r.x_lo = x_lo;
  r.x_hi = x_hi;
  r.y_lo = y_lo;
  r.y_hi = y_hi;
  return r;
}

BondSet random_bonds(const ShellRectangle& r, double p, std::uint64_t seed) {
  BondSet A;
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (Bond b : cut_bonds(r))
    if (U(rng) < p) A.insert(b);
  return A;
}

void check_crossings(const CrossingSet& cs, const BondSet& A) {
  std::set<DualSite> seen;
  for (const auto& p : cs.paths) {
    CHECK(is_good_crossing(p, cs.rect, A));
    for (DualSite s : p.sites) CHECK(seen.insert(s).second);
  }
}

}  // namespace

TEST_CASE("bernoulli sampling") {
  CHECK(sample_bernoulli(0.0, 10, 1).bonds.empty());
  CHECK_THROWS_AS(sample_bernoulli(1.0, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_bernoulli(-0.1, 4, 1), std::invalid_argument);

  auto s = sample_bernoulli(0.01, 64, 42);
  const double N = static_cast<double>(nearest_neighbour_bonds(64).size());
  CHECK(N > 1e4);
  const double sigma = std::sqrt(N * 0.01 * 0.99);
  CHECK(std::abs(static_cast<double>(s.bonds.size()) - 0.01 * N) < 3 * sigma);
  CHECK(s.bonds == sample_bernoulli(0.01, 64, 42).bonds);
  CHECK(!(s.bonds == sample_bernoulli(0.01, 64, 43).bonds));
  CHECK(s.generator == "bernoulli(0.01)");
}

TEST_CASE("coupling sampling matches per-distance densities") {
  auto J = powerlaw_kernel(4.0, 6);
  const int n = 10;
  const double eps = 0.8;
  std::vector<double> counts(7, 0.0);
  const int reps = 400;
  for (int i = 0; i < reps; ++i) {
    auto s = sample_coupling(eps, J, n, split_seed(5, static_cast<std::uint64_t>(i)));
    for (const Bond& b : s.bonds) {
      CHECK((Box(n).contains(b.a) || Box(n).contains(b.b)));
      const int r = sup_norm(b.b - b.a);
      REQUIRE(r >= 1);
      REQUIRE(r <= 6);
      counts[static_cast<std::size_t>(r)] += 1;
    }
  }
  CHECK(sample_coupling(eps, J, n, 9).bonds == sample_coupling(eps, J, n, 9).bonds);
  // unordered pairs with an end in the box, counted from the box side
  for (int r = 1; r <= 6; ++r) {
    double pairs = 0.0;
    for (Site x : Box(n).sites())
      for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b) {
          if (std::max(std::abs(a), std::abs(b)) != r) continue;
          pairs += Box(n).contains(x + Site{a, b}) ? 0.5 : 1.0;
        }
    const double p = eps * J.shell_value(r);
    const double mean = reps * pairs * p;
    const double sigma = std::sqrt(reps * pairs * p * (1 - p));
    CHECK(std::abs(counts[static_cast<std::size_t>(r)] - mean) < 3 * sigma);
  }
  CHECK_THROWS_AS(sample_coupling(5.0, nn_kernel(), 4, 1), std::invalid_argument);
}

TEST_CASE("coupling sampling with a nearest-neighbour kernel is bernoulli") {
  // J = 1/4 on each unit step, so eps J = eps / 4 per bond
  auto s = sample_coupling(0.4, nn_kernel(), 64, 3);
  for (const Bond& b : s.bonds) CHECK(is_nearest_neighbour(b));
  const double N = static_cast<double>(nearest_neighbour_bonds(64).size());
  const double sigma = std::sqrt(N * 0.1 * 0.9);
  CHECK(std::abs(static_cast<double>(s.bonds.size()) - 0.1 * N) < 3 * sigma);
}

TEST_CASE("straight crossings of an empty 9x3 rectangle") {
  auto r = custom_rect(0, 8, 0, 2);
  auto cs = disjoint_good_crossings(r, BondSet());
  CHECK(cs.paths.size() == 2);
  CHECK(cs.edge_flow == 2);
  CHECK(brute_force_disjoint_crossings(r, BondSet()) == 2);
  check_crossings(cs, BondSet());
  for (const auto& p : cs.paths) CHECK(p.length() == 7);
  CHECK(cs.paths[0].sites.front() == DualSite{0, 0});
}

TEST_CASE("a blocking primal path leaves no crossing") {
  auto r = custom_rect(0, 8, 0, 2);
  BondSet A;
  A.insert(make_bond({4, 0}, {4, 1}));
  A.insert(make_bond({4, 1}, {5, 1}));
  A.insert(make_bond({5, 1}, {5, 2}));
  CHECK(disjoint_good_crossings(r, A).paths.empty());
  CHECK(edge_disjoint_crossings(r, A) == 0);
  CHECK(brute_force_min_cut(r, A) == 0);
}

TEST_CASE("shell rectangles with no blocked bonds") {
  for (int l = 2; l <= 5; ++l) {
    auto rects = shell_rectangles(l);
    for (const auto& r : rects) {
      auto cs = disjoint_good_crossings(r, BondSet());
      const int h = (1 << (l - 1)) - 1;
      CHECK(cs.paths.size() == static_cast<std::size_t>(h));
      for (const auto& p : cs.paths) CHECK(p.length() == static_cast<std::size_t>((1 << (l + 1)) - 1));
      check_crossings(cs, BondSet());
    }
  }
}

TEST_CASE("max-flow equals the brute-force minimum cut") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int W = 3 + static_cast<int>(seed % 4), H = 2 + static_cast<int>(seed % 3);
    auto r = custom_rect(0, W, 0, H);
    auto A = random_bonds(r, 0.3, seed);
    CHECK(edge_disjoint_crossings(r, A) == brute_force_min_cut(r, A, 60));
    ++checked;
  }
  for (int l = 2; l <= 3; ++l)
    for (const auto& r : shell_rectangles(l)) {
      auto A = random_bonds(r, 0.15, static_cast<std::uint64_t>(l));
      CHECK(edge_disjoint_crossings(r, A) == brute_force_min_cut(r, A, 40));
    }
  CHECK(checked == 40);
}

TEST_CASE("site-disjoint count equals the exhaustive packing") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int W = 3 + static_cast<int>(seed % 3), H = 2 + static_cast<int>(seed % 2);
    auto r = custom_rect(-2, -2 + W, 1, 1 + H);
    REQUIRE(interior_dual_sites(r).size() <= 16);
    auto A = random_bonds(r, 0.25, 100 + seed);
    auto cs = disjoint_good_crossings(r, A);
    check_crossings(cs, A);
    CHECK(cs.paths.size() == brute_force_disjoint_crossings(r, A));
    CHECK(2 * cs.paths.size() >= cs.edge_flow);
    CHECK(cs.paths.size() <= cs.edge_flow);
  }
  // l = 2 shells carry 8 interior d-sites each
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto A = random_bonds(shell_rectangles(2)[0], 0.1, seed);
    for (const auto& r : shell_rectangles(2))
      CHECK(disjoint_good_crossings(r, A).paths.size() == brute_force_disjoint_crossings(r, A));
  }
}

TEST_CASE("crossings of sampled configurations are valid and shortest-first rerouted") {
  auto A = sample_bernoulli(0.1, 40, 11).bonds;
  for (int l = 2; l <= 5; ++l)
    for (const auto& r : shell_rectangles(l)) {
      auto cs = disjoint_good_crossings(r, A);
      check_crossings(cs, A);
      CHECK(cs.paths.size() <= cs.edge_flow);
      CHECK(2 * cs.paths.size() >= cs.edge_flow);
    }
}

TEST_CASE("crossing count is monotone under adding bonds") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    auto r = shell_rectangles(4)[seed % 4];
    auto small = random_bonds(r, 0.05, seed);
    BondSet big = small;
    for (const Bond& b : random_bonds(r, 0.05, 1000 + seed)) big.insert(b);
    CHECK(disjoint_good_crossings(r, big).paths.size() <= disjoint_good_crossings(r, small).paths.size());
    CHECK(edge_disjoint_crossings(r, big) <= edge_disjoint_crossings(r, small));
  }
}

TEST_CASE("short crossing event") {
  for (int k = 2; k <= 6; ++k)
    for (double alpha : {0.01, 0.05, 0.1}) {
      auto ev = short_crossing_event(BondSet(), k, alpha);
      CHECK(ev.all);
      CHECK(ev.length_limit() == doctest::Approx(std::ldexp(1.0, k + 3) / alpha));
      CHECK(ev.count_threshold() == doctest::Approx(alpha * std::ldexp(1.0, k - 2)));
    }
  BondSet all;
  for (const auto& r : shell_rectangles(3))
    for (Bond b : cut_bonds(r)) all.insert(b);
  auto ev = short_crossing_event(all, 3, 0.1);
  CHECK(!ev.all);
  for (std::size_t q = 0; q < 4; ++q) CHECK(ev.short_count[q] == 0);
  CHECK_THROWS_AS(short_crossing_event(BondSet(), 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(short_crossing_event(BondSet(), 3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(short_crossing_event(BondSet(), 3, 0.0), std::invalid_argument);
}

TEST_CASE("pigeonhole: enough disjoint crossings force enough short ones") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    auto A = sample_bernoulli(0.08, 40, 300 + seed).bonds;
    for (int k = 2; k <= 5; ++k) {
      const double alpha = 0.1;
      auto ev = short_crossing_event(A, k, alpha);
      for (std::size_t q = 0; q < 4; ++q) {
        const auto& cs = ev.crossings[q];
        // recount short paths from the full family
        auto full = disjoint_good_crossings(cs.rect, A);
        std::size_t total_len = 0, shorts = 0;
        for (const auto& p : full.paths) {
          total_len += p.length();
          if (static_cast<double>(p.length()) < ev.length_limit()) ++shorts;
        }
        CHECK(total_len <= cs.rect.size());
        CHECK(shorts == ev.short_count[q]);
        if (static_cast<double>(full.paths.size()) >= ev.count_threshold())
          CHECK(static_cast<double>(shorts) >= ev.count_threshold());
      }
    }
  }
}

TEST_CASE("union bound enumeration at the smallest scale") {
  // at k = 2 the N rectangle's cut paths are the 7 single vertical bonds
  auto r = shell_rectangles(2)[0];
  auto paths = enumerate_cut_paths(r);
  CHECK(paths.size() == 7);
  for (const auto& p : paths) CHECK(p.size() == 1);
  // paths with |cut| - |cut & A| <= alpha 2^k = 0 must be fully in A
  const double eps = 0.05;
  const int reps = 4000;
  double hits = 0;
  for (int i = 0; i < reps; ++i) {
    auto A = sample_bernoulli(eps, 8, split_seed(77, static_cast<std::uint64_t>(i))).bonds;
    for (const auto& p : paths) {
      std::size_t free = 0;
      for (const Bond& b : p) free += A.contains(b) ? 0 : 1;
      if (static_cast<double>(free) <= 0.1 * 4) hits += 1;
    }
  }
  const double mean = hits / reps;
  // summand count: 7 paths, each blocked with probability eps
  CHECK(mean <= 7 * eps + 3 * std::sqrt(7 * eps / reps));
  CHECK(mean == doctest::Approx(7 * eps).epsilon(0.15));
}

TEST_CASE("empty configuration is sparse with a full certificate") {
  for (int n : {16, 32, 64}) {
    auto c = sparseness_certificate(BondSet(n), n, 0.5, 0.1);
    CHECK(c.tau == doctest::Approx(0.01 * 0.5 / (256 * std::log(2.0))));
    CHECK(c.threshold == doctest::Approx(c.tau * std::log(n)));
    const int scales = c.k_hi - c.k_lo + 1;
    CHECK(static_cast<int>(c.scales_with_event.size()) == scales);
    CHECK(c.value >= scales * 0.01 / 128);
    CHECK(c.sparse);
    std::string why;
    CHECK_MESSAGE(validate_certificate(c, BondSet(n), &why), why);
    for (std::size_t i = 1; i < c.circuits.size(); ++i) CHECK(c.circuits[i].scale >= c.circuits[i - 1].scale);
  }
  auto c = sparseness_certificate(BondSet(16), 16, 0.5, 0.1);
  CHECK(c.k_lo == 2);
  CHECK(c.k_hi == 4);
}

TEST_CASE("a vertical column of bonds defeats the certificate") {
  const int n = 32;
  BondSet A(n);
  for (int y = -n; y < n; ++y) A.insert(make_bond({0, y}, {0, y + 1}));
  auto c = sparseness_certificate(A, n, 0.5, 0.1);
  CHECK(c.circuits.empty());
  CHECK(c.value == 0.0);
  CHECK(!c.sparse);
  CHECK(validate_certificate(c, A));
}

TEST_CASE("certificate validation catches tampering") {
  auto c = sparseness_certificate(BondSet(16), 16, 0.5, 0.1);
  REQUIRE(c.circuits.size() >= 2);
  std::string why;
  auto bad = c;
  bad.value += 0.1;
  CHECK(!validate_certificate(bad, BondSet(16), &why));
  bad = c;
  std::swap(bad.circuits[0], bad.circuits.back());
  CHECK(!validate_certificate(bad, BondSet(16), &why));
  bad = c;
  bad.circuits.push_back(bad.circuits[0]);
  CHECK(!validate_certificate(bad, BondSet(16), &why));
  BondSet A(16);
  const auto& s = c.circuits[0].circuit.sites;
  A.insert(crossed_bond(make_dual_bond(s[0], s[1])));
  CHECK(!validate_certificate(c, A, &why));
  CHECK(why == "circuit crosses A");
}

TEST_CASE("sampled certificates validate and sparseness value is monotone") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    auto small = sample_bernoulli(0.05, 24, seed).bonds;
    BondSet big = small;
    for (const Bond& b : sample_bernoulli(0.05, 24, 500 + seed).bonds) big.insert(b);
    auto cs = sparseness_certificate(small, 24, 0.5, 0.1);
    auto cb = sparseness_certificate(big, 24, 0.5, 0.1);
    std::string why;
    CHECK_MESSAGE(validate_certificate(cs, small, &why), why);
    CHECK_MESSAGE(validate_certificate(cb, big, &why), why);
    CHECK(cb.value <= cs.value + 1e-12);
  }
}

TEST_CASE("sparseness failure estimates") {
  auto zero = estimate_sparseness_failure(0.0, 16, 5, 0.1, 0.5, 1);
  CHECK(zero.failures == 0);
  CHECK(zero.invalid == 0);
  CHECK(zero.ci.lo == 0.0);
  auto low = estimate_sparseness_failure(0.01, 16, 30, 0.1, 0.5, 2);
  CHECK(low.invalid == 0);
  CHECK(low.frequency() <= 0.05);
  auto high = estimate_sparseness_failure(0.6, 16, 30, 0.1, 0.5, 3);
  CHECK(high.invalid == 0);
  CHECK(high.frequency() >= 0.9);
  CHECK(high.ci.lo <= high.frequency());
  CHECK(high.ci.hi >= high.frequency());
  CHECK_THROWS_AS(estimate_sparseness_failure(0.1, 16, 0, 0.1, 0.5, 1), std::invalid_argument);
}

TEST_CASE("certificate export") {
  auto c = sparseness_certificate(BondSet(8), 8, 0.5, 0.1);
  std::ostringstream os;
  write_certificate(os, c);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "scale,length,sites");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 2);
  }
  CHECK(rows == c.circuits.size());
}

TEST_CASE("block site field") {
  auto f = block_site_field(std::vector<Site>{}, 20, 2, 0.001);
  CHECK(f.block == 8);
  CHECK(f.bad_count() == 0);
  CHECK(f.z_lo == -3);
  CHECK(f.z_hi == 2);
  CHECK(f.density_bound == doctest::Approx(1 - std::pow(0.999, 64)));
  CHECK(f.density_bound == doctest::Approx(0.0620).epsilon(1e-3));
  CHECK(f.recommended_eps == doctest::Approx(1.0 / 640));

  auto one = block_site_field(std::vector<Site>{{-1, 9}}, 20, 2, 0.001);
  CHECK(one.bad_count() == 1);
  CHECK(!one.is_good(-1, 1));
  CHECK(one.is_good(0, 1));
  CHECK_THROWS_AS(one.is_good(5, 0), std::out_of_range);

  // interior blocks only, so every block is a full 8x8 square inside the box
  const int n = 63;
  const int reps = 60;
  double bad = 0, total = 0;
  for (int i = 0; i < reps; ++i) {
    auto g = block_site_field(sample_sites(0.001, n, split_seed(8, static_cast<std::uint64_t>(i))), n, 2, 0.001);
    for (int z1 = -7; z1 <= 6; ++z1)
      for (int z2 = -7; z2 <= 6; ++z2) {
        total += 1;
        bad += g.is_good(z1, z2) ? 0 : 1;
      }
  }
  const double p = f.density_bound;
  CHECK(bad / total <= p + 3 * std::sqrt(p * (1 - p) / total));
  CHECK(bad / total >= p - 3 * std::sqrt(p * (1 - p) / total));

  auto bonds = block_site_field(sample_bernoulli(0.0, 8, 1).bonds, 8, 1, 0.01);
  CHECK(bonds.bad_count() == 0);
  CHECK(bonds.density_bound == doctest::Approx(1 - std::pow(0.99, 40)));
  BondSet A(8);
  A.insert(make_bond({3, 0}, {4, 0}));
  CHECK(block_site_field(A, 8, 1, 0.01).bad_count() == 2);
  CHECK_THROWS_AS(block_site_field(A, 8, 0, 0.01), std::invalid_argument);
}
