#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spinlab/lattice.hpp"
#include "spinlab/longrange_walk.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/stats.hpp"

namespace spinlab {

struct BondProcessSample {
  BondSet bonds;
  std::string generator;  // "bernoulli(eps)" or "coupling(kernel,eps)"
  std::uint64_t seed = 0;
};

// Each nearest-neighbour bond with an end in Lambda_n open independently with
// probability eps. Throws for eps outside [0, 1).
BondProcessSample sample_bernoulli(double eps, int n, std::uint64_t seed);

// Each pair {x, y}, x != y, with an end in Lambda_n open independently with
// probability eps * J_{x-y}. Throws unless eps * max J < 1.
BondProcessSample sample_coupling(double eps, const CouplingKernel& J, int n, std::uint64_t seed);

// Sites of Lambda_n, each independently with probability eps.
std::vector<Site> sample_sites(double eps, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Crossings

struct CrossingSet {
  ShellRectangle rect;
  std::vector<DualPath> paths;  // pairwise d-site disjoint good crossings, innermost first
  std::size_t edge_flow = 0;    // maximal number of d-bond disjoint crossings
};

// Good crossings join the two short sides through the interior d-sites and
// avoid A. The count is maximal (site-disjoint max-flow); paths are then
// shortened one at a time by breadth-first search among the free d-sites.
CrossingSet disjoint_good_crossings(const ShellRectangle& rect, const BondSet& A);

// Maximal number of d-bond disjoint crossings (no node splitting).
std::size_t edge_disjoint_crossings(const ShellRectangle& rect, const BondSet& A);

// Structural check: inside the rectangle, simple, joins the short sides, avoids A.
bool is_good_crossing(const DualPath& p, const ShellRectangle& rect, const BondSet& A);

// Primal bonds crossed by the rectangle's interior d-bonds; a top-to-bottom
// path of these bonds is a cut.
std::vector<Bond> cut_bonds(const ShellRectangle& rect);

// Exhaustive oracles for small rectangles.
// min over cut paths of (|cut| - |cut & A|); throws if more than max_steps would be needed.
std::size_t brute_force_min_cut(const ShellRectangle& rect, const BondSet& A, int max_steps = 14);
// Largest family of pairwise d-site disjoint good crossings; at most 16 interior d-sites.
std::size_t brute_force_disjoint_crossings(const ShellRectangle& rect, const BondSet& A);
// All simple cut paths, as bond lists.
std::vector<std::vector<Bond>> enumerate_cut_paths(const ShellRectangle& rect, int max_steps = 14);

struct ShortCrossingEvent {
  int scale = 2;
  double alpha = 0.1;
  std::array<CrossingSet, 4> crossings;     // N, E, S, W
  std::array<std::size_t, 4> short_count{};  // crossings with length < 2^{k+3} / alpha
  std::array<bool, 4> holds{};               // short_count >= alpha 2^{k-2}
  bool all = false;

  double length_limit() const;  // 2^{k+3} / alpha
  double count_threshold() const;  // alpha 2^{k-2}
};

// Throws for k < 2 or alpha outside (0, 1/2).
ShortCrossingEvent short_crossing_event(const BondSet& A, int k, double alpha);

// ---------------------------------------------------------------------------
// Sparseness

struct CertificateCircuit {
  int scale = 0;
  DualPath circuit;
};

struct SparsenessCertificate {
  int n = 0;
  double rho = 0.5, alpha = 0.1;
  double tau = 0.0;        // alpha^2 (1 - rho) / (256 ln 2)
  double threshold = 0.0;  // tau ln n
  int k_lo = 0, k_hi = 0;  // scales examined
  std::vector<int> scales_with_event;
  std::vector<CertificateCircuit> circuits;  // innermost first
  double value = 0.0;      // sum of 1/|circuit|
  bool sparse = false;     // value >= threshold
};

double sparseness_tau(double alpha, double rho);

// Scales k from max(2, floor(rho log2 n)) to floor(log2 n). At each scale with
// the short-crossing event, the i-th innermost short crossings of the four
// rectangles give a circuit; circuits that are not disjoint from those already
// accepted are skipped.
SparsenessCertificate sparseness_certificate(const BondSet& A, int n, double rho, double alpha);

// Disjointness, avoidance of A, winding, inclusion order, and the value.
bool validate_certificate(const SparsenessCertificate& c, const BondSet& A, std::string* why = nullptr);

struct SparsenessEstimate {
  int n = 0;
  double eps = 0.0, alpha = 0.0, rho = 0.0;
  std::size_t samples = 0, failures = 0, invalid = 0;
  Interval ci;
  double frequency() const { return samples ? static_cast<double>(failures) / samples : 0.0; }
};

// Sample i uses split_seed(seed, i).
SparsenessEstimate estimate_sparseness_failure(double eps, int n, std::size_t samples, double alpha, double rho,
                                               std::uint64_t seed);

// One record per circuit: "scale,length,sites" with sites as u:v;u:v;...
void write_certificate(std::ostream& os, const SparsenessCertificate& c);

// ---------------------------------------------------------------------------
// Blocks

struct SitePercolationField {
  int r = 1;            // interaction diameter r_Lambda
  int block = 4;        // 4 r
  int z_lo = 0, z_hi = 0;  // block coordinates covering Lambda_n
  std::vector<char> good;  // (z1 - z_lo) * width + (z2 - z_lo)
  double density_bound = 1.0;   // 1 - (1 - eps)^{16 r^2}, bound on the bad probability
  double recommended_eps = 0.0; // 1 / (C r^2)

  int width() const { return z_hi - z_lo + 1; }
  bool is_good(int z1, int z2) const;
  std::size_t bad_count() const;
};

// Block z covers [4 r z1, 4 r z1 + 4 r) x [4 r z2, 4 r z2 + 4 r); it is good iff
// it contains no site of A. The recommended eps uses C = 160, which keeps the
// bad-block bound 16 r^2 eps at 0.1.
SitePercolationField block_site_field(const std::vector<Site>& A, int n, int r, double eps);
// Bond form: a bond marks the block of each endpoint; the density bound then
// counts the 2 L^2 + 2 L nearest-neighbour bonds touching a block of side L.
SitePercolationField block_site_field(const BondSet& A, int n, int r, double eps);

}  // namespace spinlab
