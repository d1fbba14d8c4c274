#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spinlab/lattice.hpp"
#include "spinlab/longrange_walk.hpp"
#include "spinlab/stats.hpp"

namespace spinlab {

// Bond conductances d_eps(x) (the connectivity upper bound) on a square
// stencil. Mass the stencil does not represent is kept in `tail` and treated
// as leading out of every box.
struct Conductances {
  std::string name;
  double eps = 0.0;
  LatticeField p;
  double tail = 0.0;

  double total() const { return p.sum() - p.at({0, 0}) + tail; }  // conductance mass per site
};

Conductances surrogate_conductances(const CouplingKernel& J, double eps, double tol = 1e-12, int crop_radius = 64);

struct SpinWaveField {
  int n = 0;      // box radius
  int R = 0;      // clamped on Lambda_R
  double psi = 0.0;
  Conductances cond;
  LatticeField values;  // radius n
  long iterations = 0;
  double residual = 0.0;  // max harmonic residual over the annulus / conductance mass

  double at(Site x) const { return values.at(x); }  // 0 outside the box
};

// Psi = psi on Lambda_R, 0 off Lambda_n, harmonic for the conductances on the
// annulus. Conjugate gradients (Eigen, matrix free, diagonal preconditioner)
// until the residual is at most tol times the conductance mass. Throws
// std::runtime_error with the residual if max_iter is exhausted.
SpinWaveField solve_spinwave(const Conductances& c, int n, int R, double psi, double tol = 1e-9,
                             long max_iter = 100000);

// Max over annulus sites of |sum_y p(x-y) (Psi(y) - Psi(x))| / conductance mass.
double harmonic_residual(const SpinWaveField& f);

// sum_{x in Lambda_n} sum_{y in Z^2} k(x-y) (g(x) - g(y))^2 for g supported on
// the box of g's radius; `tail` is kernel mass beyond the stencil.
double quadratic_form(const LatticeField& k, double tail, const LatticeField& g);

double dirichlet_energy(const SpinWaveField& f);

// Smallest R >= rho_V with |V| * sum_{|y|_inf > R - rho_V} d(y) <= delta / (2 f_sup).
// Throws if the target lies below what the stencil resolves.
int compute_R_delta(const std::vector<Site>& V, double delta, const Conductances& c, double f_sup);

// |V| * sum_{|y|_inf > R - rho_V} d(y).
double gate_tail_bound(const std::vector<Site>& V, int R, const Conductances& c);

// r_A(V): largest sup norm in the A-clusters of V, at least 1.
int cluster_radius(const BondSet& A, const std::vector<Site>& V);

struct DeformedSpinWave {
  LatticeField values;          // Psi~ on the box, 0 outside
  std::vector<Site> witness;    // t_A(x), Box(n) index order
  std::vector<int> cluster;     // cluster label per box site
  int r_A = 1;                  // r_A(V)
  bool gated = false;           // r_A(V) > R, Psi~ set to 0
};

// Cluster minima of Psi over the A-clusters (Psi = 0 off the box); witness is
// the lexicographically smallest minimizing site.
DeformedSpinWave deform(const SpinWaveField& f, const BondSet& A, const std::vector<Site>& V = {{0, 0}});

struct EntropyEstimate {
  double value = 0.0;      // c1 sum J (Psi(t_A x) - Psi(t_A y))^2
  double c1 = 1.0;
  double form = 0.0;       // the sum without c1
  double cluster_x = 0.0;  // sum J (Psi(t_A x) - Psi(x))^2
  double cluster_y = 0.0;  // sum J (Psi(t_A y) - Psi(y))^2
  double smooth = 0.0;     // sum J (Psi(x) - Psi(y))^2
  bool gated = false;
};

// Gated deformations contribute 0 throughout.
EntropyEstimate entropy_bound(const SpinWaveField& f, const DeformedSpinWave& d, const CouplingKernel& J,
                              double c1 = 1.0);

struct EntropyReport {
  int n = 0, R = 0;
  double eps = 0.0, psi = 0.0, c1 = 1.0;
  std::size_t samples = 0, gated = 0;
  Estimate value;          // over samples
  Estimate cluster;        // cluster_x + cluster_y
  double smooth = 0.0;     // A-independent smooth term
  double energy = 0.0;     // dirichlet energy with the d_eps conductances
  double cluster_bound = 0.0;  // 2 * energy, from Q(x <-> y) <= d(x - y)
  double smooth_bound = 0.0;   // energy / eps
};

// A ~ Q_{J,eps} on the box (sample i uses split_seed(seed, i)), V = {0}.
EntropyReport expected_entropy(const CouplingKernel& J, double eps, int n, int R, double psi, std::size_t samples,
                               std::uint64_t seed, double c1 = 1.0);

// Frequency with which the walk with steps d_eps / c(eps) started at x hits
// Lambda_R before leaving Lambda_n. A step is m independent J steps with
// P(m) = (1 - eps) eps^{m-1}.
Estimate monte_carlo_hitting(const CouplingKernel& J, double eps, int n, int R, Site x, std::size_t walks,
                             std::uint64_t seed);

// Rows x1,x2,psi.
void write_field(std::ostream& os, const SpinWaveField& f);

}  // namespace spinlab
