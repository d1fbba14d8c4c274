#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spinlab/interaction.hpp"
#include "spinlab/lattice.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/stats.hpp"

namespace spinlab {

enum class BcKind { Fixed, Free, Staircase, Smeared };

struct BoundaryCondition {
  BcKind kind = BcKind::Free;
  double value = 0.0;  // fixed
  int k = 12;          // staircase, smeared
  double sigma = 2.0;  // slope in units of theta_k
  double delta = 0.0;  // smeared half-width

  static BoundaryCondition fixed(double value);
  static BoundaryCondition free();
  static BoundaryCondition staircase(int k, double sigma = 2.0);
  static BoundaryCondition smeared(int k, double delta, double sigma = 2.0);

  double theta_k() const;
  // Centre value at a boundary site: value, or sigma x2 theta_k.
  double centre(Site y) const;
  std::string describe() const;
};

// Angles on Box(n + 1): the interior Lambda_n carries the spins, the outer
// ring the boundary values (ignored for free boundary conditions).
struct SpinConfiguration {
  int n = 0;
  std::vector<double> angle;  // Box(n + 1) index order, canonical in [-pi, pi)

  SpinConfiguration() = default;
  explicit SpinConfiguration(int n);
  double at(Site x) const;
  double& at(Site x);
};

struct SpinSystem {
  int n = 0;
  PairPotential pot;
  BoundaryCondition bc;
  int states = 0;  // 0: continuous spins, else angles 2 pi j / states
  // Optional subset of Lambda_n (Box(n) order) carrying live spins; the other
  // sites behave like the outside of the box. Empty means all of Lambda_n.
  std::vector<char> active;

  bool free() const { return bc.kind == BcKind::Free; }
  bool live(Site x) const;
  std::vector<Site> live_sites() const;
};

// Boundary values at the centres of the boundary condition, live sites at `fill`.
SpinConfiguration centred_configuration(const SpinSystem& sys, double fill = 0.0);

// Sum over bonds with an end in Lambda_n (both ends for free bc); +inf when a
// hard-core constraint is violated.
double total_energy(const SpinConfiguration& cfg, const SpinSystem& sys);
// Energy of the bonds at interior site x with its spin set to `angle`.
double local_energy(const SpinConfiguration& cfg, const SpinSystem& sys, Site x, double angle);
// Bonds whose circle distance exceeds the hard-core cutoff (0 without one).
std::size_t hard_core_violations(const SpinConfiguration& cfg, const SpinSystem& sys);

// Every spin (and ring value) shifted by psi.
SpinConfiguration rotated(const SpinConfiguration& cfg, double psi);

// Single-site proposal law. Continuous spins: wrapped Gaussian of the given
// width, replaced by a uniform draw with probability `refresh`. Discrete
// spins: one step up or down, or a uniform state with probability `refresh`.
struct Proposal {
  double width = 0.5;
  double refresh = 0.1;
};

// One systematic sweep over Lambda_n; returns the number of accepted moves.
std::size_t metropolis_sweep(SpinConfiguration& cfg, const SpinSystem& sys, const Proposal& prop, Rng& rng);

// Exact single-site kernel for discrete spins: entry j is the probability that
// one update of site x moves its spin to state j.
std::vector<double> discrete_site_kernel(const SpinConfiguration& cfg, const SpinSystem& sys, Site x,
                                         const Proposal& prop);

// Short pilot sweeps scaling the width towards acceptance 0.5.
double tune_width(SpinConfiguration& cfg, const SpinSystem& sys, Proposal prop, Rng& rng, std::size_t rounds = 20,
                  std::size_t sweeps_per_round = 20);

using Observable = std::function<double(const SpinConfiguration&)>;

struct NamedObservable {
  std::string name;
  Observable f;
};

struct ChainOptions {
  std::size_t burn_in = 1000;
  std::size_t sweeps = 10000;  // recorded sweeps
  Proposal proposal;
  bool tune = true;
  // Uniform global rotation after every sweep; only legal for free bc, where
  // the Hamiltonian is exactly invariant.
  bool global_rotation = false;
  std::size_t batches = 32;
};

struct ChainStats {
  std::uint64_t seed = 0;
  std::size_t sweeps = 0;
  double acceptance = 0.0;
  double width = 0.0;
  std::size_t violations = 0;  // hard-core violations over recorded sweeps
  std::vector<std::string> names;
  std::vector<std::vector<double>> traces;  // one value per recorded sweep
  std::vector<Estimate> estimates;          // batch means

  const Estimate& estimate(const std::string& name) const;
  const std::vector<double>& trace(const std::string& name) const;
};

// Runs burn-in (with width tuning) then records every observable once per
// sweep. `cfg` must have finite energy; it holds the final state on return.
ChainStats run_chain(SpinConfiguration& cfg, const SpinSystem& sys, const std::vector<NamedObservable>& obs,
                     const ChainOptions& opt, std::uint64_t seed);

Observable energy_observable(const SpinSystem& sys);
Observable cos_at(Site x, double psi = 0.0);
Observable sin_at(Site x, double psi = 0.0);

// |<f(phi + psi)> - <f(phi)>| from one chain, error by batch means of the
// difference trace. `f` receives the rotation as its second argument.
struct Discrepancy {
  double value = 0.0;  // |mean difference|
  Estimate difference;
  Estimate plain;
  Estimate shifted;
  ChainStats chain;
};

using RotatedObservable = std::function<double(const SpinConfiguration&, double psi)>;

Discrepancy rotation_discrepancy(const SpinSystem& sys, const RotatedObservable& f, double psi,
                                 const ChainOptions& opt, std::uint64_t seed);

// Initial state used by the estimators: centred ring with a feasible interior
// (the feasibility witness for hard-core potentials).
SpinConfiguration initial_configuration(const SpinSystem& sys);

// <cos(phi_x - phi_y)>; exactly 1 for x == y without running a chain.
Estimate two_point(const SpinSystem& sys, Site x, Site y, const ChainOptions& opt, std::uint64_t seed);

struct CorrelationRow {
  double distance = 0.0;
  double value = 0.0;
  double error = 0.0;
};

struct PowerLawFit {
  double exponent = 0.0;  // c in C r^{-c}
  double exponent_error = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // 95%
  double amplitude = 0.0;
  double chi2_power = 0.0;
  double chi2_exponential = 0.0;
  double correlation_length = 0.0;  // exponential fit
  double loglik_difference = 0.0;   // power minus exponential; > 0 favours the power law
  bool power_preferred() const { return loglik_difference > 0.0; }
};

// Weighted fit of log C against log r and against r. Throws
// std::invalid_argument ("unusable window") on nonpositive values, fewer than
// four distances or a span below a factor of four.
PowerLawFit power_law_fit(const std::vector<CorrelationRow>& rows);

// ---------------------------------------------------------------------------
// Hard-core feasibility

enum class Feasibility { Feasible, Infeasible, Rigid };

const char* feasibility_name(Feasibility v);

struct Arc {
  double centre = 0.0;
  double half_width = 0.0;  // >= pi means the whole circle
};

// Propagation is carried out on the lift to the real line: for a cutoff below
// pi/3 every finite-energy configuration has a unique lift once the ring is
// lifted, so intervals there are exact. Each interval maps to a circle arc.
struct FeasibilityCertificate {
  int n = 0;
  double theta = 0.0;
  Feasibility verdict = Feasibility::Infeasible;
  std::string reason;
  std::vector<double> lo, hi;  // lifted interval per Box(n) site
  double max_width = 0.0;
  std::size_t sweeps = 0;
  std::optional<SpinConfiguration> witness;  // feasible point, the unique one when rigid

  Arc arc(Site x) const;
};

// Ring values of `cfg` are the boundary; free bc is trivially feasible.
FeasibilityCertificate feasibility(const SpinConfiguration& ring, double theta, bool free_bc = false);
FeasibilityCertificate feasibility(const BoundaryCondition& bc, double theta, int n);

// ---------------------------------------------------------------------------
// Staircase states

struct MagnetizationRow {
  Site x;
  std::complex<double> m;
};

struct AizenmanReport {
  int k = 12, n = 16;
  double delta = 0.0, sigma = 2.0, theta = 0.0;
  std::size_t restarts = 0;
  std::size_t boundary_sweeps = 0;
  double boundary_acceptance = 0.0;
  FeasibilityCertificate centre;        // at the unsmeared staircase
  std::vector<MagnetizationRow> rows;   // Box(n) order, averaged over restarts
  Estimate m_re, m_im, modulus;         // at the origin, spread over restarts
  std::complex<double> covariance_residual;  // m(0,1) - e^{i sigma theta} m(0,0)
  double covariance_error = 0.0;             // standard error of the residual
  std::vector<ChainStats> chains;
  std::size_t violations = 0;
};

struct AizenmanOptions {
  int k = 12;
  double delta = 0.05;
  double sigma = 2.0;
  int n = 16;
  std::size_t restarts = 8;
  std::size_t boundary_sweeps = 20;  // feasibility-preserving ring sweeps per restart
  ChainOptions chain;
};

// Hard-core potential with cutoff theta_k and ring angles from nu^delta
// restricted to the feasible set. Each restart draws a fresh ring by
// independence moves from the arcs accepted only when a finite-energy
// interior exists. Throws std::runtime_error ("identically zero measure")
// when the staircase centre itself admits no finite-energy configuration.
AizenmanReport aizenman_state(const AizenmanOptions& opt, std::uint64_t seed);

// Same potential, free bc, global rotations on.
AizenmanReport free_state(const AizenmanOptions& opt, std::uint64_t seed);

// Rows sweep,value.
void write_trace(std::ostream& os, const std::vector<double>& trace);
// Rows x1,x2,re,im,abs.
void write_magnetization(std::ostream& os, const std::vector<MagnetizationRow>& rows);

}  // namespace spinlab
