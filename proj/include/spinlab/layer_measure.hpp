#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include "spinlab/interaction.hpp"
#include "spinlab/lattice.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

inline constexpr int kDefaultCircleGrid = 4096;

// Density on the circle w.r.t. the normalized measure dt/(2 pi), sampled at
// t_j = 2 pi j / m.
class CircleDensity {
 public:
  CircleDensity() = default;
  // Normalizes the values to unit mean. Throws if m is not a power of two,
  // a value is negative or the total mass is zero.
  explicit CircleDensity(std::vector<double> values);

  static CircleDensity uniform(int m = kDefaultCircleGrid);

  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& values() const { return values_; }
  double at(int j) const { return values_[static_cast<std::size_t>(j)]; }
  double max() const;
  double sup_deviation() const;  // sup |q - 1|

  // Fraction of grid points with positive weight (hard-core potentials).
  double feasible_fraction = 1.0;

 private:
  std::vector<double> values_;
};

// a_s = (1/m) sum_j q_j e^{i s t_j} for s = 0..m/2; a_{-s} = conj(a_s).
std::vector<std::complex<double>> fourier(const CircleDensity& d);
// The density with the given coefficients (s = 0..m/2) on an m-point grid.
CircleDensity from_fourier(std::span<const std::complex<double>> a, int m);

// Circular convolution w.r.t. dt/(2 pi), computed as a product of coefficients.
CircleDensity convolve(std::span<const CircleDensity> densities);
CircleDensity convolve(const CircleDensity& a, const CircleDensity& b);

// Frozen layer configurations Phi_0..Phi_n (canonical layer order) and the
// boundary angles on L_{n+1}.
struct OrbitConfiguration {
  int n = 0;
  std::vector<std::vector<double>> layers;
  std::vector<double> boundary;

  double angle(Site x) const;  // Phi or boundary value at x, |x| <= n+1
};

OrbitConfiguration random_orbit(int n, Rng& rng);
OrbitConfiguration constant_orbit(int n, double value = 0.0);

// Position of x in layer_sites(sup_norm(x)).
std::size_t layer_position(Site x);

struct LayerPotential {
  int k = 0;
  std::vector<double> values;  // W at t_j = 2 pi j / m, may contain +inf
};

// W(t) = sum_b U(delta_b + t) for bond offsets delta_b.
LayerPotential layer_potential_from_offsets(int k, std::span<const double> offsets, const PairPotential& pot,
                                            int m = kDefaultCircleGrid);

// W_k for k < n from the interlayer bonds (t = psi_k - psi_{k+1}), W_n against
// the boundary (t = psi_n).
LayerPotential layer_potential(int k, const OrbitConfiguration& orbit, const PairPotential& pot,
                               int m = kDefaultCircleGrid);

// q proportional to exp(-W), computed after subtracting min W. Throws
// std::runtime_error if W is +inf everywhere.
CircleDensity chi_density(const LayerPotential& W);

struct DensityCap {
  double cap = 1.0;  // sup of q allowed by the quadratic Taylor bound at layer k
  double c1 = 1.0;   // cap(k) <= c1 sqrt(k+1) for every k
};

DensityCap sup_density_bound(int k, double c_bar);

struct FourierMaxBound {
  double lemma = 0.0;  // 1 - 1/(36 C^2)
  double sharp = 0.0;  // (C/pi) sin(pi/C)
};

FourierMaxBound fourier_max_bound(double C);

struct ExtremalResult {
  double value = 0.0;
  CircleDensity maximizer;
};

// Greedy fill of the linear program max (1/m) sum q_j cos(s t_j) subject to
// 0 <= q <= C and unit mean.
ExtremalResult extremal_fourier_oracle(double C, int s, int m = kDefaultCircleGrid);

// C1 ((k+1)(k+2))^{1/4} prod_{l=k+2}^{r} (1 - 1/(36 C1^2 (l+1))), r >= k+1.
double uniformity_bound(int k, int r, double c1);
// Circuit form with circuits listed innermost first: C1 (|l_k||l_{k+1}|)^{1/4}
// exp(-sum_{l>=k+2} 1/|l_l| / (36 C1^2)), 0-based k < lengths.size() - 1.
double uniformity_bound_circuits(int k, std::span<const std::size_t> lengths, double c1);

// Two-column "angle,value" and three-column "mode,real,imag" tables.
void write_density(std::ostream& os, const CircleDensity& d);
void write_fourier(std::ostream& os, std::span<const std::complex<double>> a);

}  // namespace spinlab
