#include "spinlab/layer_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "spinlab/angle.hpp"
#include "spinlab/fft.hpp"

namespace spinlab {

namespace {

bool power_of_two(std::size_t m) { return m >= 2 && (m & (m - 1)) == 0; }

}  // namespace

CircleDensity::CircleDensity(std::vector<double> values) : values_(std::move(values)) {
  if (!power_of_two(values_.size())) throw std::invalid_argument("circle grid must be a power of two");
  double total = 0.0;
  std::size_t positive = 0;
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("density values must be finite and >= 0");
    total += v;
    positive += v > 0.0;
  }
  if (!(total > 0.0)) throw std::invalid_argument("density has zero mass");
  const double scale = static_cast<double>(values_.size()) / total;
  for (double& v : values_) v *= scale;
  feasible_fraction = static_cast<double>(positive) / static_cast<double>(values_.size());
}

CircleDensity CircleDensity::uniform(int m) { return CircleDensity(std::vector<double>(static_cast<std::size_t>(m), 1.0)); }

double CircleDensity::max() const { return *std::max_element(values_.begin(), values_.end()); }

double CircleDensity::sup_deviation() const {
  double out = 0.0;
  for (double v : values_) out = std::max(out, std::abs(v - 1.0));
  return out;
}

std::vector<std::complex<double>> fourier(const CircleDensity& d) {
  auto x = real_dft(d.values());
  const double m = d.size();
  for (auto& c : x) c = std::conj(c) / m;
  return x;
}

CircleDensity from_fourier(std::span<const std::complex<double>> a, int m) {
  std::vector<std::complex<double>> half(a.begin(), a.end());
  for (auto& c : half) c = std::conj(c);
  auto q = inverse_real_dft(half, static_cast<std::size_t>(m));
  // Round-off can leave tiny negative values where the density vanishes.
  for (double& v : q) v = std::max(v, 0.0);
  return CircleDensity(std::move(q));
}

CircleDensity convolve(std::span<const CircleDensity> densities) {
  if (densities.empty()) throw std::invalid_argument("nothing to convolve");
  const int m = densities.front().size();
  std::vector<std::complex<double>> acc(static_cast<std::size_t>(m / 2 + 1), 1.0);
  for (const auto& d : densities) {
    if (d.size() != m) throw std::invalid_argument("densities live on different grids");
    auto a = fourier(d);
    for (std::size_t s = 0; s < acc.size(); ++s) acc[s] *= a[s];
  }
  acc[0] = 1.0;
  return from_fourier(acc, m);
}

CircleDensity convolve(const CircleDensity& a, const CircleDensity& b) {
  std::vector<CircleDensity> v{a, b};
  return convolve(v);
}

std::size_t layer_position(Site x) {
  const int k = sup_norm(x);
  if (k == 0) return 0;
  int pos;
  if (x.x1 == k && x.x2 > -k)
    pos = x.x2 + k - 1;
  else if (x.x2 == k)
    pos = 2 * k + (k - 1 - x.x1);
  else if (x.x1 == -k)
    pos = 4 * k + (k - 1 - x.x2);
  else
    pos = 6 * k + (x.x1 + k - 1);
  return static_cast<std::size_t>(pos);
}

double OrbitConfiguration::angle(Site x) const {
  const int k = sup_norm(x);
  if (k <= n) return layers.at(static_cast<std::size_t>(k)).at(layer_position(x));
  if (k == n + 1) return boundary.at(layer_position(x));
  throw std::out_of_range("site outside the orbit's box and boundary");
}

OrbitConfiguration random_orbit(int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("orbit radius must be nonnegative");
  std::uniform_real_distribution<double> u(-kPi, kPi);
  OrbitConfiguration o;
  o.n = n;
  for (int k = 0; k <= n; ++k) {
    std::vector<double> layer(layer_sites(k).size());
    for (double& a : layer) a = u(rng);
    o.layers.push_back(std::move(layer));
  }
  o.boundary.resize(layer_sites(n + 1).size());
  for (double& a : o.boundary) a = u(rng);
  return o;
}

OrbitConfiguration constant_orbit(int n, double value) {
  if (n < 0) throw std::invalid_argument("orbit radius must be nonnegative");
  OrbitConfiguration o;
  o.n = n;
  for (int k = 0; k <= n; ++k) o.layers.emplace_back(layer_sites(k).size(), value);
  o.boundary.assign(layer_sites(n + 1).size(), value);
  return o;
}

LayerPotential layer_potential_from_offsets(int k, std::span<const double> offsets, const PairPotential& pot,
                                            int m) {
  if (!power_of_two(static_cast<std::size_t>(m))) throw std::invalid_argument("circle grid must be a power of two");
  LayerPotential W;
  W.k = k;
  W.values.assign(static_cast<std::size_t>(m), 0.0);
  if (pot.trig) {
    // sum_s b_s Re(e^{i s t} sum_b e^{i s delta_b})
    const auto& b = pot.trig->b;
    std::vector<std::complex<double>> phasor(b.size(), 0.0);
    for (std::size_t s = 0; s < b.size(); ++s)
      for (double d : offsets) phasor[s] += std::polar(1.0, static_cast<double>(s) * d);
    for (int j = 0; j < m; ++j) {
      const double t = kTwoPi * j / m;
      double w = 0.0;
      for (std::size_t s = 0; s < b.size(); ++s)
        w += b[s] * (std::polar(1.0, static_cast<double>(s) * t) * phasor[s]).real();
      W.values[static_cast<std::size_t>(j)] = w;
    }
    return W;
  }
  for (int j = 0; j < m; ++j) {
    const double t = kTwoPi * j / m;
    double w = 0.0;
    for (double d : offsets) w += pot(d + t);
    W.values[static_cast<std::size_t>(j)] = w;
  }
  return W;
}

LayerPotential layer_potential(int k, const OrbitConfiguration& orbit, const PairPotential& pot, int m) {
  if (k < 0 || k > orbit.n) throw std::invalid_argument("layer index outside the box");
  std::vector<double> offsets;
  for (const Bond& b : interlayer_bonds(k)) offsets.push_back(orbit.angle(b.a) - orbit.angle(b.b));
  return layer_potential_from_offsets(k, offsets, pot, m);
}

CircleDensity chi_density(const LayerPotential& W) {
  double wmin = std::numeric_limits<double>::infinity();
  for (double w : W.values) wmin = std::min(wmin, w);
  if (!std::isfinite(wmin)) throw std::runtime_error("layer potential is infinite everywhere: infeasible orbit");
  std::vector<double> q(W.values.size());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = std::isfinite(W.values[j]) ? std::exp(wmin - W.values[j]) : 0.0;
  return CircleDensity(std::move(q));
}

DensityCap sup_density_bound(int k, double c_bar) {
  if (k < 0) throw std::invalid_argument("layer index must be nonnegative");
  if (!(c_bar >= 0.0)) throw std::invalid_argument("curvature bound must be nonnegative");
  auto cap_at = [&](int layer) {
    if (c_bar == 0.0) return 1.0;
    const double a = 8.0 * c_bar * (layer + 1);
    // (1/2pi) int_{-pi}^{pi} exp(-a t^2) dt = sqrt(pi/a) erf(pi sqrt(a)) / (2 pi)
    return kTwoPi / (std::sqrt(kPi / a) * std::erf(kPi * std::sqrt(a)));
  };
  DensityCap out;
  out.cap = cap_at(k);
  // cap(k)/sqrt(k+1) is nonincreasing in k, so k = 0 gives the constant.
  out.c1 = cap_at(0);
  return out;
}

FourierMaxBound fourier_max_bound(double C) {
  if (!(C >= 1.0)) throw std::invalid_argument("a probability density cannot have cap below 1");
  FourierMaxBound out;
  out.lemma = 1.0 - 1.0 / (36.0 * C * C);
  out.sharp = C * std::sin(kPi / C) / kPi;
  return out;
}

ExtremalResult extremal_fourier_oracle(double C, int s, int m) {
  if (!(C >= 1.0)) throw std::invalid_argument("a probability density cannot have cap below 1");
  if (s == 0) throw std::invalid_argument("mode must be nonzero");
  if (!power_of_two(static_cast<std::size_t>(m))) throw std::invalid_argument("circle grid must be a power of two");
  std::vector<double> c(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) c[static_cast<std::size_t>(j)] = std::cos(kTwoPi * static_cast<double>(s) * j / m);
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] > c[b]; });
  std::vector<double> q(c.size(), 0.0);
  double mass = static_cast<double>(m);  // unit mean
  for (std::size_t idx : order) {
    double put = std::min(C, mass);
    q[idx] = put;
    mass -= put;
    if (mass <= 0.0) break;
  }
  ExtremalResult out;
  double v = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) v += q[j] * c[j];
  out.value = v / m;
  out.maximizer = CircleDensity(std::move(q));
  return out;
}

double uniformity_bound(int k, int r, double c1) {
  if (k < 0 || r < k + 1) throw std::invalid_argument("need 0 <= k and r >= k+1");
  if (!(c1 > 0.0)) throw std::invalid_argument("C1 must be positive");
  double log_prod = 0.0;
  for (int l = k + 2; l <= r; ++l) log_prod += std::log1p(-1.0 / (36.0 * c1 * c1 * (l + 1)));
  return c1 * std::pow((k + 1.0) * (k + 2.0), 0.25) * std::exp(log_prod);
}

double uniformity_bound_circuits(int k, std::span<const std::size_t> lengths, double c1) {
  if (k < 0 || static_cast<std::size_t>(k) + 1 >= lengths.size())
    throw std::invalid_argument("need two circuits at and after k");
  if (!(c1 > 0.0)) throw std::invalid_argument("C1 must be positive");
  double inv = 0.0;
  for (std::size_t l = static_cast<std::size_t>(k) + 2; l < lengths.size(); ++l) inv += 1.0 / lengths[l];
  return c1 * std::pow(static_cast<double>(lengths[k]) * lengths[k + 1], 0.25) * std::exp(-inv / (36.0 * c1 * c1));
}

void write_density(std::ostream& os, const CircleDensity& d) {
  os << "angle,value\n";
  os.precision(17);
  for (int j = 0; j < d.size(); ++j) os << kTwoPi * j / d.size() << ',' << d.at(j) << '\n';
}

void write_fourier(std::ostream& os, std::span<const std::complex<double>> a) {
  os << "mode,real,imag\n";
  os.precision(17);
  for (std::size_t s = 0; s < a.size(); ++s) os << s << ',' << a[s].real() << ',' << a[s].imag() << '\n';
}

}  // namespace spinlab
