#include "doctest.h"

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "spinlab/angle.hpp"
#include "spinlab/layer_measure.hpp"

using namespace spinlab;

namespace {

CircleDensity von_mises(double kappa, double mu = 0.0, int m = kDefaultCircleGrid) {
  std::vector<double> v(m);
  for (int j = 0; j < m; ++j) v[j] = std::exp(kappa * std::cos(kTwoPi * j / m - mu));
  return CircleDensity(v);
}

// Sum over all bonds x in L_k, y in L_{k+1} found by scanning the square.
double brute_layer_energy(int k, const OrbitConfiguration& o, const PairPotential& pot, double psi_k, double psi_next) {
  double w = 0.0;
  for (int x1 = -k; x1 <= k; ++x1)
    for (int x2 = -k; x2 <= k; ++x2) {
      Site x{x1, x2};
      if (sup_norm(x) != k) continue;
      for (Site e : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
        Site y = x + e;
        if (sup_norm(y) != k + 1) continue;
        w += pot((o.angle(x) + psi_k) - (o.angle(y) + psi_next));
      }
    }
  return w;
}

double sup_over_grid_sum(const std::vector<std::complex<double>>& a) {
  double s = 0.0;
  for (std::size_t i = 1; i < a.size(); ++i) s += (i + 1 == a.size() ? 1.0 : 2.0) * std::abs(a[i]);
  return s;
}

}  // namespace

TEST_CASE("layer positions follow the canonical order") {
  for (int k = 0; k <= 12; ++k) {
    auto s = layer_sites(k);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(layer_position(s[i]) == i);
  }
}

TEST_CASE("constant orbit layer potentials") {
  auto pot = xy_potential(1.0);
  auto o = constant_orbit(4);
  auto w0 = layer_potential(0, o, pot);
  auto w2 = layer_potential(2, o, pot);
  for (int j = 0; j < kDefaultCircleGrid; j += 97) {
    double t = kTwoPi * j / kDefaultCircleGrid;
    CHECK(w0.values[j] == doctest::Approx(-4 * std::cos(t)));
    CHECK(w2.values[j] == doctest::Approx(-20 * std::cos(t)));
  }
}

TEST_CASE("layer potentials match bond-by-bond summation") {
  Rng rng = make_rng(11);
  auto o = random_orbit(6, rng);
  for (auto pot : {xy_potential(1.3), absval_potential(), logsing_potential(-30)}) {
    for (int k : {0, 1, 3, 5}) {
      auto W = layer_potential(k, o, pot, 256);
      for (int j = 0; j < 256; j += 17) {
        double t = kTwoPi * j / 256;
        CHECK(W.values[j] == doctest::Approx(brute_layer_energy(k, o, pot, t, 0.0)).epsilon(1e-11));
      }
    }
    // Boundary layer uses the boundary angles.
    auto Wn = layer_potential(6, o, pot, 256);
    CHECK(Wn.values[40] == doctest::Approx(brute_layer_energy(6, o, pot, kTwoPi * 40 / 256, 0.0)).epsilon(1e-11));
  }
}

TEST_CASE("layer energy depends on the angle difference only") {
  Rng rng = make_rng(5);
  auto o = random_orbit(5, rng);
  auto pot = xy_potential(1.0);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 20; ++t) {
    double a = u(rng), b = u(rng), alpha = u(rng);
    for (int k : {0, 2, 4})
      CHECK(brute_layer_energy(k, o, pot, a + alpha, b + alpha) ==
            doctest::Approx(brute_layer_energy(k, o, pot, a, b)).epsilon(1e-11));
  }
}

TEST_CASE("chi density shapes") {
  LayerPotential flat{0, std::vector<double>(kDefaultCircleGrid, 3.0)};
  auto u = chi_density(flat);
  auto a = fourier(u);
  CHECK(std::abs(a[0] - 1.0) < 1e-12);
  for (std::size_t s = 1; s < a.size(); ++s) CHECK(std::abs(a[s]) < 1e-12);

  auto W = layer_potential(0, constant_orbit(1), xy_potential(1.0));
  auto q = chi_density(W);
  const double norm = std::cyl_bessel_i(0.0, 4.0);
  for (int j = 0; j < q.size(); j += 131) {
    double t = kTwoPi * j / q.size();
    CHECK(q.at(j) == doctest::Approx(std::exp(4 * std::cos(t)) / norm).epsilon(1e-10));
  }
}

TEST_CASE("infeasible hard-core orbit is flagged") {
  // Opposite neighbours of the origin frozen half a turn apart: some bond is
  // forbidden for every shift.
  OrbitConfiguration o = constant_orbit(1);
  o.layers[1][layer_position({-1, 0})] = kPi;
  o.layers[1][layer_position({0, -1})] = kPi;
  auto W = layer_potential(0, o, aizenman_potential(0.3));
  CHECK_THROWS_AS(chi_density(W), std::runtime_error);

  auto W2 = layer_potential(0, constant_orbit(1), aizenman_potential(0.3));
  auto q = chi_density(W2);
  CHECK(q.feasible_fraction == doctest::Approx(0.6 / kTwoPi).epsilon(0.01));
}

TEST_CASE("fourier coefficients") {
  auto a = fourier(CircleDensity::uniform());
  CHECK(std::abs(a[0] - 1.0) < 1e-14);
  CHECK(std::abs(a[1]) < 1e-14);
  auto v = fourier(von_mises(1.0));
  CHECK(std::abs(v[0] - 1.0) < 1e-10);
  const double ratio = std::cyl_bessel_i(1.0, 1.0) / std::cyl_bessel_i(0.0, 1.0);
  CHECK(v[1].real() == doctest::Approx(ratio).epsilon(1e-12));
  CHECK(ratio == doctest::Approx(0.4464).epsilon(1e-3));
  // A shifted density picks up the phase e^{i s mu}.
  auto w = fourier(von_mises(1.0, 0.7));
  CHECK(std::arg(w[1]) == doctest::Approx(0.7).epsilon(1e-10));
  auto back = from_fourier(w, kDefaultCircleGrid);
  auto orig = von_mises(1.0, 0.7);
  for (int j = 0; j < orig.size(); j += 101) CHECK(back.at(j) == doctest::Approx(orig.at(j)).epsilon(1e-12));
}

TEST_CASE("convolution theorem and direct oracle") {
  auto p = von_mises(2.0, 0.3);
  auto q = von_mises(5.0, -1.1);
  auto c = convolve(p, q);
  auto ap = fourier(p), aq = fourier(q), ac = fourier(c);
  for (std::size_t s = 0; s < 50; ++s) CHECK(std::abs(ac[s] - ap[s] * aq[s]) < 1e-8);
  auto pp = fourier(convolve(p, p));
  for (std::size_t s = 0; s < 50; ++s) CHECK(std::abs(pp[s] - ap[s] * ap[s]) < 1e-8);

  const int m = p.size();
  for (int j = 0; j < m; j += 257) {
    double direct = 0.0;
    for (int i = 0; i < m; ++i) direct += p.at((j - i + m) % m) * q.at(i);
    direct /= m;
    CHECK(std::abs(direct - c.at(j)) < 1e-8);
  }
}

TEST_CASE("uniform density absorbs") {
  auto c = convolve(CircleDensity::uniform(), von_mises(3.0));
  for (int j = 0; j < c.size(); j += 64) CHECK(c.at(j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variances add for narrow densities") {
  auto wrapped_normal = [](double sigma) {
    const int m = kDefaultCircleGrid;
    std::vector<double> v(m);
    for (int j = 0; j < m; ++j) {
      double t = wrap_angle(kTwoPi * j / m);
      v[j] = std::exp(-t * t / (2 * sigma * sigma));
    }
    return CircleDensity(v);
  };
  auto second_moment = [](const CircleDensity& d) {
    double s = 0.0;
    for (int j = 0; j < d.size(); ++j) {
      double t = wrap_angle(kTwoPi * j / d.size());
      s += t * t * d.at(j);
    }
    return s / d.size();
  };
  auto a = wrapped_normal(0.1), b = wrapped_normal(0.2);
  CHECK(second_moment(convolve(a, b)) == doctest::Approx(second_moment(a) + second_moment(b)).epsilon(1e-6));
}

TEST_CASE("density cap") {
  CHECK(sup_density_bound(0, 0.0).cap == 1.0);
  CHECK(sup_density_bound(7, 0.0).c1 == 1.0);
  // Independent midpoint quadrature of (1/2pi) int exp(-8 t^2).
  const int n = 200000;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    double t = -kPi + kTwoPi * (i + 0.5) / n;
    integral += std::exp(-8.0 * t * t);
  }
  integral /= n;
  auto cap = sup_density_bound(0, 1.0);
  CHECK(cap.cap == doctest::Approx(1.0 / integral).epsilon(1e-9));
  CHECK(cap.cap == doctest::Approx(kTwoPi / std::sqrt(kPi / 8)).epsilon(1e-9));
  for (double cb : {0.1, 1.0, 3.0})
    for (int k = 0; k <= 100; ++k) {
      auto c = sup_density_bound(k, cb);
      CHECK(c.cap <= c.c1 * std::sqrt(k + 1.0) * (1 + 1e-12));
    }
}

TEST_CASE("measured densities respect the cap and the Fourier bounds") {
  auto pot = xy_potential(1.0);
  for (int o = 0; o < 100; ++o) {
    Rng rng = make_rng(split_seed(99, o));
    auto orbit = random_orbit(8, rng);
    for (int k = 0; k <= 8; ++k) {
      auto q = chi_density(layer_potential(k, orbit, pot));
      CHECK(q.max() <= sup_density_bound(k, 1.0).cap);
      auto a = fourier(q);
      CHECK(std::abs(a[0] - 1.0) < 1e-10);
      for (double v : q.values()) CHECK(v >= 0.0);
      auto fb = fourier_max_bound(std::max(1.0, q.max()));
      double worst = 0.0;
      for (std::size_t s = 1; s < a.size(); ++s) worst = std::max(worst, std::abs(a[s]));
      CHECK(worst <= fb.sharp + 1e-6);
      CHECK(worst <= fb.lemma);
      CHECK(q.sup_deviation() <= sup_over_grid_sum(a) + 1e-12);
    }
  }
}

TEST_CASE("independence of layer increments on a tiny system") {
  // n = 2, psi on 16 equally spaced values, full Hamiltonian by brute force.
  const int n = 2, states = 16;
  Rng rng = make_rng(3);
  auto o = random_orbit(n, rng);
  auto pot = xy_potential(0.7);
  std::vector<Site> box = Box(n).sites();
  auto energy = [&](const std::array<int, 3>& psi) {
    auto phi = [&](Site x) {
      int k = sup_norm(x);
      return k <= n ? o.angle(x) + kTwoPi * psi[k] / states : o.angle(x);
    };
    double h = 0.0;
    for (Site x : box)
      for (Site e : {Site{1, 0}, Site{0, 1}, Site{-1, 0}, Site{0, -1}}) {
        Site y = x + e;
        bool inside = sup_norm(y) <= n;
        if (inside && !(x < y)) continue;  // count inner bonds once
        h += pot(phi(x) - phi(y));
      }
    return h;
  };
  std::map<std::array<int, 3>, double> chi_law;
  double z = 0.0;
  std::vector<double> w(states * states * states);
  for (int a = 0; a < states; ++a)
    for (int b = 0; b < states; ++b)
      for (int c = 0; c < states; ++c) {
        double e = std::exp(-energy({a, b, c}));
        std::array<int, 3> chi{(a - b + states) % states, (b - c + states) % states, c};
        chi_law[chi] += e;
        z += e;
      }
  std::vector<std::vector<double>> marg(3, std::vector<double>(states, 0.0));
  for (auto& [chi, p] : chi_law) {
    p /= z;
    for (int i = 0; i < 3; ++i) marg[i][chi[i]] += p;
  }
  double tv = 0.0;
  for (auto& [chi, p] : chi_law) tv += std::abs(p - marg[0][chi[0]] * marg[1][chi[1]] * marg[2][chi[2]]);
  CHECK(tv / 2 < 1e-10);
  // And the marginals are the layer densities evaluated on the coarse grid.
  for (int k = 0; k <= n; ++k) {
    auto W = layer_potential(k, o, pot, states);
    auto q = chi_density(W);
    for (int j = 0; j < states; ++j) CHECK(marg[k][j] == doctest::Approx(q.at(j) / states).epsilon(1e-10));
  }
}

TEST_CASE("fourier max bound") {
  CHECK(fourier_max_bound(1.0).sharp == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(fourier_max_bound(1.0).lemma == doctest::Approx(1 - 1.0 / 36));
  CHECK(fourier_max_bound(1.0).lemma == doctest::Approx(0.97222).epsilon(1e-5));
  auto b2 = fourier_max_bound(2.0);
  CHECK(b2.sharp == doctest::Approx(2 / kPi));
  CHECK(b2.sharp <= b2.lemma);
  CHECK(b2.lemma == doctest::Approx(1 - 1.0 / 144));
  CHECK_THROWS_AS(fourier_max_bound(0.9), std::invalid_argument);
}

TEST_CASE("extremal oracle") {
  auto r1 = extremal_fourier_oracle(1.0, 1);
  CHECK(std::abs(r1.value) < 1e-6);
  CHECK(r1.maximizer.sup_deviation() < 1e-12);
  auto r2 = extremal_fourier_oracle(2.0, 1);
  CHECK(std::abs(r2.value - 2 / kPi) < 1e-3);
  CHECK(r2.maximizer.max() <= 2.0 + 1e-12);
  double v1 = extremal_fourier_oracle(2.0, 1, 8192).value;
  for (int s : {2, 5}) CHECK(extremal_fourier_oracle(2.0, s, 8192).value == doctest::Approx(v1).epsilon(1e-4));
  // Matches the sharp closed form for other caps too.
  for (double C : {1.5, 3.0, 10.0})
    CHECK(extremal_fourier_oracle(C, 3, 8192).value == doctest::Approx(fourier_max_bound(C).sharp).epsilon(1e-3));
  CHECK_THROWS(extremal_fourier_oracle(0.5, 1));
  CHECK_THROWS(extremal_fourier_oracle(2.0, 0));
}

TEST_CASE("uniformity bound") {
  CHECK(uniformity_bound(3, 4, 2.0) == doctest::Approx(2.0 * std::pow(4.0 * 5.0, 0.25)));
  const int r = 10000;
  double direct = std::pow(2.0, 0.25);
  double harmonic = 0.0;
  for (int l = 2; l <= r; ++l) {
    direct *= 1 - 1.0 / (36.0 * (l + 1));
    harmonic += 1.0 / (l + 1);
  }
  double v = uniformity_bound(0, r, 1.0);
  CHECK(v == doctest::Approx(direct).epsilon(1e-12));
  CHECK(v == doctest::Approx(std::pow(2.0, 0.25) * std::exp(-harmonic / 36)).epsilon(1e-3));
  const double euler_gamma = 0.57721566490153286;
  CHECK(v * std::pow(r, 1.0 / 36) == doctest::Approx(std::pow(2.0, 0.25) * std::exp((1.5 - euler_gamma) / 36)).epsilon(1e-3));
  CHECK_THROWS(uniformity_bound(3, 3, 1.0));

  std::vector<std::size_t> lengths{8, 16, 32, 64};
  double expect = 1.5 * std::pow(8.0 * 16.0, 0.25) * std::exp(-(1.0 / 32 + 1.0 / 64) / (36 * 2.25));
  CHECK(uniformity_bound_circuits(0, lengths, 1.5) == doctest::Approx(expect));
  CHECK_THROWS(uniformity_bound_circuits(3, lengths, 1.5));
}

TEST_CASE("table export") {
  std::ostringstream os;
  write_density(os, CircleDensity::uniform(4));
  CHECK(os.str().rfind("angle,value\n0,1\n", 0) == 0);
  std::ostringstream of;
  auto a = fourier(CircleDensity::uniform(4));
  write_fourier(of, a);
  CHECK(of.str().rfind("mode,real,imag\n0,1,", 0) == 0);
}
