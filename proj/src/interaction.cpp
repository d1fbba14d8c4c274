#include "spinlab/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <regex>
#include <stdexcept>

#include "spinlab/angle.hpp"
#include "spinlab/fft.hpp"

namespace spinlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& a) {
  double m = *std::max_element(a.begin(), a.end());
  if (!std::isfinite(m)) throw std::runtime_error("integrand overflow in single-site integral");
  double s = 0.0;
  for (double x : a) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<int> degree_ladder(int max_degree) {
  std::vector<int> out;
  for (int d = 1; d <= max_degree; d *= 2) {
    out.push_back(d);
    int mid = d + d / 2;
    if (d >= 2 && mid < 2 * d && mid <= max_degree) out.push_back(mid);
  }
  if (out.empty() || out.back() != max_degree) out.push_back(max_degree);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double TrigPolynomial::operator()(double phi) const {
  if (b.empty()) return 0.0;
  double s = b[0];
  for (std::size_t k = 1; k < b.size(); ++k) s += b[k] * std::cos(static_cast<double>(k) * phi);
  return s;
}

double TrigPolynomial::second_derivative(double phi) const {
  double s = 0.0;
  for (std::size_t k = 1; k < b.size(); ++k) {
    double kk = static_cast<double>(k);
    s -= kk * kk * b[k] * std::cos(kk * phi);
  }
  return s;
}

PairPotential trig_potential(const TrigPolynomial& p, const std::string& name) {
  PairPotential out;
  out.name = name;
  out.eval = [p](double phi) { return p(phi); };
  out.curvature_bound = second_derivative_bound(p);
  out.trig = p;
  return out;
}

PairPotential xy_potential(double J) {
  if (!std::isfinite(J)) throw std::invalid_argument("xy coupling must be finite");
  PairPotential out = trig_potential(TrigPolynomial{{0.0, -J}}, "xy(" + std::to_string(J) + ")");
  out.curvature_bound = std::abs(J);
  return out;
}

PairPotential aizenman_potential(double theta) {
  if (!(theta > 0.0 && theta <= kPi)) throw std::invalid_argument("aizenman cutoff must lie in (0, pi]");
  PairPotential out;
  out.name = "aizenman(" + std::to_string(theta) + ")";
  out.eval = [theta](double phi) {
    // slack of a few ulps so that exact staircase steps stay admissible
    double d = std::abs(wrap_angle(phi));
    return d <= theta * (1.0 + 1e-12) ? -std::cos(d) : kInf;
  };
  out.hard_core = theta;
  return out;
}

PairPotential logsing_potential(double floor) {
  if (!std::isfinite(floor)) throw std::invalid_argument("logsing floor must be finite");
  PairPotential out;
  out.name = "logsing(" + std::to_string(floor) + ")";
  out.eval = [floor](double phi) {
    double d = std::abs(wrap_angle(phi));
    return d > 0.0 ? std::max(std::log(d), floor) : floor;
  };
  return out;
}

PairPotential absval_potential() {
  PairPotential out;
  out.name = "absval";
  out.eval = [](double phi) { return std::abs(wrap_angle(phi)); };
  return out;
}

std::vector<std::string> potential_preset_names() { return {"xy(J)", "aizenman(theta)", "logsing(floor)", "absval"}; }

PairPotential parse_potential(const std::string& spec) {
  static const std::regex call(R"(\s*([a-z]+)\s*(?:\(\s*([-+0-9.eE]+)\s*\))?\s*)");
  std::smatch m;
  if (!std::regex_match(spec, m, call)) throw std::invalid_argument("cannot parse potential '" + spec + "'");
  const std::string name = m[1];
  const bool has_arg = m[2].matched;
  double arg = 0.0;
  if (has_arg) {
    try {
      std::size_t used = 0;
      arg = std::stod(m[2].str(), &used);
      if (used != m[2].str().size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad numeric argument in potential '" + spec + "'");
    }
  }
  if (name == "xy") {
    if (!has_arg) throw std::invalid_argument("xy needs a coupling, e.g. xy(1)");
    return xy_potential(arg);
  }
  if (name == "aizenman") {
    if (!has_arg) throw std::invalid_argument("aizenman needs a cutoff, e.g. aizenman(0.5236)");
    return aizenman_potential(arg);
  }
  if (name == "logsing") return logsing_potential(has_arg ? arg : -30.0);
  if (name == "absval" && !has_arg) return absval_potential();
  throw std::invalid_argument("unknown potential '" + spec + "'");
}

double second_derivative_bound(const TrigPolynomial& p) {
  double s = 0.0;
  for (std::size_t k = 1; k < p.b.size(); ++k) s += static_cast<double>(k * k) * std::abs(p.b[k]);
  return s;
}

SingularDecomposition make_decomposition(const TrigPolynomial& smooth, const PairPotential& bar) {
  SingularDecomposition dec;
  dec.bar = bar;
  dec.smooth = smooth;
  dec.c_bar = second_derivative_bound(smooth);
  dec.method = "given";
  double mx = 0.0;
  const int grid = 4096;
  for (int j = 0; j < grid; ++j) mx = std::max(mx, dec.upsilon(-kPi + kTwoPi * j / grid));
  dec.max_upsilon = mx;
  dec.epsilon = mx;
  return dec;
}

SingularDecomposition decompose(const PairPotential& bar, double eps, const DecomposeOptions& opt) {
  if (!(eps > 0.0)) throw std::invalid_argument("decomposition smallness must be positive");
  const int n = opt.grid;
  if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("verification grid must be a power of two");
  if (opt.max_degree < 1 || opt.max_degree >= n / 2) throw std::invalid_argument("max degree out of range");

  std::vector<double> values(n), cos_table(n);
  for (int j = 0; j < n; ++j) {
    values[j] = bar(-kPi + kTwoPi * j / n);
    if (!std::isfinite(values[j]))
      throw std::invalid_argument("potential '" + bar.name + "' is not finite on the circle; clamp it first");
    cos_table[j] = std::cos(kTwoPi * j / n);
  }
  auto spectrum = real_dft(values);
  // cos(s phi_j) = (-1)^s cos(2 pi s j / n) on phi_j = -pi + 2 pi j / n.
  std::vector<double> cosine(opt.max_degree + 1);
  for (int s = 0; s <= opt.max_degree; ++s) {
    double c = (s % 2 ? -1.0 : 1.0) * spectrum[s].real() / n;
    cosine[s] = (s == 0 ? 1.0 : 2.0) * c;
  }
  auto eval_on_grid = [&](const std::vector<double>& b) {
    std::vector<double> out(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t s = 0; s < b.size(); ++s) {
        double c = cos_table[(s * static_cast<std::size_t>(j)) % static_cast<std::size_t>(n)];
        acc += (s % 2 ? -c : c) * b[s];
      }
      out[j] = acc;
    }
    return out;
  };
  auto sup_error = [&](const std::vector<double>& p) {
    double e = 0.0;
    for (int j = 0; j < n; ++j) e = std::max(e, std::abs(values[j] - p[j]));
    return e;
  };

  for (int d : degree_ladder(opt.max_degree)) {
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<double> b(cosine.begin(), cosine.begin() + d + 1);
      if (pass == 1)
        for (int s = 0; s <= d; ++s) b[s] *= 1.0 - static_cast<double>(s) / (d + 1);
      auto p = eval_on_grid(b);
      double err = sup_error(p);
      if (err > eps / 2) continue;

      SingularDecomposition dec;
      dec.bar = bar;
      dec.epsilon = eps;
      if (err < 1e-12) {
        // Already a trig polynomial up to rounding.
        for (double& c : b)
          if (std::abs(c) < 1e-12) c = 0.0;
        while (b.size() > 1 && b.back() == 0.0) b.pop_back();
        dec.smooth.b = b;
        dec.exact = true;
        dec.method = "exact";
        dec.max_upsilon = 0.0;
      } else {
        double shift = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) shift = std::max(shift, values[j] - p[j]);
        b[0] += shift;
        dec.smooth.b = b;
        dec.method = pass == 0 ? "partial" : "fejer";
        double mx = 0.0;
        for (int j = 0; j < n; ++j) mx = std::max(mx, p[j] + shift - values[j]);
        dec.max_upsilon = mx;
      }
      dec.c_bar = second_derivative_bound(dec.smooth);
      return dec;
    }
  }
  throw std::runtime_error("no trig polynomial of degree <= " + std::to_string(opt.max_degree) +
                           " approximates '" + bar.name + "' within the requested smallness");
}

SingularDecomposition decompose_for_domination(const PairPotential& bar, double eps, const DecomposeOptions& opt) {
  if (!(eps > 0.0)) throw std::invalid_argument("domination density must be positive");
  return decompose(bar, eps / 5.0, opt);
}

double condition_51_ratio(const SingularDecomposition& dec, const std::array<double, 4>& phis, int quad_points) {
  if (quad_points < 8) throw std::invalid_argument("too few quadrature points");
  std::vector<double> a(quad_points), b(quad_points);
  for (int j = 0; j < quad_points; ++j) {
    double t = kTwoPi * j / quad_points;
    double u = 0.0, v = 0.0;
    for (double p : phis) {
      u += dec.smooth(t - p);
      v += dec.upsilon(t - p);
    }
    a[j] = -u;
    b[j] = -u + v;
  }
  return std::exp(log_sum_exp(b) - log_sum_exp(a));
}

namespace {

// Shared table search: neighbour angles restricted to multiples of 2 pi / search
// on a quadrature grid of size quad (a multiple of search).
Condition51Result table_search(const SingularDecomposition& dec, int quad, int search) {
  std::vector<double> utab(quad), vtab(quad);
  for (int j = 0; j < quad; ++j) {
    double t = kTwoPi * j / quad;
    utab[j] = dec.smooth(t);
    vtab[j] = dec.upsilon(t);
    if (!std::isfinite(utab[j]) || !std::isfinite(vtab[j]))
      throw std::runtime_error("integrand overflow: decomposition is not finite on the quadrature grid");
  }
  const int stride = quad / search;
  Condition51Result best;
  best.ratio = -1.0;
  std::vector<double> a(quad), b(quad);
  for (int m2 = 0; m2 < search; ++m2)
    for (int m3 = m2; m3 < search; ++m3)
      for (int m4 = m3; m4 < search; ++m4) {
        const int sh[4] = {0, m2 * stride, m3 * stride, m4 * stride};
        for (int j = 0; j < quad; ++j) {
          double u = 0.0, v = 0.0;
          for (int i = 0; i < 4; ++i) {
            int k = (j - sh[i]) % quad;
            if (k < 0) k += quad;
            u += utab[k];
            v += vtab[k];
          }
          a[j] = -u;
          b[j] = -u + v;
        }
        double r = std::exp(log_sum_exp(b) - log_sum_exp(a));
        if (r > best.ratio) {
          best.ratio = r;
          best.worst = {0.0, kTwoPi * m2 / search, kTwoPi * m3 / search, kTwoPi * m4 / search};
        }
      }
  return best;
}

}  // namespace

Condition51Result verify_condition_51(const SingularDecomposition& dec, int quad_points, int search_points) {
  if (search_points < 1 || quad_points < search_points || quad_points % search_points != 0)
    throw std::invalid_argument("quadrature grid must be a multiple of the search grid");
  if (dec.exact) return Condition51Result{};
  return table_search(dec, quad_points, search_points);
}

double discrete_condition_51(const SingularDecomposition& dec, int states) {
  if (states < 2) throw std::invalid_argument("need at least two spin states");
  if (dec.exact) return 1.0;
  return table_search(dec, states, states).ratio;
}

DominationEpsilon domination_epsilon(double ratio) {
  if (!(ratio >= 1.0 - 1e-12)) throw std::invalid_argument("condition ratio must be at least 1");
  DominationEpsilon out;
  out.epsilon = std::max(0.0, ratio - 1.0);
  out.warning = out.epsilon >= 1.0;
  return out;
}

ToyDomination enumerate_domination(const SingularDecomposition& dec, int states, int side) {
  if (states < 2 || side < 2 || side > 3) throw std::invalid_argument("toy system must have side 2 or 3");
  std::size_t row_states = 1;
  for (int i = 0; i < side; ++i) row_states *= static_cast<std::size_t>(states);

  // Bond list: horizontal (r, c)-(r, c+1) then vertical (r, c)-(r+1, c).
  struct ToyBond { int r, c; bool vertical; };
  std::vector<ToyBond> bonds;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c + 1 < side; ++c) bonds.push_back({r, c, false});
  for (int r = 0; r + 1 < side; ++r)
    for (int c = 0; c < side; ++c) bonds.push_back({r, c, true});
  const std::size_t nb = bonds.size();
  if (nb > 20) throw std::invalid_argument("too many bonds to enumerate");

  std::vector<double> closed(states * states), open(states * states);
  for (int a = 0; a < states; ++a)
    for (int b = 0; b < states; ++b) {
      double d = kTwoPi * (a - b) / states;
      double base = std::exp(-dec.smooth(d));
      closed[a * states + b] = base;
      open[a * states + b] = base * std::expm1(dec.upsilon(d));
    }

  std::vector<std::size_t> power(side + 1, 1);
  for (int i = 1; i <= side; ++i) power[i] = power[i - 1] * static_cast<std::size_t>(states);
  auto digit = [&](std::size_t cfg, int c) { return static_cast<int>((cfg / power[c]) % states); };

  auto partition = [&](std::size_t subset) {
    auto weight = [&](std::size_t bi, int a, int b) {
      const auto& w = (subset >> bi) & 1 ? open : closed;
      return w[a * states + b];
    };
    auto bond_index = [&](int r, int c, bool vertical) {
      for (std::size_t i = 0; i < nb; ++i)
        if (bonds[i].r == r && bonds[i].c == c && bonds[i].vertical == vertical) return i;
      return nb;
    };
    std::vector<double> f(row_states, 1.0), g(row_states);
    auto apply_row = [&](int r) {
      for (int c = 0; c + 1 < side; ++c) {
        std::size_t bi = bond_index(r, c, false);
        for (std::size_t cfg = 0; cfg < row_states; ++cfg) f[cfg] *= weight(bi, digit(cfg, c), digit(cfg, c + 1));
      }
    };
    apply_row(0);
    for (int r = 1; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        std::size_t bi = bond_index(r - 1, c, true);
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t cfg = 0; cfg < row_states; ++cfg) {
          int a = digit(cfg, c);
          std::size_t rest = cfg - static_cast<std::size_t>(a) * power[c];
          for (int b = 0; b < states; ++b) g[rest + b * power[c]] += f[cfg] * weight(bi, a, b);
        }
        f.swap(g);
      }
      apply_row(r);
    }
    double z = 0.0;
    for (double x : f) z += x;
    return z;
  };

  const std::size_t subsets = std::size_t{1} << nb;
  std::vector<double> z(subsets);
  for (std::size_t s = 0; s < subsets; ++s) z[s] = partition(s);

  ToyDomination out;
  out.bonds = nb;
  for (std::size_t bi = 0; bi < nb; ++bi)
    for (std::size_t s = 0; s < subsets; ++s) {
      if ((s >> bi) & 1) continue;
      double with = z[s | (std::size_t{1} << bi)];
      double total = z[s] + with;
      if (!(total > 0.0)) continue;  // conditioning event of probability zero
      double p = with / total;
      out.max_conditional = std::max(out.max_conditional, p);
      out.min_conditional = std::min(out.min_conditional, p);
      ++out.conditionings;
    }
  return out;
}

void write_coefficients(std::ostream& os, const TrigPolynomial& p) {
  os << "index,value\n";
  os.precision(17);
  for (std::size_t s = 0; s < p.b.size(); ++s) os << s << ',' << p.b[s] << '\n';
}

}  // namespace spinlab
