#include "spinlab/longrange_walk.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <regex>
#include <stdexcept>

#include "spinlab/fft.hpp"

namespace spinlab {

namespace {

constexpr double kPi = std::numbers::pi;

// 4 sin^2 summed over shells is stable for small angles; the rotation is
// resynchronized every so often to keep the drift at the rounding level.
struct HalfAngleRotor {
  double c, s, dc, ds, step;
  int k = 0;
  explicit HalfAngleRotor(double t) : c(1.0), s(0.0), dc(std::cos(t / 2)), ds(std::sin(t / 2)), step(t / 2) {}
  double next() {
    ++k;
    if (k % 256 == 0) {
      c = std::cos(k * step);
      s = std::sin(k * step);
    } else {
      const double nc = c * dc - s * ds;
      s = s * dc + c * ds;
      c = nc;
    }
    return s;
  }
};

}  // namespace

double LatticeField::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

LatticeField convolve_fields(const LatticeField& a, const LatticeField& b, int crop_radius) {
  const auto full = linear_convolve_2d(a.values, a.side(), a.side(), b.values, b.side(), b.side());
  const int fr = a.radius + b.radius;
  const int fs = 2 * fr + 1;
  const int r = std::min(crop_radius, fr);
  LatticeField out(r);
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      double v = full[static_cast<std::size_t>(i + fr) * fs + static_cast<std::size_t>(j + fr)];
      // FFT round-off can leave tiny negative values in probability tables
      out.ref({i, j}) = std::abs(v) < 1e-300 ? 0.0 : std::max(v, 0.0);
    }
  return out;
}

CouplingKernel CouplingKernel::from_shells(std::string name, std::vector<double> weight, double raw_tail) {
  if (weight.size() < 2) throw std::invalid_argument("kernel needs at least one shell");
  weight[0] = 0.0;
  double total = 0.0;
  for (std::size_t r = 1; r < weight.size(); ++r) {
    if (!std::isfinite(weight[r]) || weight[r] < 0) throw std::invalid_argument("kernel weights must be finite and nonnegative");
    total += 8.0 * static_cast<double>(r) * weight[r];
  }
  if (!(total > 0) || !std::isfinite(total)) throw std::invalid_argument("zero or non-summable kernel");
  CouplingKernel k;
  k.name_ = std::move(name);
  k.shell_ = true;
  k.radius_ = static_cast<int>(weight.size()) - 1;
  k.tail_ = raw_tail / (total + raw_tail);
  k.shell_w_ = std::move(weight);
  k.shell_mass_.assign(k.shell_w_.size(), 0.0);
  for (std::size_t r = 1; r < k.shell_w_.size(); ++r) {
    k.shell_w_[r] /= total;
    k.shell_mass_[r] = 8.0 * static_cast<double>(r) * k.shell_w_[r];
  }
  return k;
}

CouplingKernel CouplingKernel::from_dense(std::string name, LatticeField raw, bool keep_origin, double raw_tail) {
  const int R = raw.radius;
  double vmax = 0.0;
  for (double v : raw.values) {
    if (!std::isfinite(v) || v < 0) throw std::invalid_argument("kernel weights must be finite and nonnegative");
    vmax = std::max(vmax, v);
  }
  if (!keep_origin) raw.ref({0, 0}) = 0.0;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j) {
      const double a = raw.at({i, j}), b = raw.at({-i, -j});
      if (std::abs(a - b) > 1e-12 * vmax) throw std::invalid_argument("kernel asymmetry exceeds 1e-12");
    }
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j)
      if (std::make_pair(i, j) < std::make_pair(-i, -j)) {
        const double m = 0.5 * (raw.at({i, j}) + raw.at({-i, -j}));
        raw.ref({i, j}) = m;
        raw.ref({-i, -j}) = m;
      }
  const double total = raw.sum();
  if (!(total > 0) || !std::isfinite(total)) throw std::invalid_argument("zero or non-summable kernel");
  // trim empty outer shells
  int support = 0;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j)
      if (raw.at({i, j}) > 0) support = std::max(support, sup_norm({i, j}));
  CouplingKernel k;
  k.name_ = std::move(name);
  k.shell_ = false;
  k.radius_ = support;
  k.tail_ = raw_tail / (total + raw_tail);
  k.dense_ = LatticeField(support);
  k.shell_mass_.assign(static_cast<std::size_t>(support) + 1, 0.0);
  for (int i = -support; i <= support; ++i)
    for (int j = -support; j <= support; ++j) {
      const double v = raw.at({i, j}) / total;
      k.dense_.ref({i, j}) = v;
      k.shell_mass_[static_cast<std::size_t>(sup_norm({i, j}))] += v;
    }
  return k;
}

double CouplingKernel::operator()(Site x) const {
  const int r = sup_norm(x);
  if (r > radius_) return 0.0;
  return shell_ ? shell_w_[static_cast<std::size_t>(r)] : dense_.at(x);
}

double CouplingKernel::shell_value(int r) const {
  if (!shell_) throw std::logic_error("not a shell kernel");
  return r >= 1 && r <= radius_ ? shell_w_[static_cast<std::size_t>(r)] : 0.0;
}

double CouplingKernel::mass_beyond(int r) const {
  double s = 0.0;
  for (int q = radius_; q > std::max(r, -1); --q) s += shell_mass_[static_cast<std::size_t>(q)];
  return s;
}

LatticeField CouplingKernel::dense() const {
  if (!shell_) return dense_;
  LatticeField f(radius_);
  for (int i = -radius_; i <= radius_; ++i)
    for (int j = -radius_; j <= radius_; ++j) f.ref({i, j}) = (*this)({i, j});
  return f;
}

double CouplingKernel::one_minus_char(double t1, double t2) const {
  if (shell_) {
    // B_r = sum over the box of radius r of (1 - cos), written through
    // E_r(t) = sum_{|x| <= r} (1 - cos(t x)) so that no large terms cancel.
    HalfAngleRotor ra(t1), rb(t2);
    double ea = 0.0, eb = 0.0, prev = 0.0, acc = 0.0;
    for (int r = 1; r <= radius_; ++r) {
      const double sa = ra.next(), sb = rb.next();
      ea += 4.0 * sa * sa;
      eb += 4.0 * sb * sb;
      const double box = (2.0 * r + 1.0) * (ea + eb) - ea * eb;
      acc += shell_w_[static_cast<std::size_t>(r)] * (box - prev);
      prev = box;
    }
    return acc;
  }
  double acc = 0.0;
  const int R = radius_;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j) {
      const double v = dense_.at({i, j});
      if (v == 0.0) continue;
      const double s = std::sin(0.5 * (t1 * i + t2 * j));
      acc += v * 2.0 * s * s;
    }
  return acc;
}

double CouplingKernel::char_function(double t1, double t2) const { return 1.0 - one_minus_char(t1, t2); }

CouplingKernel normalize(const std::string& name, const LatticeField& raw) {
  return CouplingKernel::from_dense(name, raw, false);
}

CouplingKernel nn_kernel() {
  LatticeField f(1);
  for (Site e : kUnitSteps) f.ref(e) = 1.0;
  return CouplingKernel::from_dense("nn", f);
}

namespace {

CouplingKernel shell_preset(const std::string& name, int radius, const std::function<double(double)>& w) {
  if (radius < 1) throw std::invalid_argument("truncation radius must be positive");
  std::vector<double> weight(static_cast<std::size_t>(radius) + 1, 0.0);
  for (int r = 1; r <= radius; ++r) weight[static_cast<std::size_t>(r)] = w(static_cast<double>(r));
  // tail beyond the radius by the integral of 8 r w(r) from R + 1/2
  boost::math::quadrature::exp_sinh<double> integrator;
  const double a = radius + 0.5;
  const double tail = integrator.integrate([&](double t) { return 8.0 * (a + t) * w(a + t); }, 0.0,
                                           std::numeric_limits<double>::infinity());
  return CouplingKernel::from_shells(name, std::move(weight), tail);
}

// Smallest x with log_j x >= 1 for j = 2..p, i.e. the exp tower of height p.
double iterated_log_threshold(int p) {
  double t = 1.0;
  for (int j = 1; j <= p; ++j) {
    t = std::exp(t);
    if (!std::isfinite(t)) return t;
  }
  return t;
}

}  // namespace

CouplingKernel powerlaw_kernel(double s, int radius) {
  if (!(s > 2.0)) throw std::invalid_argument("power-law exponent must exceed 2");
  char buf[64];
  std::snprintf(buf, sizeof buf, "powerlaw(%g)", s);
  return shell_preset(buf, radius, [s](double r) { return std::pow(r, -s); });
}

CouplingKernel logcorr_kernel(int p, int radius, double eps) {
  if (p < 2) throw std::invalid_argument("logcorr needs p >= 2");
  if (eps < 0) throw std::invalid_argument("logcorr eps must be nonnegative");
  const double floor_r = iterated_log_threshold(p);
  char buf[64];
  if (eps > 0)
    std::snprintf(buf, sizeof buf, "logcorr_eps(%d,%g)", p, eps);
  else
    std::snprintf(buf, sizeof buf, "logcorr(%d)", p);
  return shell_preset(buf, radius, [p, eps, floor_r](double r) {
    double x = std::max(r, floor_r);
    double prod = 1.0, l = std::log(x);
    for (int j = 2; j <= p; ++j) {
      l = std::log(l);
      prod *= (j == p && eps > 0) ? std::pow(l, 1.0 + eps) : l;
    }
    return std::pow(r, -4.0) * prod;
  });
}

CouplingKernel parse_kernel(const std::string& spec, int radius) {
  static const std::regex nn(R"(\s*nn\s*)");
  static const std::regex pl(R"(\s*powerlaw\(\s*([-+0-9.eE]+)\s*\)\s*)");
  static const std::regex lc(R"(\s*logcorr\(\s*([0-9]+)\s*\)\s*)");
  static const std::regex lce(R"(\s*logcorr_eps\(\s*([0-9]+)\s*,\s*([-+0-9.eE]+)\s*\)\s*)");
  std::smatch m;
  try {
    if (std::regex_match(spec, m, nn)) return nn_kernel();
    if (std::regex_match(spec, m, pl)) return powerlaw_kernel(std::stod(m[1]), radius);
    if (std::regex_match(spec, m, lc)) return logcorr_kernel(std::stoi(m[1]), radius);
    if (std::regex_match(spec, m, lce)) {
      const double eps = std::stod(m[2]);
      if (!(eps > 0)) throw std::invalid_argument("logcorr_eps needs eps > 0");
      return logcorr_kernel(std::stoi(m[1]), radius, eps);
    }
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("kernel parameter out of range: " + spec);
  }
  throw std::invalid_argument("unknown kernel: " + spec);
}

std::vector<std::string> kernel_preset_names() { return {"nn", "powerlaw(s)", "logcorr(p)", "logcorr_eps(p,eps)"}; }

LatticeField n_step(const CouplingKernel& k, int n, int crop_radius) {
  if (n < 0) throw std::invalid_argument("step count must be nonnegative");
  LatticeField cur(0);
  cur.values[0] = 1.0;
  const LatticeField one = k.dense();
  for (int i = 0; i < n; ++i) cur = convolve_fields(cur, one, crop_radius);
  return cur;
}

ConnectivityBound connectivity_bound(const CouplingKernel& k, double eps, double tol, int crop_radius) {
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("eps must lie in (0, 1)");
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  ConnectivityBound out;
  out.c_bound = eps / (1 - eps);
  int N = 1;
  while (std::pow(eps, N + 1) / (1 - eps) > tol) ++N;
  out.terms = N;
  out.series_error = std::pow(eps, N + 1) / (1 - eps);
  const LatticeField one = k.dense();
  LatticeField cur = one;
  LatticeField d(std::min(crop_radius, N * k.radius()));
  double weight = eps, expected = 0.0;
  for (int m = 1; m <= N; ++m) {
    if (m > 1) cur = convolve_fields(cur, one, d.radius);
    expected += weight;
    for (int i = -cur.radius; i <= cur.radius; ++i)
      for (int j = -cur.radius; j <= cur.radius; ++j)
        if (d.contains({i, j})) d.ref({i, j}) += weight * cur.at({i, j});
    weight *= eps;
  }
  out.total = d.sum();
  out.crop_loss = std::max(0.0, expected - out.total);
  out.d = std::move(d);
  return out;
}

CouplingKernel y_kernel(const CouplingKernel& k, double eps, double tol, int crop_radius) {
  auto cb = connectivity_bound(k, eps, tol, crop_radius);
  char buf[64];
  std::snprintf(buf, sizeof buf, "y(%s,%g)", k.name().c_str(), eps);
  return CouplingKernel::from_dense(buf, std::move(cb.d), true, cb.series_error + cb.crop_loss);
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Recurrent: return "recurrent";
    case Verdict::Transient: return "transient";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::vector<double> default_ladder(const CouplingKernel& k) {
  const double floor_rho = k.tail_mass() < 1e-9 ? std::ldexp(1.0, -12) : 8.0 / k.radius();
  std::vector<double> rho;
  for (double r = 0.5; r >= floor_rho * (1 - 1e-12); r *= 0.5) rho.push_back(r);
  while (rho.size() < 4) rho.push_back(rho.back() * 0.5);
  return rho;
}

namespace {

bool dihedral_symmetric(const CouplingKernel& k) {
  if (k.is_shell()) return true;
  const int R = k.radius();
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j) {
      const double v = k({i, j});
      if (std::abs(v - k({j, i})) > 1e-14 || std::abs(v - k({-i, j})) > 1e-14) return false;
    }
  return true;
}

}  // namespace

RecurrenceReport recurrence_classify(const CouplingKernel& k, const std::vector<double>& ladder) {
  if (ladder.size() < 4) throw std::invalid_argument("ladder needs at least 4 rungs");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0) || ladder[i] >= kPi) throw std::invalid_argument("ladder values must lie in (0, pi)");
    if (i > 0 && !(ladder[i] < ladder[i - 1])) throw std::invalid_argument("ladder must be decreasing");
  }
  using boost::math::quadrature::gauss_kronrod;
  RecurrenceReport rep;
  rep.rho = ladder;
  // Polar coordinates with u = log r: the integrand r^2 / (1 - phi) tends to a
  // constant at the origin. With dihedral symmetry one octant suffices,
  // otherwise the half plane (phi is even).
  const bool octant = dihedral_symmetric(k);
  const double a_hi = octant ? kPi / 4 : kPi;
  const double mult = octant ? 8.0 : 2.0;
  const double tol = 1e-9;
  bool periodic = false;
  auto integrand = [&](double a, double u) {
    const double r = std::exp(u);
    const double d = k.one_minus_char(r * std::cos(a), r * std::sin(a));
    if (!(d > 1e-13)) {
      periodic = true;
      return 0.0;
    }
    return r * r / d;
  };
  auto panel = [&](const std::function<double(double)>& u_lo, const std::function<double(double)>& u_hi) {
    auto outer = [&](double a) {
      return gauss_kronrod<double, 31>::integrate([&](double u) { return integrand(a, u); }, u_lo(a), u_hi(a), 12,
                                                  tol);
    };
    return mult * gauss_kronrod<double, 31>::integrate(outer, 0.0, a_hi, 12, tol);
  };
  // outer region: from the first rung to the boundary of the square
  double I = panel([&](double) { return std::log(ladder[0]); },
                   [&](double a) { return std::log(kPi / std::max(std::abs(std::cos(a)), std::abs(std::sin(a)))); });
  rep.integral.push_back(I);
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    const double lo = std::log(ladder[i]), hi = std::log(ladder[i - 1]);
    I += panel([lo](double) { return lo; }, [hi](double) { return hi; });
    rep.integral.push_back(I);
  }
  // zeros of 1 - phi off the origin sit at rational points with small denominators
  for (int q = 2; q <= 12 && !periodic; ++q)
    for (int a = 0; a < q && !periodic; ++a)
      for (int b = 0; b < q; ++b) {
        if (a == 0 && b == 0) continue;
        if (k.one_minus_char(2 * kPi * a / q, 2 * kPi * b / q) < 1e-10) {
          periodic = true;
          break;
        }
      }
  rep.periodic = periodic;
  const std::size_t n = ladder.size();
  // least squares I = a + b log(1/rho)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(1.0 / ladder[i]), y = rep.integral[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  const double det = dn * sxx - sx * sx;
  rep.fit_slope = (dn * sxy - sx * sy) / det;
  rep.fit_intercept = (sy - rep.fit_slope * sx) / dn;
  double ss = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = rep.fit_intercept + rep.fit_slope * std::log(1.0 / ladder[i]);
    const double res = rep.integral[i] - fit;
    ss += res * res;
    worst = std::max(worst, std::abs(res) / rep.integral[i]);
  }
  rep.fit_residual = worst;
  rep.slope_error = n > 2 ? std::sqrt(ss / (dn - 2) * dn / det) : 0.0;
  rep.last_increment = (rep.integral[n - 1] - rep.integral[n - 2]) / rep.integral[n - 1];

  if (periodic) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "1 - phi vanishes away from the origin (periodic walk)";
  } else if (rep.fit_residual < 0.02 && rep.fit_slope > 0 && rep.fit_slope > 3 * rep.slope_error) {
    rep.verdict = Verdict::Recurrent;
    rep.note = "integral grows like log(1/rho)";
  } else if (rep.last_increment < 0.005) {
    rep.verdict = Verdict::Transient;
    rep.note = "integral converges along the ladder";
  } else {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "neither log growth nor convergence resolved";
  }
  return rep;
}

RecurrenceReport recurrence_classify(const CouplingKernel& k) { return recurrence_classify(k, default_ladder(k)); }

}  // namespace spinlab
