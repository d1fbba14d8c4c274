#include "spinlab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "spinlab/angle.hpp"

namespace spinlab {

namespace {

constexpr double kInfD = std::numeric_limits<double>::infinity();

bool interior(Site x, int n) { return sup_norm(x) <= n; }

double hard_core_slack(double theta) { return theta * (1.0 + 1e-12); }

std::size_t state_of(double angle, int states) {
  double step = kTwoPi / states;
  long j = std::lround(angle / step);
  j %= states;
  if (j < 0) j += states;
  return static_cast<std::size_t>(j);
}

double state_angle(std::size_t j, int states) { return wrap_angle(kTwoPi * static_cast<double>(j) / states); }

}  // namespace

// ---------------------------------------------------------------------------
// Boundary conditions

BoundaryCondition BoundaryCondition::fixed(double value) {
  BoundaryCondition bc;
  bc.kind = BcKind::Fixed;
  bc.value = wrap_angle(value);
  return bc;
}

BoundaryCondition BoundaryCondition::free() { return {}; }

BoundaryCondition BoundaryCondition::staircase(int k, double sigma) {
  if (k < 1) throw std::invalid_argument("staircase needs k >= 1");
  BoundaryCondition bc;
  bc.kind = BcKind::Staircase;
  bc.k = k;
  bc.sigma = sigma;
  return bc;
}

BoundaryCondition BoundaryCondition::smeared(int k, double delta, double sigma) {
  if (!(delta >= 0.0 && delta <= kPi)) throw std::invalid_argument("smearing half-width must lie in [0, pi]");
  BoundaryCondition bc = staircase(k, sigma);
  bc.kind = BcKind::Smeared;
  bc.delta = delta;
  return bc;
}

double BoundaryCondition::theta_k() const { return kTwoPi / k; }

double BoundaryCondition::centre(Site y) const {
  switch (kind) {
    case BcKind::Fixed: return value;
    case BcKind::Free: return 0.0;
    default: return wrap_angle(sigma * y.x2 * theta_k());
  }
}

std::string BoundaryCondition::describe() const {
  char buf[96];
  switch (kind) {
    case BcKind::Fixed: std::snprintf(buf, sizeof buf, "fixed(%g)", value); break;
    case BcKind::Free: std::snprintf(buf, sizeof buf, "free"); break;
    case BcKind::Staircase: std::snprintf(buf, sizeof buf, "staircase(%d,%g)", k, sigma); break;
    case BcKind::Smeared: std::snprintf(buf, sizeof buf, "smeared(%d,%g,%g)", k, delta, sigma); break;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Configurations and energies

SpinConfiguration::SpinConfiguration(int n_) : n(n_) {
  if (n_ < 0) throw std::invalid_argument("box radius must be nonnegative");
  angle.assign(Box(n_ + 1).size(), 0.0);
}

double SpinConfiguration::at(Site x) const { return angle[Box(n + 1).index(x)]; }
double& SpinConfiguration::at(Site x) { return angle[Box(n + 1).index(x)]; }

bool SpinSystem::live(Site x) const {
  if (!interior(x, n)) return false;
  return active.empty() || active[Box(n).index(x)] != 0;
}

std::vector<Site> SpinSystem::live_sites() const {
  if (!active.empty() && active.size() != Box(n).size()) throw std::invalid_argument("active mask has the wrong size");
  std::vector<Site> out;
  for (Site x : Box(n).sites())
    if (live(x)) out.push_back(x);
  return out;
}

SpinConfiguration centred_configuration(const SpinSystem& sys, double fill) {
  SpinConfiguration cfg(sys.n);
  Box outer(sys.n + 1);
  for (std::size_t i = 0; i < outer.size(); ++i) {
    Site s = outer.site(i);
    cfg.angle[i] = sys.live(s) ? wrap_angle(fill) : sys.bc.centre(s);
  }
  return cfg;
}

double local_energy(const SpinConfiguration& cfg, const SpinSystem& sys, Site x, double angle) {
  double e = 0.0;
  bool free_bc = sys.free();
  for (Site s : kUnitSteps) {
    Site y = x + s;
    if (!sys.live(y) && free_bc) continue;
    e += sys.pot(wrap_angle(angle - cfg.at(y)));
  }
  return e;
}

namespace {

// Visits each bond with an end in the box once: f(x, y) with x interior.
template <class F>
void for_each_bond(const SpinSystem& sys, F&& f) {
  bool free_bc = sys.free();
  for (Site x : sys.live_sites()) {
    for (Site s : kUnitSteps) {
      Site y = x + s;
      if (sys.live(y)) {
        if (y < x) continue;
      } else if (free_bc) {
        continue;
      }
      f(x, y);
    }
  }
}

}  // namespace

double total_energy(const SpinConfiguration& cfg, const SpinSystem& sys) {
  double e = 0.0;
  for_each_bond(sys, [&](Site x, Site y) { e += sys.pot(wrap_angle(cfg.at(x) - cfg.at(y))); });
  return std::isnan(e) ? kInfD : e;
}

std::size_t hard_core_violations(const SpinConfiguration& cfg, const SpinSystem& sys) {
  if (!sys.pot.hard_core) return 0;
  double cut = hard_core_slack(*sys.pot.hard_core);
  std::size_t bad = 0;
  for_each_bond(sys, [&](Site x, Site y) {
    if (circle_distance(cfg.at(x), cfg.at(y)) > cut) ++bad;
  });
  return bad;
}

SpinConfiguration rotated(const SpinConfiguration& cfg, double psi) {
  SpinConfiguration out = cfg;
  for (double& a : out.angle) a = wrap_angle(a + psi);
  return out;
}

// ---------------------------------------------------------------------------
// Metropolis

std::size_t metropolis_sweep(SpinConfiguration& cfg, const SpinSystem& sys, const Proposal& prop, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = sys.n;
  const std::ptrdiff_t side = 2 * n + 3;
  const std::ptrdiff_t nb[4] = {side, 1, -side, -1};
  Box outer(n + 1);
  // which sites of the extended box enter the energy of a live neighbour
  std::vector<char> live(outer.size(), 0), coupled(outer.size(), 0);
  for (std::size_t i = 0; i < outer.size(); ++i) {
    live[i] = sys.live(outer.site(i)) ? 1 : 0;
    coupled[i] = live[i] || !sys.free();
  }
  const auto& U = sys.pot.eval;
  // b0 + b1 cos: the energy change only needs the neighbours' cos and sin sums
  const bool cosine = sys.pot.trig && sys.pot.trig->degree() <= 1;
  const double b1 = cosine && sys.pot.trig->degree() == 1 ? sys.pot.trig->b[1] : 0.0;
  std::vector<double> cv, sv;
  if (cosine) {
    cv.resize(outer.size());
    sv.resize(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) {
      cv[i] = std::cos(cfg.angle[i]);
      sv[i] = std::sin(cfg.angle[i]);
    }
  }
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    if (!live[i]) continue;
    double old = cfg.angle[i];
    double cand;
    if (sys.states > 0) {
      auto s = static_cast<std::size_t>(sys.states);
      std::size_t j = state_of(old, sys.states);
      if (unit(rng) < prop.refresh) {
        j = std::uniform_int_distribution<std::size_t>(0, s - 1)(rng);
      } else {
        j = (j + (unit(rng) < 0.5 ? 1 : s - 1)) % s;
      }
      cand = state_angle(j, sys.states);
    } else if (unit(rng) < prop.refresh) {
      cand = wrap_angle(kTwoPi * unit(rng) - kPi);
    } else {
      cand = wrap_angle(old + prop.width * gauss(rng));
    }
    if (cosine) {
      double C = 0.0, S = 0.0;
      for (std::ptrdiff_t d : nb) {
        auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + d);
        if (!coupled[j]) continue;
        C += cv[j];
        S += sv[j];
      }
      double cc = std::cos(cand), sc = std::sin(cand);
      double d = b1 * ((cc - cv[i]) * C + (sc - sv[i]) * S);
      if (d <= 0.0 || unit(rng) < std::exp(-d)) {
        cfg.angle[i] = cand;
        cv[i] = cc;
        sv[i] = sc;
        ++accepted;
      }
      continue;
    }
    double e_new = 0.0, e_old = 0.0;
    for (std::ptrdiff_t d : nb) {
      auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + d);
      if (!coupled[j]) continue;
      double a = cfg.angle[j];
      e_new += U(wrap_angle(cand - a));
      e_old += U(wrap_angle(old - a));
    }
    if (!std::isfinite(e_new)) continue;
    double d = e_new - e_old;
    if (d <= 0.0 || !std::isfinite(e_old) || unit(rng) < std::exp(-d)) {
      cfg.angle[i] = cand;
      ++accepted;
    }
  }
  return accepted;
}

std::vector<double> discrete_site_kernel(const SpinConfiguration& cfg, const SpinSystem& sys, Site x,
                                         const Proposal& prop) {
  if (sys.states <= 0) throw std::invalid_argument("discrete kernel needs discrete spins");
  auto s = static_cast<std::size_t>(sys.states);
  std::size_t j0 = state_of(cfg.at(x), sys.states);
  double e_old = local_energy(cfg, sys, x, cfg.at(x));
  std::vector<double> q(s, prop.refresh / static_cast<double>(s));
  q[(j0 + 1) % s] += 0.5 * (1.0 - prop.refresh);
  q[(j0 + s - 1) % s] += 0.5 * (1.0 - prop.refresh);
  std::vector<double> row(s, 0.0);
  double moved = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    if (j == j0) continue;
    double e_new = local_energy(cfg, sys, x, state_angle(j, sys.states));
    double a = std::isfinite(e_new) ? std::min(1.0, std::exp(-(e_new - e_old))) : 0.0;
    row[j] = q[j] * a;
    moved += row[j];
  }
  row[j0] = 1.0 - moved;
  return row;
}

double tune_width(SpinConfiguration& cfg, const SpinSystem& sys, Proposal prop, Rng& rng, std::size_t rounds,
                  std::size_t sweeps_per_round) {
  if (sys.states > 0) return prop.width;
  double sites = static_cast<double>(sys.live_sites().size());
  for (std::size_t r = 0; r < rounds; ++r) {
    std::size_t acc = 0;
    for (std::size_t s = 0; s < sweeps_per_round; ++s) acc += metropolis_sweep(cfg, sys, prop, rng);
    double rate = static_cast<double>(acc) / (sites * static_cast<double>(sweeps_per_round));
    prop.width = std::clamp(prop.width * std::exp(2.0 * (rate - 0.5)), 1e-9, kTwoPi);
  }
  return prop.width;
}

// ---------------------------------------------------------------------------
// Chains

const Estimate& ChainStats::estimate(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return estimates[i];
  throw std::invalid_argument("no observable named " + name);
}

const std::vector<double>& ChainStats::trace(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return traces[i];
  throw std::invalid_argument("no observable named " + name);
}

namespace {

ChainStats run_chain_hooked(SpinConfiguration& cfg, const SpinSystem& sys, const std::vector<NamedObservable>& obs,
                            const ChainOptions& opt, std::uint64_t seed,
                            const std::function<void(const SpinConfiguration&)>& hook) {
  if (cfg.n != sys.n) throw std::invalid_argument("configuration and system radii differ");
  if (opt.batches < 16) throw std::invalid_argument("error bars need at least 16 batches");
  if (opt.sweeps < opt.batches) throw std::invalid_argument("fewer recorded sweeps than batches");
  if (opt.global_rotation && !sys.free()) throw std::invalid_argument("global rotations need free boundary conditions");
  if (!std::isfinite(total_energy(cfg, sys))) throw std::invalid_argument("initial configuration has infinite energy");

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Proposal prop = opt.proposal;
  if (opt.tune) prop.width = tune_width(cfg, sys, prop, rng);

  auto rotate_all = [&]() {
    double psi = sys.states > 0
                     ? kTwoPi * static_cast<double>(std::uniform_int_distribution<int>(0, sys.states - 1)(rng)) /
                           sys.states
                     : kTwoPi * unit(rng);
    for (Site x : sys.live_sites()) cfg.at(x) = wrap_angle(cfg.at(x) + psi);
  };

  for (std::size_t s = 0; s < opt.burn_in; ++s) {
    metropolis_sweep(cfg, sys, prop, rng);
    if (opt.global_rotation) rotate_all();
  }

  ChainStats st;
  st.seed = seed;
  st.sweeps = opt.sweeps;
  st.width = prop.width;
  for (const auto& o : obs) {
    st.names.push_back(o.name);
    st.traces.emplace_back();
    st.traces.back().reserve(opt.sweeps);
  }
  std::size_t accepted = 0;
  for (std::size_t s = 0; s < opt.sweeps; ++s) {
    accepted += metropolis_sweep(cfg, sys, prop, rng);
    if (opt.global_rotation) rotate_all();
    st.violations += hard_core_violations(cfg, sys);
    for (std::size_t i = 0; i < obs.size(); ++i) st.traces[i].push_back(obs[i].f(cfg));
    if (hook) hook(cfg);
  }
  st.acceptance = static_cast<double>(accepted) /
                  (static_cast<double>(sys.live_sites().size()) * static_cast<double>(opt.sweeps));
  for (const auto& t : st.traces) st.estimates.push_back(batch_means(t, opt.batches));
  return st;
}

}  // namespace

ChainStats run_chain(SpinConfiguration& cfg, const SpinSystem& sys, const std::vector<NamedObservable>& obs,
                     const ChainOptions& opt, std::uint64_t seed) {
  return run_chain_hooked(cfg, sys, obs, opt, seed, {});
}

Observable energy_observable(const SpinSystem& sys) {
  return [sys](const SpinConfiguration& c) { return total_energy(c, sys); };
}

Observable cos_at(Site x, double psi) {
  return [x, psi](const SpinConfiguration& c) { return std::cos(c.at(x) + psi); };
}

Observable sin_at(Site x, double psi) {
  return [x, psi](const SpinConfiguration& c) { return std::sin(c.at(x) + psi); };
}

SpinConfiguration initial_configuration(const SpinSystem& sys) {
  double fill = sys.bc.kind == BcKind::Fixed ? sys.bc.value : 0.0;
  SpinConfiguration cfg = centred_configuration(sys, fill);
  if (sys.bc.kind == BcKind::Staircase || sys.bc.kind == BcKind::Smeared) {
    for (Site x : sys.live_sites()) cfg.at(x) = sys.bc.centre(x);
  }
  if (sys.states > 0) {
    for (double& a : cfg.angle) a = state_angle(state_of(a, sys.states), sys.states);
  }
  if (sys.pot.hard_core && !sys.free()) {
    if (!sys.active.empty()) throw std::invalid_argument("feasibility is only certified on full boxes");
    auto cert = feasibility(cfg, *sys.pot.hard_core);
    if (cert.verdict == Feasibility::Infeasible) throw std::runtime_error("identically zero measure: " + cert.reason);
    cfg = *cert.witness;
  }
  return cfg;
}

Discrepancy rotation_discrepancy(const SpinSystem& sys, const RotatedObservable& f, double psi,
                                 const ChainOptions& opt, std::uint64_t seed) {
  SpinConfiguration cfg = initial_configuration(sys);
  std::vector<NamedObservable> obs{
      {"plain", [&f](const SpinConfiguration& c) { return f(c, 0.0); }},
      {"shifted", [&f, psi](const SpinConfiguration& c) { return f(c, psi); }},
      {"difference", [&f, psi](const SpinConfiguration& c) { return f(c, psi) - f(c, 0.0); }},
  };
  Discrepancy d;
  d.chain = run_chain(cfg, sys, obs, opt, seed);
  d.plain = d.chain.estimate("plain");
  d.shifted = d.chain.estimate("shifted");
  d.difference = d.chain.estimate("difference");
  d.value = std::abs(d.difference.mean);
  return d;
}

Estimate two_point(const SpinSystem& sys, Site x, Site y, const ChainOptions& opt, std::uint64_t seed) {
  if (!sys.live(x) || !sys.live(y)) throw std::invalid_argument("two-point sites must be live sites of the box");
  if (x == y) return {1.0, 0.0, opt.sweeps};
  SpinConfiguration cfg = initial_configuration(sys);
  std::vector<NamedObservable> obs{
      {"corr", [x, y](const SpinConfiguration& c) { return std::cos(c.at(x) - c.at(y)); }}};
  return run_chain(cfg, sys, obs, opt, seed).estimates[0];
}

PowerLawFit power_law_fit(const std::vector<CorrelationRow>& rows_in) {
  auto rows = rows_in;
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.distance < b.distance; });
  if (rows.size() < 4) throw std::invalid_argument("unusable window: fewer than four distances");
  for (const auto& r : rows) {
    if (!(r.value > 0.0)) throw std::invalid_argument("unusable window: nonpositive correlation");
    if (!(r.distance > 0.0) || !(r.error > 0.0)) throw std::invalid_argument("unusable window: bad distance or error");
  }
  if (rows.back().distance < 4.0 * rows.front().distance)
    throw std::invalid_argument("unusable window: distances span less than a factor of four");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].distance == rows[i - 1].distance) throw std::invalid_argument("unusable window: repeated distance");

  std::vector<double> lr, r, ly, sy;
  for (const auto& row : rows) {
    lr.push_back(std::log(row.distance));
    r.push_back(row.distance);
    ly.push_back(std::log(row.value));
    sy.push_back(row.error / row.value);
  }
  LineFit pw = weighted_line_fit(lr, ly, sy);
  LineFit ex = weighted_line_fit(r, ly, sy);
  PowerLawFit out;
  out.exponent = -pw.slope;
  out.exponent_error = pw.slope_error;
  out.ci_lo = out.exponent - 1.96 * pw.slope_error;
  out.ci_hi = out.exponent + 1.96 * pw.slope_error;
  out.amplitude = std::exp(pw.intercept);
  out.chi2_power = pw.chi2;
  out.chi2_exponential = ex.chi2;
  out.correlation_length = ex.slope < 0.0 ? -1.0 / ex.slope : kInfD;
  // both models have two parameters, so the Gaussian log-likelihoods compare directly
  out.loglik_difference = 0.5 * (ex.chi2 - pw.chi2);
  return out;
}

// ---------------------------------------------------------------------------
// Feasibility

const char* feasibility_name(Feasibility v) {
  switch (v) {
    case Feasibility::Feasible: return "feasible";
    case Feasibility::Infeasible: return "infeasible";
    case Feasibility::Rigid: return "rigid";
  }
  return "?";
}

Arc FeasibilityCertificate::arc(Site x) const {
  if (verdict == Feasibility::Infeasible) return {0.0, -1.0};
  if (lo.empty()) return {0.0, kPi};
  std::size_t i = Box(n).index(x);
  if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return {0.0, kPi};
  return {wrap_angle(0.5 * (lo[i] + hi[i])), std::min(kPi, 0.5 * (hi[i] - lo[i]))};
}

FeasibilityCertificate feasibility(const SpinConfiguration& ring, double theta, bool free_bc) {
  if (!(theta > 0.0)) throw std::invalid_argument("cutoff must be positive");
  const int n = ring.n;
  FeasibilityCertificate c;
  c.n = n;
  c.theta = theta;
  Box box(n);

  if (free_bc) {
    c.verdict = Feasibility::Feasible;
    c.reason = "free boundary: every constant configuration has finite energy";
    c.lo.assign(box.size(), -kInfD);
    c.hi.assign(box.size(), kInfD);
    c.max_width = kInfD;
    SpinConfiguration w = ring;
    for (Site x : box.sites()) w.at(x) = 0.0;
    c.witness = w;
    return c;
  }
  // Two or three steps join consecutive ring sites through the interior; the
  // lift of their difference is unique when 3 theta < pi.
  if (!(3.0 * theta < kPi)) throw std::invalid_argument("lifted propagation needs a cutoff below pi/3");
  const double cut = hard_core_slack(theta);

  std::vector<Site> cyc;
  for (Site y : layer_sites(n + 1))
    if (!(std::abs(y.x1) == n + 1 && std::abs(y.x2) == n + 1)) cyc.push_back(y);
  Box outer(n + 1);
  std::vector<double> lift(outer.size(), 0.0);
  double h = ring.at(cyc[0]);
  lift[outer.index(cyc[0])] = h;
  double winding = 0.0;
  for (std::size_t i = 0; i < cyc.size(); ++i) {
    Site a = cyc[i], b = cyc[(i + 1) % cyc.size()];
    bool same_side = (std::abs(a.x1) == n + 1 && a.x1 == b.x1) || (std::abs(a.x2) == n + 1 && a.x2 == b.x2);
    int len = same_side ? 3 : 2;
    double r = wrap_angle(ring.at(b) - ring.at(a));
    if (std::abs(r) > len * cut) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "boundary step (%d,%d)->(%d,%d) of %.6g exceeds %d cutoffs", a.x1, a.x2, b.x1,
                    b.x2, r, len);
      c.verdict = Feasibility::Infeasible;
      c.reason = buf;
      return c;
    }
    winding += r;
    if (i + 1 < cyc.size()) {
      h += r;
      lift[outer.index(b)] = h;
    }
  }
  if (std::abs(winding) > 1e-9) {
    c.verdict = Feasibility::Infeasible;
    c.reason = "boundary winds around the circle; a finite-energy interior would need a vortex";
    return c;
  }

  c.lo.assign(box.size(), -kInfD);
  c.hi.assign(box.size(), kInfD);
  for (std::size_t i = 0; i < box.size(); ++i) {
    Site x = box.site(i);
    for (Site s : kUnitSteps) {
      Site y = x + s;
      if (interior(y, n)) continue;
      double b = lift[outer.index(y)];
      c.lo[i] = std::max(c.lo[i], b - theta);
      c.hi[i] = std::min(c.hi[i], b + theta);
    }
  }
  // Bellman-Ford style fixed point, alternating sweep directions.
  bool changed = true;
  while (changed) {
    changed = false;
    ++c.sweeps;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < box.size(); ++k) {
        std::size_t i = pass == 0 ? k : box.size() - 1 - k;
        Site x = box.site(i);
        for (Site s : kUnitSteps) {
          Site y = x + s;
          if (!interior(y, n)) continue;
          std::size_t j = box.index(y);
          if (c.hi[j] + theta < c.hi[i]) {
            c.hi[i] = c.hi[j] + theta;
            changed = true;
          }
          if (c.lo[j] - theta > c.lo[i]) {
            c.lo[i] = c.lo[j] - theta;
            changed = true;
          }
        }
      }
    }
    if (c.sweeps > 4 * box.size() + 16) throw std::runtime_error("feasibility propagation did not settle");
  }

  c.max_width = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    double w = c.hi[i] - c.lo[i];
    if (w < -1e-10) {
      Site x = box.site(i);
      char buf[128];
      std::snprintf(buf, sizeof buf, "empty arc at (%d,%d) after propagation", x.x1, x.x2);
      c.verdict = Feasibility::Infeasible;
      c.reason = buf;
      return c;
    }
    c.max_width = std::max(c.max_width, w);
  }
  SpinConfiguration w = ring;
  for (std::size_t i = 0; i < box.size(); ++i) w.at(box.site(i)) = wrap_angle(0.5 * (c.lo[i] + c.hi[i]));
  c.witness = w;
  if (c.max_width < 1e-9) {
    c.verdict = Feasibility::Rigid;
    c.reason = "every site is pinned; the finite-energy configuration is unique";
  } else {
    c.verdict = Feasibility::Feasible;
    c.reason = "finite-energy configurations exist";
  }
  return c;
}

FeasibilityCertificate feasibility(const BoundaryCondition& bc, double theta, int n) {
  SpinSystem sys;
  sys.n = n;
  sys.bc = bc;
  return feasibility(centred_configuration(sys), theta, bc.kind == BcKind::Free);
}

// ---------------------------------------------------------------------------
// Staircase states

namespace {

AizenmanReport sample_state(const AizenmanOptions& opt, std::uint64_t seed, bool free_bc) {
  if (opt.k < 9) throw std::invalid_argument("staircase states need k >= 9");
  if (opt.restarts < 1) throw std::invalid_argument("need at least one restart");
  AizenmanReport rep;
  rep.k = opt.k;
  rep.n = opt.n;
  rep.delta = free_bc ? 0.0 : opt.delta;
  rep.sigma = opt.sigma;
  rep.theta = kTwoPi / opt.k;
  rep.restarts = opt.restarts;

  SpinSystem sys;
  sys.n = opt.n;
  sys.pot = aizenman_potential(rep.theta);
  sys.bc = free_bc ? BoundaryCondition::free() : BoundaryCondition::smeared(opt.k, opt.delta, opt.sigma);

  SpinConfiguration centre = centred_configuration(sys);
  if (!free_bc) {
    rep.centre = feasibility(centre, rep.theta);
    if (rep.centre.verdict == Feasibility::Infeasible)
      throw std::runtime_error("identically zero measure: " + rep.centre.reason);
  } else {
    rep.centre = feasibility(centre, rep.theta, true);
  }

  ChainOptions copt = opt.chain;
  copt.global_rotation = free_bc;
  Box box(opt.n);
  Box outer(opt.n + 1);
  const Site o{0, 0}, up{0, 1};
  if (!box.contains(up)) throw std::invalid_argument("box too small for the covariance check");
  std::vector<std::complex<double>> sum(box.size());
  std::vector<double> re0, im0, dre, dim;
  const std::complex<double> turn = std::polar(1.0, opt.sigma * rep.theta);
  std::size_t ring_tries = 0, ring_accepts = 0;

  for (std::size_t r = 0; r < opt.restarts; ++r) {
    std::uint64_t rs = split_seed(seed, r);
    Rng rng = make_rng(split_seed(rs, 0));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    SpinConfiguration cfg = centre;
    if (!free_bc && opt.delta > 0.0) {
      // nu^delta restricted to rings that admit a finite-energy interior
      for (std::size_t sweep = 0; sweep < opt.boundary_sweeps; ++sweep) {
        for (Site y : layer_sites(opt.n + 1)) {
          double old = cfg.at(y);
          cfg.at(y) = wrap_angle(sys.bc.centre(y) + opt.delta * unit(rng));
          if (std::abs(y.x1) == opt.n + 1 && std::abs(y.x2) == opt.n + 1) continue;  // corners touch no bond
          ++ring_tries;
          if (feasibility(cfg, rep.theta).verdict == Feasibility::Infeasible) {
            cfg.at(y) = old;
          } else {
            ++ring_accepts;
          }
        }
      }
    }
    if (free_bc) {
      for (Site x : box.sites()) cfg.at(x) = 0.0;
    } else {
      auto cert = feasibility(cfg, rep.theta);
      if (cert.verdict == Feasibility::Infeasible) throw std::runtime_error("identically zero measure: " + cert.reason);
      cfg = *cert.witness;
    }

    std::vector<std::complex<double>> local(box.size());
    auto hook = [&](const SpinConfiguration& c) {
      for (std::size_t i = 0; i < box.size(); ++i) local[i] += std::polar(1.0, c.angle[outer.index(box.site(i))]);
    };
    std::vector<NamedObservable> obs{{"re0", cos_at(o)}, {"im0", sin_at(o)}, {"energy", energy_observable(sys)}};
    ChainStats st = run_chain_hooked(cfg, sys, obs, copt, split_seed(rs, 1), hook);
    rep.violations += st.violations;
    double inv = 1.0 / static_cast<double>(copt.sweeps);
    for (std::size_t i = 0; i < box.size(); ++i) sum[i] += local[i] * inv;
    std::complex<double> m0 = local[box.index(o)] * inv, m1 = local[box.index(up)] * inv;
    re0.push_back(m0.real());
    im0.push_back(m0.imag());
    std::complex<double> d = m1 - turn * m0;
    dre.push_back(d.real());
    dim.push_back(d.imag());
    rep.chains.push_back(std::move(st));
  }

  rep.boundary_sweeps = free_bc ? 0 : opt.boundary_sweeps;
  rep.boundary_acceptance = ring_tries ? static_cast<double>(ring_accepts) / static_cast<double>(ring_tries) : 1.0;
  double inv = 1.0 / static_cast<double>(opt.restarts);
  for (std::size_t i = 0; i < box.size(); ++i) rep.rows.push_back({box.site(i), sum[i] * inv});

  if (opt.restarts >= 2) {
    rep.m_re = mean_estimate(re0);
    rep.m_im = mean_estimate(im0);
    Estimate er = mean_estimate(dre), ei = mean_estimate(dim);
    rep.covariance_residual = {er.mean, ei.mean};
    rep.covariance_error = std::hypot(er.error, ei.error);
  } else {
    rep.m_re = rep.chains[0].estimate("re0");
    rep.m_im = rep.chains[0].estimate("im0");
    rep.covariance_residual = {dre[0], dim[0]};
    rep.covariance_error = 0.0;  // one ring: no spread to estimate
  }
  rep.modulus.mean = std::hypot(rep.m_re.mean, rep.m_im.mean);
  rep.modulus.error = std::hypot(rep.m_re.error, rep.m_im.error);
  rep.modulus.count = rep.m_re.count;
  return rep;
}

}  // namespace

AizenmanReport aizenman_state(const AizenmanOptions& opt, std::uint64_t seed) { return sample_state(opt, seed, false); }

AizenmanReport free_state(const AizenmanOptions& opt, std::uint64_t seed) { return sample_state(opt, seed, true); }

void write_trace(std::ostream& os, const std::vector<double>& trace) {
  os << "sweep,value\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
    os << buf;
  }
}

void write_magnetization(std::ostream& os, const std::vector<MagnetizationRow>& rows) {
  os << "x1,x2,re,im,abs\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g\n", r.x.x1, r.x.x2, r.m.real(), r.m.imag(), std::abs(r.m));
    os << buf;
  }
}

}  // namespace spinlab
