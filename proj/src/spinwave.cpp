#include "spinlab/spinwave.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <boost/pending/disjoint_sets.hpp>

#include "spinlab/fft.hpp"
#include "spinlab/percolation.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

// Kernel cropped to radius r; the dropped mass is returned.
LatticeField crop_kernel(const LatticeField& k, int r, double& dropped) {
  if (k.radius <= r) {
    dropped = 0.0;
    return k;
  }
  LatticeField out(r);
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) out.ref({i, j}) = k.at({i, j});
  dropped = std::max(0.0, k.sum() - out.sum());
  return out;
}

// Convolution with a fixed kernel, evaluated on Lambda_n for inputs supported
// on Lambda_n. The circular grid is large enough that nothing wraps.
class BoxConvolver {
 public:
  BoxConvolver(const LatticeField& k, int n) : n_(n), S_(2 * n + 1) {
    M_ = good_fft_size(S_ + k.radius);
    std::vector<double> grid(static_cast<std::size_t>(M_) * M_, 0.0);
    for (int i = -k.radius; i <= k.radius; ++i)
      for (int j = -k.radius; j <= k.radius; ++j) grid[slot({i, j})] = k.at({i, j});
    conv_ = std::make_unique<CircularConvolver>(M_, M_, grid);
    in_.assign(grid.size(), 0.0);
    out_.assign(grid.size(), 0.0);
  }

  // in, out in Box(n) index order
  void apply(const std::vector<double>& in, std::vector<double>& out) {
    std::fill(in_.begin(), in_.end(), 0.0);
    Box box(n_);
    for (std::size_t i = 0; i < in.size(); ++i) in_[slot(box.site(i))] = in[i];
    conv_->apply(in_, out_);
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = out_[slot(box.site(i))];
  }

 private:
  int n_, S_, M_;
  std::unique_ptr<CircularConvolver> conv_;
  std::vector<double> in_, out_;

  std::size_t slot(Site x) const {
    const int a = ((x.x1 % M_) + M_) % M_, b = ((x.x2 % M_) + M_) % M_;
    return static_cast<std::size_t>(a) * M_ + static_cast<std::size_t>(b);
  }
};

// sum_x [K g^2 - 2 g (k*g) + (k*g^2)] with K the full kernel mass.
double quadratic_form_with(BoxConvolver& conv, double mass, const std::vector<double>& g) {
  std::vector<double> g2(g.size()), kg, kg2;
  for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
  conv.apply(g, kg);
  conv.apply(g2, kg2);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += mass * g2[i] - 2.0 * g[i] * kg[i] + kg2[i];
  return std::max(0.0, s);
}

}  // namespace

}  // namespace spinlab

// ---------------------------------------------------------------------------
// Matrix-free operator for Eigen's conjugate gradients: (C + p0) v - p * v on
// the annulus.

namespace spinlab {
class AnnulusOperator;
}

namespace Eigen::internal {
template <>
struct traits<spinlab::AnnulusOperator> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace spinlab {

class AnnulusOperator : public Eigen::EigenBase<AnnulusOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  AnnulusOperator(BoxConvolver* conv, std::vector<std::size_t> annulus, std::size_t box_size, double diag)
      : conv_(conv), annulus_(std::move(annulus)), box_size_(box_size), diag_(diag) {}

  Eigen::Index rows() const { return static_cast<Eigen::Index>(annulus_.size()); }
  Eigen::Index cols() const { return rows(); }
  double diagonal() const { return diag_; }

  template <typename Rhs>
  Eigen::Product<AnnulusOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<AnnulusOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  template <typename In>
  void apply(const In& v, Eigen::VectorXd& out) const {
    full_.assign(box_size_, 0.0);
    for (std::size_t i = 0; i < annulus_.size(); ++i) full_[annulus_[i]] = v(static_cast<Eigen::Index>(i));
    conv_->apply(full_, conv_out_);
    out.resize(rows());
    for (std::size_t i = 0; i < annulus_.size(); ++i)
      out(static_cast<Eigen::Index>(i)) = self_ * full_[annulus_[i]] - conv_out_[annulus_[i]];
  }

  double self_ = 0.0;  // C + p0

 private:
  BoxConvolver* conv_;
  std::vector<std::size_t> annulus_;
  std::size_t box_size_;
  double diag_;
  mutable std::vector<double> full_, conv_out_;
};

// Jacobi preconditioner; the diagonal is the same at every annulus site.
class ConstantDiagonalPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  ConstantDiagonalPreconditioner() = default;
  template <typename M>
  explicit ConstantDiagonalPreconditioner(const M& m) {
    compute(m);
  }
  template <typename M>
  ConstantDiagonalPreconditioner& analyzePattern(const M&) {
    return *this;
  }
  template <typename M>
  ConstantDiagonalPreconditioner& factorize(const M& m) {
    inv_ = 1.0 / m.diagonal();
    return *this;
  }
  template <typename M>
  ConstantDiagonalPreconditioner& compute(const M& m) {
    return factorize(m);
  }
  template <typename Rhs>
  Eigen::VectorXd solve(const Rhs& b) const {
    return inv_ * b;
  }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  double inv_ = 1.0;
};

}  // namespace spinlab

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<spinlab::AnnulusOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<spinlab::AnnulusOperator, Rhs,
                                generic_product_impl<spinlab::AnnulusOperator, Rhs>> {
  using Scalar = typename Product<spinlab::AnnulusOperator, Rhs>::Scalar;

  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const spinlab::AnnulusOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
    Eigen::VectorXd out;
    lhs.apply(rhs, out);
    dst += alpha * out;
  }
};
}  // namespace Eigen::internal

namespace spinlab {

Conductances surrogate_conductances(const CouplingKernel& J, double eps, double tol, int crop_radius) {
  auto cb = connectivity_bound(J, eps, tol, crop_radius);
  Conductances c;
  c.name = J.name();
  c.eps = eps;
  c.p = std::move(cb.d);
  c.tail = cb.series_error + cb.crop_loss;
  return c;
}

namespace {

struct Clamp {
  LatticeField cropped;
  double mass = 0.0;  // total conductance mass including the origin entry
};

Clamp clamp_for_box(const Conductances& c, int n) {
  Clamp k;
  double dropped = 0.0;
  k.cropped = crop_kernel(c.p, std::max(1, 2 * n), dropped);
  k.mass = c.p.sum() + c.tail;
  return k;
}

}  // namespace

SpinWaveField solve_spinwave(const Conductances& c, int n, int R, double psi, double tol, long max_iter) {
  if (R < 0 || R >= n) throw std::invalid_argument("need 0 <= R < n");
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  if (!(psi >= 0)) throw std::invalid_argument("psi must be nonnegative");
  if (!(c.total() > 0)) throw std::invalid_argument("conductances vanish");
  SpinWaveField f;
  f.n = n;
  f.R = R;
  f.psi = psi;
  f.cond = c;
  f.values = LatticeField(n);

  Box box(n);
  std::vector<std::size_t> annulus;
  std::vector<double> clamp(box.size(), 0.0);
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (sup_norm(box.site(i)) > R)
      annulus.push_back(i);
    else
      clamp[i] = psi;
  }
  const Clamp k = clamp_for_box(c, n);
  const double p0 = c.p.at({0, 0});
  const double C = c.total();
  BoxConvolver conv(k.cropped, n);

  std::vector<double> pc;
  conv.apply(clamp, pc);
  Eigen::VectorXd b(static_cast<Eigen::Index>(annulus.size()));
  for (std::size_t i = 0; i < annulus.size(); ++i) b(static_cast<Eigen::Index>(i)) = pc[annulus[i]];

  AnnulusOperator A(&conv, annulus, box.size(), C);
  A.self_ = C + p0;
  Eigen::ConjugateGradient<AnnulusOperator, Eigen::Lower | Eigen::Upper, ConstantDiagonalPreconditioner> cg;
  cg.compute(A);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(b.size());

  auto true_residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd Ax;
    A.apply(x, Ax);
    return (Ax - b).cwiseAbs().maxCoeff() / C;
  };

  const double bnorm = std::max(b.norm(), 1e-300);
  double rel = tol * C / bnorm;
  double res = b.size() ? true_residual(v) : 0.0;
  long used = 0;
  while (b.size() && res > tol) {
    if (used >= max_iter)
      throw std::runtime_error("spin-wave solver did not converge: residual " + std::to_string(res));
    cg.setTolerance(std::min(rel, 0.5));
    cg.setMaxIterations(max_iter - used);
    v = cg.solveWithGuess(b, v);
    used += std::max<long>(1, static_cast<long>(cg.iterations()));
    res = true_residual(v);
    rel *= 0.1;
  }
  f.iterations = used;
  f.residual = res;
  for (std::size_t i = 0; i < box.size(); ++i) f.values.values[i] = clamp[i];
  for (std::size_t i = 0; i < annulus.size(); ++i) f.values.values[annulus[i]] = v(static_cast<Eigen::Index>(i));
  return f;
}

double harmonic_residual(const SpinWaveField& f) {
  Box box(f.n);
  const Clamp k = clamp_for_box(f.cond, f.n);
  BoxConvolver conv(k.cropped, f.n);
  std::vector<double> pv;
  conv.apply(f.values.values, pv);
  const double p0 = f.cond.p.at({0, 0});
  const double C = f.cond.total();
  double worst = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (sup_norm(box.site(i)) <= f.R) continue;
    const double lap = (C + p0) * f.values.values[i] - pv[i];
    worst = std::max(worst, std::abs(lap));
  }
  return worst / C;
}

double quadratic_form(const LatticeField& k, double tail, const LatticeField& g) {
  double dropped = 0.0;
  LatticeField kc = crop_kernel(k, std::max(1, 2 * g.radius), dropped);
  BoxConvolver conv(kc, g.radius);
  return quadratic_form_with(conv, kc.sum() + dropped + tail, g.values);
}

double dirichlet_energy(const SpinWaveField& f) { return quadratic_form(f.cond.p, f.cond.tail, f.values); }

namespace {

int rho_of(const std::vector<Site>& V) {
  int r = 1;
  for (Site x : V) r = std::max(r, sup_norm(x));
  return r;
}

// sum over |y|_inf > m of the conductances, counting the unresolved mass
double tail_beyond(const Conductances& c, int m) {
  double s = c.tail;
  for (int i = -c.p.radius; i <= c.p.radius; ++i)
    for (int j = -c.p.radius; j <= c.p.radius; ++j)
      if (std::max(std::abs(i), std::abs(j)) > m) s += c.p.at({i, j});
  return s;
}

}  // namespace

double gate_tail_bound(const std::vector<Site>& V, int R, const Conductances& c) {
  if (V.empty()) throw std::invalid_argument("V must not be empty");
  return static_cast<double>(V.size()) * tail_beyond(c, std::max(0, R - rho_of(V)));
}

int compute_R_delta(const std::vector<Site>& V, double delta, const Conductances& c, double f_sup) {
  if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
  if (!(f_sup > 0)) throw std::invalid_argument("f_sup must be positive");
  if (V.empty()) throw std::invalid_argument("V must not be empty");
  const double target = delta / (2.0 * f_sup);
  const int rho = rho_of(V);
  for (int m = 0; m <= c.p.radius; ++m)
    if (static_cast<double>(V.size()) * tail_beyond(c, m) <= target) return rho + m;
  throw std::runtime_error("delta below the resolution of the conductance stencil");
}

namespace {

// A-clusters over the given sites plus every endpoint of A.
struct Clusters {
  std::vector<Site> sites;
  std::unordered_map<Site, int, SiteHash> id;
  std::vector<int> root;

  Clusters(std::vector<Site> base, const BondSet& A) : sites(std::move(base)) {
    for (std::size_t i = 0; i < sites.size(); ++i) id.emplace(sites[i], static_cast<int>(i));
    for (const Bond& b : A)
      for (Site s : {b.a, b.b})
        if (id.emplace(s, static_cast<int>(sites.size())).second) sites.push_back(s);
    boost::disjoint_sets_with_storage<> ds(sites.size());
    for (const Bond& b : A) ds.union_set(id.at(b.a), id.at(b.b));
    root.resize(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) root[i] = static_cast<int>(ds.find_set(static_cast<int>(i)));
  }

  std::vector<int> max_norm() const {
    std::vector<int> r(sites.size(), 0);
    for (std::size_t i = 0; i < sites.size(); ++i)
      r[static_cast<std::size_t>(root[i])] = std::max(r[static_cast<std::size_t>(root[i])], sup_norm(sites[i]));
    return r;
  }
};

}  // namespace

int cluster_radius(const BondSet& A, const std::vector<Site>& V) {
  Clusters cl(V, A);
  auto r = cl.max_norm();
  int out = 1;
  for (Site x : V) out = std::max(out, r[static_cast<std::size_t>(cl.root[static_cast<std::size_t>(cl.id.at(x))])]);
  return out;
}

DeformedSpinWave deform(const SpinWaveField& f, const BondSet& A, const std::vector<Site>& V) {
  Box box(f.n);
  for (Site x : V)
    if (!box.contains(x)) throw std::invalid_argument("V must lie in the box");
  Clusters cl(box.sites(), A);
  const auto rmax = cl.max_norm();

  DeformedSpinWave d;
  d.values = LatticeField(f.n);
  d.witness.resize(box.size());
  d.cluster.resize(box.size());
  for (Site x : V)
    d.r_A = std::max(d.r_A, rmax[static_cast<std::size_t>(cl.root[static_cast<std::size_t>(cl.id.at(x))])]);
  d.gated = d.r_A > f.R;

  // per cluster: smallest (Psi, site)
  std::vector<int> best(cl.sites.size(), -1);
  for (std::size_t i = 0; i < cl.sites.size(); ++i) {
    const auto r = static_cast<std::size_t>(cl.root[i]);
    const int b = best[r];
    if (b < 0) {
      best[r] = static_cast<int>(i);
      continue;
    }
    const double vi = f.at(cl.sites[i]), vb = f.at(cl.sites[static_cast<std::size_t>(b)]);
    if (vi < vb || (vi == vb && cl.sites[i] < cl.sites[static_cast<std::size_t>(b)])) best[r] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto r = static_cast<std::size_t>(cl.root[i]);
    const Site t = cl.sites[static_cast<std::size_t>(best[r])];
    d.witness[i] = t;
    d.cluster[i] = cl.root[i];
    d.values.values[i] = d.gated ? 0.0 : f.at(t);
  }
  return d;
}

EntropyEstimate entropy_bound(const SpinWaveField& f, const DeformedSpinWave& d, const CouplingKernel& J, double c1) {
  if (d.values.radius != f.n) throw std::invalid_argument("fields on different boxes");
  if (!(c1 >= 0)) throw std::invalid_argument("c1 must be nonnegative");
  EntropyEstimate e;
  e.c1 = c1;
  e.gated = d.gated;
  if (d.gated) return e;
  double dropped = 0.0;
  LatticeField k = crop_kernel(J.dense(), std::max(1, 2 * f.n), dropped);
  const double mass = k.sum() + dropped;
  BoxConvolver conv(k, f.n);
  e.form = quadratic_form_with(conv, mass, d.values.values);
  e.smooth = quadratic_form_with(conv, mass, f.values.values);
  std::vector<double> h2(f.values.values.size()), one(f.values.values.size(), 1.0), k1;
  for (std::size_t i = 0; i < h2.size(); ++i) {
    const double h = d.values.values[i] - f.values.values[i];
    h2[i] = h * h;
  }
  conv.apply(one, k1);
  for (std::size_t i = 0; i < h2.size(); ++i) {
    e.cluster_x += mass * h2[i];
    e.cluster_y += k1[i] * h2[i];
  }
  e.value = c1 * e.form;
  return e;
}

EntropyReport expected_entropy(const CouplingKernel& J, double eps, int n, int R, double psi, std::size_t samples,
                               std::uint64_t seed, double c1) {
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("eps must lie in (0, 1)");
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  EntropyReport rep;
  rep.n = n;
  rep.R = R;
  rep.eps = eps;
  rep.psi = psi;
  rep.c1 = c1;
  rep.samples = samples;
  auto f = solve_spinwave(surrogate_conductances(J, eps), n, R, psi);
  rep.energy = dirichlet_energy(f);
  rep.cluster_bound = 2.0 * rep.energy;
  rep.smooth_bound = rep.energy / eps;
  rep.smooth = quadratic_form(J.dense(), 0.0, f.values);
  std::vector<double> values, cluster;
  for (std::size_t i = 0; i < samples; ++i) {
    auto A = sample_coupling(eps, J, n, split_seed(seed, i));
    auto d = deform(f, A.bonds);
    auto e = entropy_bound(f, d, J, c1);
    rep.gated += e.gated ? 1 : 0;
    values.push_back(e.value);
    cluster.push_back(e.cluster_x + e.cluster_y);
  }
  rep.value = mean_estimate(values);
  rep.cluster = mean_estimate(cluster);
  return rep;
}

Estimate monte_carlo_hitting(const CouplingKernel& J, double eps, int n, int R, Site x, std::size_t walks,
                             std::uint64_t seed) {
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("eps must lie in (0, 1)");
  if (R < 0 || R >= n) throw std::invalid_argument("need 0 <= R < n");
  if (walks < 2) throw std::invalid_argument("need at least two walks");
  const LatticeField k = J.dense();
  std::vector<Site> steps;
  std::vector<double> weights;
  for (int i = -k.radius; i <= k.radius; ++i)
    for (int j = -k.radius; j <= k.radius; ++j)
      if (k.at({i, j}) > 0) {
        steps.push_back({i, j});
        weights.push_back(k.at({i, j}));
      }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::geometric_distribution<int> extra(1.0 - eps);
  Rng rng = make_rng(seed);
  std::size_t hits = 0;
  for (std::size_t w = 0; w < walks; ++w) {
    Site pos = x;
    while (true) {
      const int r = sup_norm(pos);
      if (r <= R) {
        ++hits;
        break;
      }
      if (r > n) break;
      const int m = 1 + extra(rng);
      for (int s = 0; s < m; ++s) pos = pos + steps[pick(rng)];
    }
  }
  Estimate e;
  e.count = walks;
  e.mean = static_cast<double>(hits) / static_cast<double>(walks);
  e.error = std::sqrt(e.mean * (1 - e.mean) / static_cast<double>(walks));
  return e;
}

void write_field(std::ostream& os, const SpinWaveField& f) {
  os << "x1,x2,psi\n";
  Box box(f.n);
  char buf[32];
  for (std::size_t i = 0; i < box.size(); ++i) {
    Site s = box.site(i);
    std::snprintf(buf, sizeof buf, "%.17g", f.values.values[i]);
    os << s.x1 << ',' << s.x2 << ',' << buf << '\n';
  }
}

}  // namespace spinlab
