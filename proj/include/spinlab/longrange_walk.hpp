#pragma once

#include <string>
#include <vector>

#include "spinlab/lattice.hpp"

namespace spinlab {

// Values on the square {|x|_inf <= radius}, x1 slowest.
struct LatticeField {
  int radius = 0;
  std::vector<double> values;

  LatticeField() = default;
  explicit LatticeField(int r) : radius(r), values(static_cast<std::size_t>(2 * r + 1) * (2 * r + 1), 0.0) {}

  int side() const { return 2 * radius + 1; }
  bool contains(Site x) const { return sup_norm(x) <= radius; }
  std::size_t index(Site x) const {
    return static_cast<std::size_t>(x.x1 + radius) * side() + static_cast<std::size_t>(x.x2 + radius);
  }
  double at(Site x) const { return contains(x) ? values[index(x)] : 0.0; }
  double& ref(Site x) { return values[index(x)]; }
  double sum() const;
};

// Linear convolution of two fields, cropped to `crop_radius` (mass outside
// the crop is dropped).
LatticeField convolve_fields(const LatticeField& a, const LatticeField& b, int crop_radius);

// Symmetric nonnegative transition weights j(x). Shell kernels depend on
// |x|_inf only and are stored per shell; dense kernels are stored on a square.
class CouplingKernel {
 public:
  // weight[r] is the (unnormalized) per-site value at |x|_inf = r, r >= 1.
  static CouplingKernel from_shells(std::string name, std::vector<double> weight, double raw_tail = 0.0);
  // Validates symmetry (asymmetry > 1e-12 relative is an error), symmetrizes
  // and normalizes. The origin entry is kept only if keep_origin is set
  // (walk kernels with holding); coupling kernels drop it.
  static CouplingKernel from_dense(std::string name, LatticeField raw, bool keep_origin = false, double raw_tail = 0.0);

  const std::string& name() const { return name_; }
  int radius() const { return radius_; }
  bool is_shell() const { return shell_; }
  // Fraction of the raw mass beyond the truncation radius (estimated).
  double tail_mass() const { return tail_; }

  double operator()(Site x) const;
  double shell_value(int r) const;          // per-site value at |x|_inf = r
  double mass_beyond(int r) const;          // sum over |x|_inf > r
  LatticeField dense() const;

  double char_function(double t1, double t2) const;
  // 1 - phi, computed without cancellation.
  double one_minus_char(double t1, double t2) const;

 private:
  std::string name_;
  int radius_ = 0;
  bool shell_ = false;
  double tail_ = 0.0;
  std::vector<double> shell_w_;   // shell kernels: per-site value, index r
  LatticeField dense_;            // dense kernels
  std::vector<double> shell_mass_;  // mass per sup-norm shell, both kinds
};

CouplingKernel nn_kernel();
CouplingKernel powerlaw_kernel(double s, int radius = 512);
// |x|^-4 log_2|x| ... log_p|x| (log_2 = log log), optionally with the last
// factor raised to 1 + eps. The argument is clamped from below so that every
// iterated logarithm is at least 1.
CouplingKernel logcorr_kernel(int p, int radius = 512, double eps = 0.0);

// "nn", "powerlaw(3.5)", "logcorr(2)", "logcorr_eps(2,0.5)".
CouplingKernel parse_kernel(const std::string& spec, int radius = 512);
std::vector<std::string> kernel_preset_names();

// Normalizes a raw coupling table (the origin entry is ignored).
CouplingKernel normalize(const std::string& name, const LatticeField& raw);

// n-step transition probabilities, cropped to crop_radius.
LatticeField n_step(const CouplingKernel& k, int n, int crop_radius);

struct ConnectivityBound {
  LatticeField d;              // d_eps(x) = sum_{m=1}^{N} eps^m j^(m)(x)
  int terms = 0;               // N
  double series_error = 0.0;   // eps^{N+1}/(1-eps), bound on the omitted terms
  double crop_loss = 0.0;      // mass dropped by cropping
  double c_bound = 0.0;        // eps/(1-eps)
  double total = 0.0;          // sum_x d(x)
};

// Truncates the series once eps^{N+1}/(1-eps) <= tol.
ConnectivityBound connectivity_bound(const CouplingKernel& k, double eps, double tol = 1e-12, int crop_radius = 64);

// Walk with transitions proportional to d_eps, including the holding mass at
// the origin.
CouplingKernel y_kernel(const CouplingKernel& k, double eps, double tol = 1e-12, int crop_radius = 64);

enum class Verdict { Recurrent, Transient, Inconclusive };
const char* verdict_name(Verdict v);

struct RecurrenceReport {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<double> rho;      // decreasing
  std::vector<double> integral; // I(rho), nondecreasing
  double fit_intercept = 0.0;
  double fit_slope = 0.0;       // coefficient of log(1/rho)
  double slope_error = 0.0;
  double fit_residual = 0.0;    // max relative residual of the log fit
  double last_increment = 0.0;  // relative increment over the last two rungs
  bool periodic = false;        // 1 - phi vanished away from the origin
  std::string note;
};

// rho from 1/2 down by halving to the smallest rung not below the resolution
// limit: 2^-12 for kernels with truncated mass below 1e-9, 8/radius otherwise.
std::vector<double> default_ladder(const CouplingKernel& k);

RecurrenceReport recurrence_classify(const CouplingKernel& k, const std::vector<double>& ladder);
RecurrenceReport recurrence_classify(const CouplingKernel& k);

}  // namespace spinlab
