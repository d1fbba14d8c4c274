#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spinlab {

// Even trigonometric polynomial U(phi) = sum_s b[s] cos(s phi).
struct TrigPolynomial {
  std::vector<double> b;

  int degree() const { return b.empty() ? 0 : static_cast<int>(b.size()) - 1; }
  double operator()(double phi) const;
  double second_derivative(double phi) const;
};

// Energy as a function of the angle difference; +inf marks a forbidden pair.
struct PairPotential {
  std::string name;
  std::function<double(double)> eval;
  std::optional<double> curvature_bound;  // C-bar, if known
  std::optional<double> hard_core;        // cutoff theta, if any
  std::optional<TrigPolynomial> trig;     // exact cosine series, if any

  double operator()(double phi) const { return eval(phi); }
};

PairPotential xy_potential(double J);
// -cos(phi) for |phi| <= theta, +inf beyond.
PairPotential aizenman_potential(double theta);
// max(ln|phi|, floor).
PairPotential logsing_potential(double floor = -30.0);
// Circle distance |phi|.
PairPotential absval_potential();
PairPotential trig_potential(const TrigPolynomial& p, const std::string& name = "trig");

// Parses "xy(1.5)", "aizenman(0.5236)", "logsing(-30)", "logsing", "absval".
// Throws std::invalid_argument on anything else.
PairPotential parse_potential(const std::string& spec);
std::vector<std::string> potential_preset_names();

// Ubar = U - upsilon with U a trig polynomial.
struct SingularDecomposition {
  PairPotential bar;
  TrigPolynomial smooth;
  double epsilon = 0.0;   // requested smallness
  double c_bar = 0.0;     // second-derivative bound of the smooth part
  std::string method;     // "exact", "partial" or "fejer"
  double max_upsilon = 0.0;  // measured on the verification grid
  bool exact = false;        // upsilon is identically zero

  double upsilon(double phi) const { return exact ? 0.0 : smooth(phi) - bar(phi); }
};

struct DecomposeOptions {
  int grid = 4096;        // verification grid, power of two
  int max_degree = 1024;
};

// Fits a trig polynomial P with grid sup error <= eps/2 and returns
// U = P + max(Ubar - P), so that 0 <= upsilon <= eps on the grid.
// Throws std::invalid_argument for eps <= 0 or a non-finite Ubar and
// std::runtime_error if no degree up to the cap achieves the target.
SingularDecomposition decompose(const PairPotential& bar, double eps, const DecomposeOptions& opt = {});

// Targets eps/5, since exp(4 eps') <= 1 + 5 eps' for eps' <= 0.1.
SingularDecomposition decompose_for_domination(const PairPotential& bar, double eps,
                                               const DecomposeOptions& opt = {});

// Builds a decomposition from an explicit smooth part (upsilon = U - Ubar).
SingularDecomposition make_decomposition(const TrigPolynomial& smooth, const PairPotential& bar);

// sum_s s^2 |b_s|.
double second_derivative_bound(const TrigPolynomial& p);

// Ratio of the single-site integrals with and without exp(sum upsilon) for
// neighbour angles phis, on a periodic trapezoid grid of `quad_points`.
double condition_51_ratio(const SingularDecomposition& dec, const std::array<double, 4>& phis,
                          int quad_points = 2048);

struct Condition51Result {
  double ratio = 1.0;
  std::array<double, 4> worst{};  // arg max, first angle fixed at 0
};

// Maximum of the ratio over a grid of `search_points` angles per neighbour
// (first neighbour fixed at 0). Throws std::runtime_error if the integrand
// overflows.
Condition51Result verify_condition_51(const SingularDecomposition& dec, int quad_points = 2048,
                                      int search_points = 32);

struct DominationEpsilon {
  double epsilon = 0.0;
  bool warning = false;  // epsilon >= 1, no useful domination
};

DominationEpsilon domination_epsilon(double ratio);

// Exact enumeration of the dependent bond process on a side x side box with
// free boundary and `states` equally spaced spin values.
struct ToyDomination {
  std::size_t bonds = 0;
  std::size_t conditionings = 0;   // (bond, D) pairs examined
  double max_conditional = 0.0;    // max P(b open | rest = D)
  double min_conditional = 1.0;
};

ToyDomination enumerate_domination(const SingularDecomposition& dec, int states = 8, int side = 3);

// The condition ratio with the single-site integral replaced by the sum over
// `states` equally spaced spin values, searched over all neighbour states.
double discrete_condition_51(const SingularDecomposition& dec, int states);

// "index,value" rows.
void write_coefficients(std::ostream& os, const TrigPolynomial& p);

}  // namespace spinlab
