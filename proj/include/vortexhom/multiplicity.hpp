#pragma once

// Homogenized vortex-energy density and its convex conjugate.
//
// phi(D) is the piecewise linear interpolation of d -> d^2 through the
// integers; it is the value of the cell problem
//     min { sum k^2 mu_k : mu_k >= 0, sum mu_k = 1, sum k mu_k = D }.
// phi_star(f) is the Legendre transform of kappa -> pi*gamma*phi(kappa/2pi),
// which equals sum_{i>=1} 2pi (|f| - (i-1/2) gamma)_+ .

#include <map>

namespace vortexhom {

/// Hole-size exponent gamma of diam = 2 exp(-gamma/eps^2). Always positive.
class PinningStrength {
 public:
  explicit PinningStrength(double gamma);
  double value() const noexcept { return gamma_; }

 private:
  double gamma_;
};

/// Sparse probability weights mu_k over integer multiplicities, |k| <= truncation.
struct PartitionTuple {
  std::map<int, double> weights;
  int truncation = 0;

  double total() const;
  double mean() const;           // sum k mu_k
  double second_moment() const;  // sum k^2 mu_k
  double weight(int k) const;

  /// Throws DomainError if weights are negative, do not sum to one within
  /// 1e-12, or reach past the truncation.
  void validate() const;
};

double phi(double d);

/// Index k of the band (k-1/2)gamma <= |f| <= (k+1/2)gamma that evaluates f.
int phi_star_band(double f, const PinningStrength& gamma);

double phi_star(double f, const PinningStrength& gamma);

/// Antiderivative of phi_star with value 0 at 0 (odd function).
double phi_star_primitive(double f, const PinningStrength& gamma);

/// Sliding average (1/2delta) * integral_{f-delta}^{f+delta} phi_star.
double phi_star_mollified(double f, const PinningStrength& gamma, double delta);

/// Derivative of phi_star_mollified; continuous and nondecreasing in f.
double phi_star_mollified_slope(double f, const PinningStrength& gamma, double delta);

struct CellMinimum {
  double value = 0.0;
  PartitionTuple argmin;
};

/// Solves the cell LP by enumerating all supports of size one and two in
/// [-K, K]. Requires |D| <= K - 1, otherwise throws TruncationError.
CellMinimum cell_minimum_oracle(double d, int truncation);

/// Same with the default window ceil(|D|) + 3.
CellMinimum cell_minimum_oracle(double d);

struct LegendreEstimate {
  double value = 0.0;
  double argmax_kappa = 0.0;
  /// False when the maximum sits on the edge of the sampled kappa range.
  bool reliable = true;
};

/// Brute-force sup over kappa = i*step, |kappa| <= range, of
/// f*kappa - pi*gamma*phi(kappa/2pi).
LegendreEstimate legendre_numeric(double f, const PinningStrength& gamma,
                                  double kappa_range, double kappa_step);

}  // namespace vortexhom
