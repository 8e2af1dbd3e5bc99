#pragma once

// Dual limit problem
//   min_f  1/2 int |grad f|^2 + f^2 + 2 psi(f) + 2 lambda f,   f = 0 on the boundary,
// where psi is phi_star or one of its truncated / constrained / smoothed
// variants, and the homogenized vorticity 2 pi D = -Delta f + f + lambda.

#include <optional>
#include <string>
#include <vector>

#include "vortexhom/grid.hpp"

namespace vortexhom {

/// Which penalty psi the dual functional uses.
struct DualMode {
  enum class Kind { full_phi_star, truncated, obstacle, mollified };

  Kind kind = Kind::full_phi_star;
  /// truncated/obstacle: number of kink terms 2pi(|f| - (i-1/2)gamma)_+ kept.
  int levels = 0;
  /// obstacle: |f| <= bound.
  double bound = 0.0;
  /// mollified: half-width of the averaging window.
  double delta = 0.0;

  static DualMode full() { return {}; }
  static DualMode truncated(int j) { return {Kind::truncated, j, 0.0, 0.0}; }
  static DualMode obstacle(double bound, int j) { return {Kind::obstacle, j, bound, 0.0}; }
  static DualMode mollified(double delta) { return {Kind::mollified, 0, 0.0, delta}; }

  std::string describe() const;
};

struct DualSolveOptions {
  double tol = 1e-8;
  long max_sweeps = 100000;
  /// Over-relaxation factor; 0 picks one from the grid size.
  double omega = 0.0;
  /// Initial iterate (must live on the same domain); zero when absent.
  std::optional<ScalarField> initial;
  /// Record the objective after every sweep.
  bool record_history = false;
};

struct DualSolution {
  ScalarField f;
  double lambda = 0.0;
  double gamma = 0.0;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
  DualMode mode;
  /// Max nodal change in the last sweep.
  double last_update = 0.0;
  std::vector<double> objective_history;
};

/// Pointwise penalty psi for a mode (the integrand is psi(f) + lambda f).
double dual_penalty(double f, double gamma, const DualMode& mode);

/// Discrete value of the dual functional for any f with zero boundary values.
double dual_objective(const ScalarField& f, double lambda, double gamma, const DualMode& mode);

/// Minimizes the discrete dual functional by cyclic exact per-node proximal
/// updates (nonlinear Gauss-Seidel with over-relaxation kept inside the
/// linear piece of the exact minimizer, so every update decreases the
/// objective). Returns a non-converged solution when max_sweeps runs out.
DualSolution solve_dual(DomainPtr domain, double lambda, double gamma, const DualMode& mode,
                        const DualSolveOptions& opts = {});

struct VorticityField {
  ScalarField d;
  double lambda = 0.0;
  double gamma = 0.0;
};

/// D = (-Delta_h f + f + lambda) / 2pi on interior nodes; zero elsewhere.
/// Refuses non-converged input with PreconditionError.
VorticityField recover_vorticity(const DualSolution& sol);

enum class Scenario { vortex_free, fractional_coexistence, saturated };
std::string to_string(Scenario s);

struct RegionStats {
  long nodes = 0;
  double area = 0.0;
  double d_min = 0.0;
  double d_mean = 0.0;
  double d_max = 0.0;
};

struct RegimeReport {
  double band_tol = 0.0;
  /// Deepest level J with a nonempty Omega_J or coincidence band J.
  int deepest_level = 0;
  Scenario scenario = Scenario::vortex_free;
  /// omega_masks[k-1] marks Omega_k = {f < -(2k-1)gamma/2 - band_tol}.
  std::vector<std::vector<char>> omega_masks;
  /// band_masks[k-1] marks {|f + (2k-1)gamma/2| <= band_tol}.
  std::vector<std::vector<char>> band_masks;
  std::vector<double> omega_areas;
  std::vector<double> band_areas;
  /// level_stats[k]: D on Omega_k minus Omega_{k+1} and the bands at its ends.
  std::vector<RegionStats> level_stats;
  /// band_stats[k-1]: D on coincidence band k.
  std::vector<RegionStats> band_stats;
  /// Same, restricted to band nodes whose four neighbours are band nodes too.
  std::vector<RegionStats> band_core_stats;
};

/// Default band tolerance 10*tol + gamma*h^2.
double default_band_tol(const DualSolution& sol, double tol);

RegimeReport classify_regions(const DualSolution& sol, double band_tol);

struct DualityReport {
  /// ||hbar(D) - (f + lambda)||_2 / ||hbar||_2 over interior nodes.
  double relative_mismatch = 0.0;
  /// Direct limit energy E1(hbar) + pi gamma int phi(D).
  double e0 = 0.0;
  double e1 = 0.0;
  double dual_objective = 0.0;
  /// e0 + dual_objective; zero for an exact primal-dual pair.
  double duality_gap = 0.0;
  bool passed = false;
  ScalarField hbar;
  VorticityField vorticity;
};

/// Recovers D, solves the London equation with source 2 pi D and boundary
/// value lambda, and compares with f + lambda.
DualityReport verify_duality(const DualSolution& sol, double tol);

}  // namespace vortexhom
