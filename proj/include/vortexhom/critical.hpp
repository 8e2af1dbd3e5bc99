#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "vortexhom/dual.hpp"
#include "vortexhom/grid.hpp"

namespace vortexhom {

/// Rescaled external field lambda (h_ext = lambda / eps^2); never negative.
class FieldStrength {
 public:
  explicit FieldStrength(double lambda);
  double value() const noexcept { return lambda_; }

 private:
  double lambda_;
};

/// Field t_j = 2 pi j + (j - 1/2) gamma above which level j saturates.
double scenario_threshold(int j, double gamma);

/// gamma / (2 max|f1|), where f1 solves Delta f = f + 1 with f = 0 on the boundary.
double lambda_cr1(const DomainPtr& domain, double gamma, double solve_tol = 1e-11);

struct CriticalValue {
  int level = 1;
  double lambda = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double tol = 0.0;
  int evaluations = 0;
  /// max|g| - (2j-1) gamma / 2 at the returned lambda.
  double residual = 0.0;
};

struct CriticalOptions {
  double lambda_tol = 1e-6;
  DualSolveOptions dual;
  double lambda_cr1_solve_tol = 1e-11;
};

/// lambda_crj = max{lambda : max|g_lambda| <= (2j-1) gamma / 2} with g the
/// minimizer of the dual functional truncated to j-1 kink terms, found by
/// bisection. j = 1 returns the closed form. Without a bracket the default
/// [lambda_cr(j-1), lambda_cr(j-1) + 4 pi + 2 gamma] is used. Throws
/// PreconditionError when the bracket does not straddle the root.
CriticalValue lambda_cr_j(const DomainPtr& domain, double gamma, int j,
                          std::optional<std::pair<double, double>> bracket = std::nullopt,
                          const CriticalOptions& opts = {});

struct CriticalLadder {
  double gamma = 0.0;
  std::vector<CriticalValue> values;
  std::vector<double> thresholds;

  bool strictly_increasing() const;
};

CriticalLadder critical_ladder(const DomainPtr& domain, double gamma, int levels,
                               const CriticalOptions& opts = {});

struct PhaseRow {
  double lambda = 0.0;
  bool valid = false;
  int deepest_level = 0;
  Scenario scenario = Scenario::vortex_free;
  std::vector<double> omega_areas;
  std::vector<double> band_areas;
  double max_abs_f = 0.0;
};

/// One full-penalty solve per lambda. Rows are independent, so they are
/// spread over `threads` workers without changing the results.
std::vector<PhaseRow> phase_diagram(const DomainPtr& domain, double gamma,
                                    const std::vector<double>& lambda_grid,
                                    const DualSolveOptions& dual = {}, int threads = 1);

}  // namespace vortexhom
