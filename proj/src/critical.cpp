#include "vortexhom/critical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "vortexhom/elliptic.hpp"
#include "vortexhom/errors.hpp"

namespace vortexhom {

FieldStrength::FieldStrength(double lambda) : lambda_(lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) throw DomainError("lambda must be nonnegative");
}

double scenario_threshold(int j, double gamma) {
  return 2.0 * std::numbers::pi * j + (j - 0.5) * gamma;
}

double lambda_cr1(const DomainPtr& domain, double gamma, double solve_tol) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  ScalarField source(domain, -1.0);
  LondonSolveOptions lo;
  lo.tol = solve_tol;
  const ScalarField f1 = solve_london(source, 0.0, lo);
  const double m = f1.max_abs_interior();
  if (!(m > 0.0)) throw SolverError("lambda_cr1: degenerate domain, max|f1| = 0", 0.0, 0);
  return gamma / (2.0 * m);
}

CriticalValue lambda_cr_j(const DomainPtr& domain, double gamma, int j,
                          std::optional<std::pair<double, double>> bracket,
                          const CriticalOptions& opts) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  if (j < 1) throw PreconditionError("lambda_cr_j: level must be at least 1");
  CriticalValue out;
  out.level = j;
  if (j == 1) {
    out.lambda = lambda_cr1(domain, gamma, opts.lambda_cr1_solve_tol);
    out.bracket_lo = out.bracket_hi = out.lambda;
    return out;
  }

  double lo = 0.0;
  double hi = 0.0;
  if (bracket) {
    std::tie(lo, hi) = *bracket;
  } else {
    lo = lambda_cr_j(domain, gamma, j - 1, std::nullopt, opts).lambda;
    hi = lo + 4.0 * std::numbers::pi + 2.0 * gamma;
  }
  if (!(lo < hi)) throw PreconditionError("lambda_cr_j: empty bracket");

  const double level = (2.0 * j - 1.0) * gamma / 2.0;
  const DualMode mode = DualMode::truncated(j - 1);
  DualSolveOptions dopts = opts.dual;
  std::optional<ScalarField> warm;
  auto excess = [&](double lambda) {
    if (warm) dopts.initial = warm;
    DualSolution s = solve_dual(domain, lambda, gamma, mode, dopts);
    if (!s.converged) {
      throw SolverError("lambda_cr_j: dual solve did not converge", s.last_update, s.iterations);
    }
    ++out.evaluations;
    warm = s.f;
    return s.f.max_abs_interior() - level;
  };

  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(f_lo <= 0.0 && f_hi > 0.0)) {
    throw PreconditionError("lambda_cr_j: bracket does not straddle the root (excess " +
                            std::to_string(f_lo) + " at " + std::to_string(lo) + ", " +
                            std::to_string(f_hi) + " at " + std::to_string(hi) + ")");
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.tol = opts.lambda_tol;
  double res_lo = f_lo;
  while (hi - lo > opts.lambda_tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = excess(mid);
    if (fm <= 0.0) {
      lo = mid;
      res_lo = fm;
    } else {
      hi = mid;
    }
  }
  out.lambda = lo;
  out.residual = res_lo;
  return out;
}

bool CriticalLadder::strictly_increasing() const {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i].lambda > values[i - 1].lambda)) return false;
  }
  return true;
}

CriticalLadder critical_ladder(const DomainPtr& domain, double gamma, int levels,
                               const CriticalOptions& opts) {
  if (levels < 1) throw PreconditionError("critical_ladder: levels must be at least 1");
  CriticalLadder ladder;
  ladder.gamma = gamma;
  for (int j = 1; j <= levels; ++j) {
    std::optional<std::pair<double, double>> bracket;
    if (j > 1) {
      const double prev = ladder.values.back().lambda;
      bracket = std::make_pair(prev, prev + 4.0 * std::numbers::pi + 2.0 * gamma);
    }
    ladder.values.push_back(lambda_cr_j(domain, gamma, j, bracket, opts));
    ladder.thresholds.push_back(scenario_threshold(j, gamma));
  }
  return ladder;
}

std::vector<PhaseRow> phase_diagram(const DomainPtr& domain, double gamma,
                                    const std::vector<double>& lambda_grid,
                                    const DualSolveOptions& dual, int threads) {
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
    throw PreconditionError("phase_diagram: lambda grid must be sorted ascending");
  }
  std::vector<PhaseRow> rows(lambda_grid.size());
  auto work = [&](std::size_t i) {
    PhaseRow& row = rows[i];
    row.lambda = lambda_grid[i];
    DualSolution s = solve_dual(domain, row.lambda, gamma, DualMode::full(), dual);
    row.max_abs_f = s.f.max_abs_interior();
    if (!s.converged) return;
    const RegimeReport rep = classify_regions(s, default_band_tol(s, dual.tol));
    row.valid = true;
    row.deepest_level = rep.deepest_level;
    row.scenario = rep.scenario;
    row.omega_areas = rep.omega_areas;
    row.band_areas = rep.band_areas;
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) work(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) work(i);
    });
  }
  for (auto& th : pool) th.join();
  return rows;
}

}  // namespace vortexhom
