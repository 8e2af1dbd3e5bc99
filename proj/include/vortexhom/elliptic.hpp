#pragma once

// Five-point discretization of the London operator -Delta + 1 on a masked grid.
//
// With w = u - g for Dirichlet data g, the discrete energy
//   E1(u) = 1/2 sum_edges weight*(du)^2 + 1/2 h^2 sum_interior (u - g)^2
// equals 1/2 h^2 w^T A w, where A is the matrix applied by apply_london.
// Solver, residual operator and energy therefore share one discretization.

#include <memory>
#include <span>
#include <vector>

#include "vortexhom/grid.hpp"

namespace vortexhom {

struct LondonSolveOptions {
  double tol = 1e-10;
  long max_iterations = 200000;
};

struct LondonSolveInfo {
  long iterations = 0;
  double residual = 0.0;  // max-norm of -Delta_h u + u - source on the interior
};

/// Solves -Delta_h u + u = source on the interior with u = dirichlet on the
/// boundary, by Jacobi-preconditioned conjugate gradients. The residual
/// contract is ||r||_inf <= tol * (1 + ||source||_inf), relaxed per row by the
/// round-off of evaluating that row (16 eps_mach |row| |u| / h^2), which only
/// binds for tolerances near machine precision. If the refreshed true residual
/// stalls within 1e4 row round-offs, the solve is accepted as converged at
/// round-off. Throws SolverError when max_iterations runs out.
ScalarField solve_london(const ScalarField& source, double dirichlet,
                         const LondonSolveOptions& opts = {}, LondonSolveInfo* info = nullptr);

ScalarField solve_london(const ScalarField& source, double dirichlet, double tol);

/// -Delta_h u + u on interior nodes, using the boundary values stored in u.
/// Boundary nodes of the result are set to zero.
ScalarField apply_london(const ScalarField& u);

/// Same on an interior vector with zero boundary data; out = h^2 * A * w.
void apply_scaled_operator(const GridDomain& domain, std::span<const double> w,
                           std::span<double> out);

/// 1/2 int |grad u|^2 + 1/2 int (u - lambda)^2 with the edge/nodal quadrature above.
double energy_e1(const ScalarField& hbar, double lambda);

/// Sparse Cholesky (LDL^T) factorization of A on the interior unknowns, for
/// many right-hand sides with zero Dirichlet data.
class LondonFactorization {
 public:
  explicit LondonFactorization(DomainPtr domain);
  ~LondonFactorization();
  LondonFactorization(LondonFactorization&&) noexcept;
  LondonFactorization& operator=(LondonFactorization&&) noexcept;

  /// Returns w with A w = rhs (interior vectors, unscaled operator).
  std::vector<double> solve(std::span<const double> rhs) const;

  const GridDomain& domain() const { return *domain_; }

 private:
  struct Impl;
  DomainPtr domain_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vortexhom
