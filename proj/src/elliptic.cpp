#include "vortexhom/elliptic.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vortexhom/errors.hpp"

namespace vortexhom {

void apply_scaled_operator(const GridDomain& domain, std::span<const double> w,
                           std::span<double> out) {
  const int n = domain.num_interior();
  for (int u = 0; u < n; ++u) {
    double acc = domain.scaled_diagonal(u) * w[u];
    for (const auto& link : domain.links(u)) {
      if (link.unknown >= 0) acc -= w[link.unknown];
    }
    out[u] = acc;
  }
}

ScalarField solve_london(const ScalarField& source, double dirichlet,
                         const LondonSolveOptions& opts, LondonSolveInfo* info) {
  const GridDomain& dom = source.domain();
  if (!(opts.tol > 0.0)) throw PreconditionError("solve_london: tol must be positive");
  const int n = dom.num_interior();
  const double h2 = dom.h() * dom.h();

  // Unknown w = u - dirichlet solves A w = source - dirichlet.
  double src_norm = 0.0;
  std::vector<double> b(n);
  for (int u = 0; u < n; ++u) {
    const double s = source[dom.interior_nodes()[u]];
    if (!std::isfinite(s)) throw PreconditionError("solve_london: source is not finite");
    src_norm = std::max(src_norm, std::abs(s));
    b[u] = h2 * (s - dirichlet);
  }
  const double target = opts.tol * (1.0 + src_norm) * h2;

  std::vector<double> x(n, 0.0), r(b), z(n), p(n), q(n);
  auto max_abs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };
  for (int u = 0; u < n; ++u) z[u] = r[u] / dom.scaled_diagonal(u);
  p = z;
  double rz = 0.0;
  for (int u = 0; u < n; ++u) rz += r[u] * z[u];

  long it = 0;
  // Worst residual in units of the round-off of evaluating its own row; only
  // rows above the target count. Converged at <= 16.
  constexpr double eps = std::numeric_limits<double>::epsilon();
  auto roundoff_ratio = [&]() {
    double worst = 0.0;
    for (int u = 0; u < n; ++u) {
      const double excess = std::abs(r[u]) - target;
      if (excess <= 0.0) continue;
      double row = dom.scaled_diagonal(u) * std::abs(x[u]) + std::abs(b[u]);
      for (const auto& link : dom.links(u)) {
        if (link.unknown >= 0) row += std::abs(x[link.unknown]);
      }
      worst = std::max(worst, excess / (eps * row));
    }
    return worst;
  };
  // CG cannot push the true residual below its attainable accuracy, which on
  // fine grids sits a few times above the row round-off. When the refreshed
  // residual stops improving at that level, the solve is done.
  constexpr double kStallRatio = 1e4;
  constexpr int kStallRefreshes = 5;
  double best_ratio = INFINITY;
  int stalled = 0;
  double res = max_abs(r);
  bool done = roundoff_ratio() <= 16.0;
  while (!done) {
    if (it >= opts.max_iterations) {
      throw SolverError("solve_london: no convergence, residual " + std::to_string(res / h2),
                        res / h2, it);
    }
    apply_scaled_operator(dom, p, q);
    double pq = 0.0;
    for (int u = 0; u < n; ++u) pq += p[u] * q[u];
    const double alpha = rz / pq;
    for (int u = 0; u < n; ++u) {
      x[u] += alpha * p[u];
      r[u] -= alpha * q[u];
    }
    ++it;
    // Refresh the recursive residual now and then to avoid drift.
    bool refreshed = false;
    if (it % 200 == 0) {
      apply_scaled_operator(dom, x, q);
      for (int u = 0; u < n; ++u) r[u] = b[u] - q[u];
      refreshed = true;
    }
    const double ratio = roundoff_ratio();
    done = ratio <= 16.0;
    if (refreshed && !done) {
      if (ratio < 0.5 * best_ratio) {
        best_ratio = ratio;
        stalled = 0;
      } else if (++stalled >= kStallRefreshes && ratio <= kStallRatio) {
        done = true;
      }
    }
    res = max_abs(r);
    double rz_new = 0.0;
    for (int u = 0; u < n; ++u) {
      z[u] = r[u] / dom.scaled_diagonal(u);
      rz_new += r[u] * z[u];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int u = 0; u < n; ++u) p[u] = z[u] + beta * p[u];
  }

  ScalarField out(source.domain_ptr(), dirichlet);
  for (int u = 0; u < n; ++u) out[dom.interior_nodes()[u]] = dirichlet + x[u];
  if (info) {
    info->iterations = it;
    info->residual = res / h2;
  }
  return out;
}

ScalarField solve_london(const ScalarField& source, double dirichlet, double tol) {
  LondonSolveOptions opts;
  opts.tol = tol;
  return solve_london(source, dirichlet, opts);
}

ScalarField apply_london(const ScalarField& u) {
  const GridDomain& dom = u.domain();
  const double h2 = dom.h() * dom.h();
  ScalarField out(u.domain_ptr(), 0.0);
  for (int k = 0; k < dom.num_interior(); ++k) {
    const int node = dom.interior_nodes()[k];
    double acc = dom.scaled_diagonal(k) * u[node];
    for (const auto& link : dom.links(k)) acc -= link.weight * u[link.node];
    out[node] = acc / h2;
  }
  return out;
}

double energy_e1(const ScalarField& hbar, double lambda) {
  const GridDomain& dom = hbar.domain();
  const double h2 = dom.h() * dom.h();
  double grad = 0.0;
  double mass = 0.0;
  for (int k = 0; k < dom.num_interior(); ++k) {
    const int node = dom.interior_nodes()[k];
    const double v = hbar[node];
    for (const auto& link : dom.links(k)) {
      // Interior-interior edges are visited from both ends; count once.
      if (link.unknown >= 0 && link.unknown < k) continue;
      const double dv = v - hbar[link.node];
      grad += link.weight * dv * dv;
    }
    mass += (v - lambda) * (v - lambda);
  }
  return 0.5 * grad + 0.5 * h2 * mass;
}

struct LondonFactorization::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

LondonFactorization::LondonFactorization(DomainPtr domain)
    : domain_(std::move(domain)), impl_(std::make_unique<Impl>()) {
  const GridDomain& dom = *domain_;
  const int n = dom.num_interior();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  for (int u = 0; u < n; ++u) {
    trips.emplace_back(u, u, dom.scaled_diagonal(u));
    for (const auto& link : dom.links(u)) {
      if (link.unknown >= 0) trips.emplace_back(u, link.unknown, -1.0);
    }
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  impl_->ldlt.compute(m);
  if (impl_->ldlt.info() != Eigen::Success) {
    throw SolverError("LondonFactorization: factorization failed", 0.0, 0);
  }
}

LondonFactorization::~LondonFactorization() = default;
LondonFactorization::LondonFactorization(LondonFactorization&&) noexcept = default;
LondonFactorization& LondonFactorization::operator=(LondonFactorization&&) noexcept = default;

std::vector<double> LondonFactorization::solve(std::span<const double> rhs) const {
  const int n = domain_->num_interior();
  if (static_cast<int>(rhs.size()) != n) {
    throw PreconditionError("LondonFactorization: rhs has the wrong length");
  }
  const double h2 = domain_->h() * domain_->h();
  Eigen::VectorXd b(n);
  for (int u = 0; u < n; ++u) b[u] = h2 * rhs[u];
  Eigen::VectorXd x = impl_->ldlt.solve(b);
  return std::vector<double>(x.data(), x.data() + n);
}

}  // namespace vortexhom
