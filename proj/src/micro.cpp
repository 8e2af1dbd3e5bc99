#include "vortexhom/micro.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "vortexhom/elliptic.hpp"
#include "vortexhom/errors.hpp"
#include "vortexhom/multiplicity.hpp"

namespace vortexhom {

namespace {

constexpr double kPi = std::numbers::pi;

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

template <class F>
void parallel_for(int count, int threads, F&& fn) {
  const int nt = std::max(1, std::min(threads, count));
  if (nt == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

double MicroProblem::hole_radius() const { return std::exp(-gamma_ / (epsilon_ * epsilon_)); }

int MicroProblem::hole_at(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= cells_ || iy >= cells_) return -1;
  return lattice_[static_cast<std::size_t>(iy) * cells_ + ix];
}

MicroProblem build_micro(DomainPtr domain, double epsilon, double lambda, double gamma) {
  const GridDomain& dom = *domain;
  const double h = dom.h();
  if (!(epsilon >= 4.0 * h * (1.0 - 1e-9))) {
    throw PreconditionError("build_micro: epsilon must be at least 4 grid spacings");
  }
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");

  MicroProblem p;
  p.domain_ = domain;
  p.epsilon_ = epsilon;
  p.lambda_ = lambda;
  p.gamma_ = gamma;
  p.lx0_ = dom.x0();
  p.ly0_ = dom.y0();
  p.cells_ = static_cast<int>(std::floor(dom.box_side() / epsilon + 1e-9));
  p.lattice_.assign(static_cast<std::size_t>(p.cells_) * p.cells_, -1);
  p.cellmap_.assign(dom.size(), -1);
  std::vector<double> best(dom.size(), 0.0);

  const double tiny = 1e-12 * h * h;
  for (int iy = 0; iy < p.cells_; ++iy) {
    for (int ix = 0; ix < p.cells_; ++ix) {
      const double xa = p.lx0_ + ix * epsilon;
      const double xb = xa + epsilon;
      const double ya = p.ly0_ + iy * epsilon;
      const double yb = ya + epsilon;
      const int c0 = std::max(0, static_cast<int>(std::floor((xa - dom.x0()) / h - 0.5)));
      const int c1 = std::min(dom.cols() - 1, static_cast<int>(std::ceil((xb - dom.x0()) / h + 0.5)));
      const int r0 = std::max(0, static_cast<int>(std::floor((ya - dom.y0()) / h - 0.5)));
      const int r1 = std::min(dom.rows() - 1, static_cast<int>(std::ceil((yb - dom.y0()) / h + 0.5)));
      Hole hole{ix, iy, 0.5 * (xa + xb), 0.5 * (ya + yb), {}};
      bool inside = true;
      for (int r = r0; r <= r1 && inside; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const int node = r * dom.cols() + c;
          const double x = dom.x(node);
          const double y = dom.y(node);
          const double a = overlap(xa, xb, x - 0.5 * h, x + 0.5 * h) *
                           overlap(ya, yb, y - 0.5 * h, y + 0.5 * h);
          if (a <= tiny) continue;
          if (!dom.is_interior(node)) {
            inside = false;
            break;
          }
          hole.coverage.emplace_back(node, a / (h * h));
        }
      }
      if (!inside) continue;
      const int idx = static_cast<int>(p.holes_.size());
      p.lattice_[static_cast<std::size_t>(iy) * p.cells_ + ix] = idx;
      for (const auto& [node, w] : hole.coverage) {
        if (w > best[node]) {
          best[node] = w;
          p.cellmap_[node] = idx;
        }
      }
      p.holes_.push_back(std::move(hole));
    }
  }
  return p;
}

long DegreeAssignment::sum_squares() const {
  long s = 0;
  for (int v : d) s += static_cast<long>(v) * v;
  return s;
}

double DegreeAssignment::scaled_sum_squares(double epsilon) const {
  return epsilon * epsilon * static_cast<double>(sum_squares());
}

ScalarField spread_vorticity(const MicroProblem& problem, const DegreeAssignment& degrees) {
  if (static_cast<int>(degrees.d.size()) != problem.num_holes()) {
    throw PreconditionError("degree count does not match the number of holes");
  }
  ScalarField out(problem.domain_ptr(), 0.0);
  for (int j = 0; j < problem.num_holes(); ++j) {
    if (degrees.d[j] == 0) continue;
    for (const auto& [node, w] : problem.holes()[j].coverage) out[node] += degrees.d[j] * w;
  }
  return out;
}

MicroEnergyBreakdown micro_energy(const MicroProblem& problem, const DegreeAssignment& degrees,
                                  double solve_tol) {
  ScalarField source = spread_vorticity(problem, degrees);
  for (int node : problem.domain().interior_nodes()) source[node] *= 2.0 * kPi;
  LondonSolveOptions lo;
  lo.tol = solve_tol;
  const ScalarField hbar = solve_london(source, problem.lambda(), lo);
  MicroEnergyBreakdown e;
  e.field_part = energy_e1(hbar, problem.lambda());
  e.self_part = kPi * problem.gamma() * degrees.scaled_sum_squares(problem.epsilon());
  e.total = e.field_part + e.self_part;
  return e;
}

double MicroQuadratic::energy(std::span<const int> d) const {
  double e = c;
  for (int i = 0; i < size; ++i) {
    if (d[i] == 0) continue;
    double row = 0.0;
    for (int j = 0; j < size; ++j) row += at(i, j) * d[j];
    e += 0.5 * d[i] * row + b[i] * d[i];
  }
  return e;
}

MicroQuadratic build_quadratic(const MicroProblem& problem, int threads) {
  const GridDomain& dom = problem.domain();
  const int n = problem.num_holes();
  const double h2 = dom.h() * dom.h();
  const double eps2 = problem.epsilon() * problem.epsilon();
  MicroQuadratic model;
  model.size = n;
  model.q.assign(static_cast<std::size_t>(n) * n, 0.0);
  model.b.assign(n, 0.0);
  if (dom.num_interior() == 0) return model;

  const LondonFactorization factor(problem.domain_ptr());
  auto dot_hole = [&](int i, const std::vector<double>& v) {
    double s = 0.0;
    for (const auto& [node, w] : problem.holes()[i].coverage) s += w * v[dom.unknown_of(node)];
    return s;
  };

  const std::vector<double> ones(dom.num_interior(), 1.0);
  const std::vector<double> r0 = factor.solve(ones);
  double sum_r0 = 0.0;
  for (double v : r0) sum_r0 += v;
  model.c = 0.5 * h2 * problem.lambda() * problem.lambda() * sum_r0;
  for (int i = 0; i < n; ++i) model.b[i] = -h2 * 2.0 * kPi * problem.lambda() * dot_hole(i, r0);

  parallel_for(n, threads, [&](int j) {
    std::vector<double> rhs(dom.num_interior(), 0.0);
    for (const auto& [node, w] : problem.holes()[j].coverage) rhs[dom.unknown_of(node)] = w;
    const std::vector<double> resp = factor.solve(rhs);
    for (int i = 0; i < n; ++i) {
      model.q[static_cast<std::size_t>(i) * n + j] = h2 * 4.0 * kPi * kPi * dot_hole(i, resp);
    }
  });
  // Symmetrize round-off. The self term pi gamma eps^2 d_j^2 adds 2 pi gamma eps^2 to Q_jj.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (model.q[static_cast<std::size_t>(i) * n + j] +
                                model.q[static_cast<std::size_t>(j) * n + i]);
      model.q[static_cast<std::size_t>(i) * n + j] = avg;
      model.q[static_cast<std::size_t>(j) * n + i] = avg;
    }
    model.q[static_cast<std::size_t>(i) * n + i] += 2.0 * kPi * problem.gamma() * eps2;
  }
  return model;
}

namespace {

MinimizeResult descend(const MicroQuadratic& model) {
  const int n = model.size;
  MinimizeResult res;
  res.degrees.d.assign(n, 0);
  std::vector<double> grad = model.b;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int j = 0; j < n; ++j) {
      const double qjj = model.at(j, j);
      for (int s : {1, -1}) {
        const double delta = s * grad[j] + 0.5 * qjj;
        if (delta < -1e-12 * qjj) {
          res.degrees.d[j] += s;
          for (int i = 0; i < n; ++i) grad[i] += s * model.at(i, j);
          ++res.moves;
          improved = true;
          break;
        }
      }
    }
  }
  return res;
}

// Reflected mixed-radix Gray code over [-dmax, dmax]^n: each step moves one
// coordinate by +-1, so the energy is updated in O(n).
MinimizeResult exhaustive(const MicroQuadratic& model, int dmax) {
  const int n = model.size;
  const int radix = 2 * dmax + 1;
  std::vector<int> d(n, -dmax);
  std::vector<int> focus(n + 1), dir(n, 1), digit(n, 0);
  for (int j = 0; j <= n; ++j) focus[j] = j;

  std::vector<double> grad(n);
  for (int i = 0; i < n; ++i) {
    double row = model.b[i];
    for (int j = 0; j < n; ++j) row += model.at(i, j) * d[j];
    grad[i] = row;
  }
  double energy = model.energy(d);
  double best = energy;
  std::vector<int> best_d = d;
  long visited = 1;
  while (true) {
    const int j = focus[0];
    focus[0] = 0;
    if (j == n) break;
    const int s = dir[j];
    energy += s * grad[j] + 0.5 * model.at(j, j);
    d[j] += s;
    digit[j] += s;
    for (int i = 0; i < n; ++i) grad[i] += s * model.at(i, j);
    ++visited;
    if (energy < best) {
      best = energy;
      best_d = d;
    }
    if (digit[j] == 0 || digit[j] == radix - 1) {
      dir[j] = -dir[j];
      focus[j] = focus[j + 1];
      focus[j + 1] = j + 1;
    }
  }
  MinimizeResult res;
  res.degrees.d = best_d;
  res.moves = visited;
  return res;
}

}  // namespace

MinimizeResult minimize_degrees(const MicroProblem& problem, const MicroQuadratic& model,
                                const MinimizeOptions& opts) {
  if (model.size != problem.num_holes()) {
    throw PreconditionError("minimize_degrees: model does not match the problem");
  }
  MinimizeResult res;
  if (opts.mode == MinimizeOptions::Mode::exact) {
    if (problem.num_holes() > opts.max_holes) {
      throw PreconditionError("minimize_degrees: exact mode refused, " +
                              std::to_string(problem.num_holes()) + " holes exceed the cap of " +
                              std::to_string(opts.max_holes));
    }
    if (opts.d_max < 0) throw PreconditionError("minimize_degrees: d_max must be nonnegative");
    res = exhaustive(model, opts.d_max);
  } else {
    res = descend(model);
  }
  res.model_energy = model.energy(res.degrees.d);
  res.energy = micro_energy(problem, res.degrees);
  return res;
}

MinimizeResult minimize_degrees(const MicroProblem& problem, const MinimizeOptions& opts) {
  if (opts.mode == MinimizeOptions::Mode::exact && problem.num_holes() > opts.max_holes) {
    throw PreconditionError("minimize_degrees: exact mode refused, " +
                            std::to_string(problem.num_holes()) + " holes exceed the cap of " +
                            std::to_string(opts.max_holes));
  }
  const MicroQuadratic model = build_quadratic(problem, opts.threads);
  return minimize_degrees(problem, model, opts);
}

std::vector<int> BlockTiling::holes_in(const MicroProblem& problem, int bx, int by) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(block) * block);
  for (int r = 0; r < block; ++r) {
    for (int k = 0; k < block; ++k) {
      const int c = (r % 2 == 0) ? k : block - 1 - k;
      out.push_back(problem.hole_at(offset + bx * block + c, offset + by * block + r));
    }
  }
  return out;
}

BlockTiling block_tiling(const MicroProblem& problem, int m) {
  if (m < 1) throw PreconditionError("block size parameter M must be at least 1");
  BlockTiling t;
  t.block = 2 * m + 1;
  const int cells = problem.cells_per_side();
  t.offset = (cells % t.block) / 2;
  t.blocks_per_side = (cells - t.offset) / t.block;
  t.valid.assign(static_cast<std::size_t>(t.blocks_per_side) * t.blocks_per_side, 0);
  for (int by = 0; by < t.blocks_per_side; ++by) {
    for (int bx = 0; bx < t.blocks_per_side; ++bx) {
      const auto holes = t.holes_in(problem, bx, by);
      t.valid[static_cast<std::size_t>(by) * t.blocks_per_side + bx] =
          std::all_of(holes.begin(), holes.end(), [](int j) { return j >= 0; });
    }
  }
  return t;
}

double block_mean(const MicroProblem& problem, const BlockTiling& tiling, const ScalarField& field,
                  int bx, int by) {
  double num = 0.0;
  double den = 0.0;
  for (int j : tiling.holes_in(problem, bx, by)) {
    if (j < 0) continue;
    for (const auto& [node, w] : problem.holes()[j].coverage) {
      num += w * field[node];
      den += w;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

constexpr double kIntegerSnap = 1e-6;

DegreeAssignment recovery_sequence(const MicroProblem& problem, const ScalarField& target_d,
                                   int m) {
  if (&target_d.domain() != &problem.domain()) {
    throw PreconditionError("recovery_sequence: target lives on another domain");
  }
  const BlockTiling t = block_tiling(problem, m);
  DegreeAssignment out;
  out.d.assign(problem.num_holes(), 0);
  const int cells = t.block * t.block;
  for (int by = 0; by < t.blocks_per_side; ++by) {
    for (int bx = 0; bx < t.blocks_per_side; ++bx) {
      if (!t.valid[static_cast<std::size_t>(by) * t.blocks_per_side + bx]) continue;
      double mean = block_mean(problem, t, target_d, bx, by);
      // Solver noise around an integer mean must not plant a stray vortex.
      if (std::abs(mean - std::round(mean)) <= kIntegerSnap) mean = std::round(mean);
      const int lower = static_cast<int>(std::floor(mean));
      const double alpha = lower + 1.0 - mean;  // mean = alpha*lower + (1-alpha)*(lower+1)
      const int keep_lower = static_cast<int>(std::floor(alpha * cells + 1e-12));
      const int raised = cells - keep_lower;
      const auto holes = t.holes_in(problem, bx, by);
      // Spread the raised holes evenly along the serpentine order.
      for (int p = 0; p < cells; ++p) {
        const bool up = (static_cast<long>(p + 1) * raised) / cells -
                            (static_cast<long>(p) * raised) / cells ==
                        1;
        out.d[holes[p]] = up ? lower + 1 : lower;
      }
    }
  }
  return out;
}

double EmpiricalPartition::integral(int k) const {
  double s = 0.0;
  for (const auto& b : blocks) {
    auto it = b.counts.find(k);
    if (it == b.counts.end()) continue;
    s += b.area * it->second / static_cast<double>(tiling.block * tiling.block);
  }
  return s;
}

EmpiricalPartition empirical_partition(const MicroProblem& problem,
                                       const DegreeAssignment& degrees, int m) {
  if (static_cast<int>(degrees.d.size()) != problem.num_holes()) {
    throw PreconditionError("degree count does not match the number of holes");
  }
  EmpiricalPartition out;
  out.tiling = block_tiling(problem, m);
  const BlockTiling& t = out.tiling;
  const double side = t.block * problem.epsilon();
  const int cells = t.block * t.block;

  for (int by = 0; by < t.blocks_per_side; ++by) {
    for (int bx = 0; bx < t.blocks_per_side; ++bx) {
      if (!t.valid[static_cast<std::size_t>(by) * t.blocks_per_side + bx]) continue;
      BlockPartition bp;
      bp.bx = bx;
      bp.by = by;
      bp.area = side * side;
      long sum = 0;
      for (int j : t.holes_in(problem, bx, by)) {
        ++bp.counts[degrees.d[j]];
        sum += degrees.d[j];
      }
      bp.mean_degree = static_cast<double>(sum) / cells;
      out.blocks.push_back(std::move(bp));
    }
  }

  // Nodal fields: a node belongs to the block whose closed square contains it
  // (first match on shared edges).
  const GridDomain& dom = problem.domain();
  out.d_blocks = ScalarField(problem.domain_ptr(), 0.0);
  std::vector<int> owner(dom.size(), -1);
  for (std::size_t b = 0; b < out.blocks.size(); ++b) {
    const double x0 = problem.lattice_x0() + (t.offset + out.blocks[b].bx * t.block) * problem.epsilon();
    const double y0 = problem.lattice_y0() + (t.offset + out.blocks[b].by * t.block) * problem.epsilon();
    const double slack = 1e-9 * dom.h();
    for (int node : dom.interior_nodes()) {
      if (owner[node] >= 0) continue;
      const double x = dom.x(node);
      const double y = dom.y(node);
      if (x >= x0 - slack && x <= x0 + side + slack && y >= y0 - slack && y <= y0 + side + slack) {
        owner[node] = static_cast<int>(b);
      }
    }
  }
  for (const auto& b : out.blocks) {
    for (const auto& [k, cnt] : b.counts) {
      if (!out.mu.count(k)) out.mu.emplace(k, ScalarField(problem.domain_ptr(), 0.0));
    }
  }
  if (!out.mu.count(0)) out.mu.emplace(0, ScalarField(problem.domain_ptr(), 0.0));
  for (int node : dom.interior_nodes()) {
    if (owner[node] < 0) {
      out.mu.at(0)[node] = 1.0;
      continue;
    }
    const auto& b = out.blocks[owner[node]];
    for (const auto& [k, cnt] : b.counts) out.mu.at(k)[node] = static_cast<double>(cnt) / cells;
    out.d_blocks[node] = b.mean_degree;
  }
  return out;
}

GammaReport gamma_convergence_report(const DomainPtr& domain, double lambda, double gamma,
                                     const std::vector<double>& epsilons,
                                     const GammaCheckOptions& opts) {
  if (epsilons.empty()) throw PreconditionError("gamma check: no epsilons given");
  for (std::size_t i = 1; i < epsilons.size(); ++i) {
    if (!(epsilons[i] < epsilons[i - 1])) {
      throw PreconditionError("gamma check: epsilons must be strictly decreasing");
    }
  }
  for (double e : epsilons) {
    if (!(e >= 4.0 * domain->h() * (1.0 - 1e-9))) {
      throw PreconditionError("gamma check: epsilon below 4 grid spacings");
    }
  }

  GammaReport rep;
  rep.lambda = lambda;
  rep.gamma = gamma;
  const DualSolution sol = solve_dual(domain, lambda, gamma, DualMode::full(), opts.dual);
  if (!sol.converged) throw SolverError("gamma check: dual solve did not converge", sol.last_update, sol.iterations);
  const DualityReport dr = verify_duality(sol, 1.0);
  rep.e0 = dr.e0;
  const ScalarField& dstar = dr.vorticity.d;
  const GridDomain& dom = *domain;
  const double h2 = dom.h() * dom.h();

  for (double eps : epsilons) {
    GammaRow row;
    row.epsilon = eps;
    const MicroProblem problem = build_micro(domain, eps, lambda, gamma);
    row.holes = problem.num_holes();
    MinimizeOptions mo;
    mo.threads = opts.threads;
    const MinimizeResult res = minimize_degrees(problem, mo);
    row.micro_energy = res.energy.total;
    row.e0 = rep.e0;
    row.gap = row.micro_energy - rep.e0;
    row.degree_bound = res.degrees.scaled_sum_squares(eps);
    row.moves = res.moves;
    const EmpiricalPartition part = empirical_partition(problem, res.degrees, opts.m);
    double err2 = 0.0;
    for (int node : dom.interior_nodes()) {
      const double e = part.d_blocks[node] - dstar[node];
      err2 += e * e;
    }
    row.vorticity_error = std::sqrt(err2 * h2);
    row.valid = true;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace vortexhom
