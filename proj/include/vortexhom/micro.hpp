#pragma once

// Microscale side: integer degrees on an eps-lattice of holes.
//
// A hole j with degree d_j is represented by the vorticity D^eps = d_j spread
// uniformly over its eps x eps cell. Its energy is
//   E1(hbar) + pi gamma eps^2 sum d_j^2,
// where hbar solves -Delta hbar + hbar = 2 pi D^eps with hbar = lambda on the
// boundary. The holes themselves (diameter 2 exp(-gamma/eps^2)) are far below
// grid resolution; the second term carries their self-energy.

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "vortexhom/dual.hpp"
#include "vortexhom/grid.hpp"

namespace vortexhom {

struct Hole {
  int ix = 0;
  int iy = 0;
  double cx = 0.0;
  double cy = 0.0;
  /// (node, fraction of the node's h x h control cell covered by this hole's cell)
  std::vector<std::pair<int, double>> coverage;
};

class MicroProblem {
 public:
  const GridDomain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  double epsilon() const noexcept { return epsilon_; }
  double lambda() const noexcept { return lambda_; }
  double gamma() const noexcept { return gamma_; }
  /// Hole radius exp(-gamma/eps^2); metadata only.
  double hole_radius() const;

  int cells_per_side() const noexcept { return cells_; }
  int num_holes() const noexcept { return static_cast<int>(holes_.size()); }
  const std::vector<Hole>& holes() const noexcept { return holes_; }
  /// Hole index of lattice cell (ix, iy), or -1 when the cell is not inside.
  int hole_at(int ix, int iy) const;
  /// Hole index whose cell contains the node, or -1.
  int cell_of_node(int node) const { return cellmap_[node]; }
  /// Lower-left corner of lattice cell (0, 0).
  double lattice_x0() const noexcept { return lx0_; }
  double lattice_y0() const noexcept { return ly0_; }

  friend MicroProblem build_micro(DomainPtr domain, double epsilon, double lambda, double gamma);

 private:
  DomainPtr domain_;
  double epsilon_ = 0.0;
  double lambda_ = 0.0;
  double gamma_ = 0.0;
  int cells_ = 0;
  double lx0_ = 0.0;
  double ly0_ = 0.0;
  std::vector<Hole> holes_;
  std::vector<int> lattice_;
  std::vector<int> cellmap_;
};

/// Tiles the bounding box with eps-cells from its lower-left corner and keeps
/// the cells whose closure only touches interior control cells. Requires
/// eps >= 4h.
MicroProblem build_micro(DomainPtr domain, double epsilon, double lambda, double gamma);

struct DegreeAssignment {
  std::vector<int> d;

  long sum_squares() const;
  /// eps^2 * sum d_j^2.
  double scaled_sum_squares(double epsilon) const;
};

struct MicroEnergyBreakdown {
  double field_part = 0.0;
  double self_part = 0.0;
  double total = 0.0;
};

/// Nodal D^eps for an assignment.
ScalarField spread_vorticity(const MicroProblem& problem, const DegreeAssignment& degrees);

MicroEnergyBreakdown micro_energy(const MicroProblem& problem, const DegreeAssignment& degrees,
                                  double solve_tol = 1e-11);

/// The energy as a quadratic form 1/2 d^T Q d + b^T d + c (self term included in Q).
struct MicroQuadratic {
  int size = 0;
  std::vector<double> q;  // row-major size x size
  std::vector<double> b;
  double c = 0.0;

  double at(int i, int j) const { return q[static_cast<std::size_t>(i) * size + j]; }
  double energy(std::span<const int> d) const;
};

/// One sparse factorization plus one solve per hole.
MicroQuadratic build_quadratic(const MicroProblem& problem, int threads = 1);

struct MinimizeOptions {
  enum class Mode { descent, exact };
  Mode mode = Mode::descent;
  /// exact mode refuses problems with more holes.
  int max_holes = 9;
  /// exact mode searches d_j in [-d_max, d_max].
  int d_max = 2;
  int threads = 1;
};

struct MinimizeResult {
  DegreeAssignment degrees;
  MicroEnergyBreakdown energy;
  /// Energy of the quadratic model at the returned degrees.
  double model_energy = 0.0;
  long moves = 0;
};

/// Descent: lexicographic first-improvement +-1 coordinate moves from zero
/// until no single move lowers the energy. Exact: exhaustive search.
MinimizeResult minimize_degrees(const MicroProblem& problem, const MinimizeOptions& opts = {});

/// Same, reusing a precomputed quadratic model.
MinimizeResult minimize_degrees(const MicroProblem& problem, const MicroQuadratic& model,
                                const MinimizeOptions& opts = {});

/// Blocks of (2M+1) x (2M+1) holes on the lattice, centred in the box.
struct BlockTiling {
  int block = 0;        // 2M + 1
  int offset = 0;       // first lattice index covered
  int blocks_per_side = 0;
  /// valid[by * blocks_per_side + bx]: every hole of the block is inside.
  std::vector<char> valid;

  /// Holes of block (bx, by) in serpentine order.
  std::vector<int> holes_in(const MicroProblem& problem, int bx, int by) const;
};

BlockTiling block_tiling(const MicroProblem& problem, int m);

/// Upper-bound construction: per inside block, mean D_k = alpha d_k + (1-alpha)(d_k+1),
/// floor(alpha (2M+1)^2) holes get d_k and the rest d_k + 1; holes outside
/// blocks get 0. Block means within 1e-6 of an integer count as that integer.
DegreeAssignment recovery_sequence(const MicroProblem& problem, const ScalarField& target_d,
                                   int m);

struct BlockPartition {
  int bx = 0;
  int by = 0;
  std::map<int, int> counts;  // degree -> number of holes
  double area = 0.0;
  double mean_degree = 0.0;
  /// Mean of the target field over the block (filled by callers that have one).
  double target_mean = 0.0;
};

struct EmpiricalPartition {
  BlockTiling tiling;
  std::vector<BlockPartition> blocks;
  /// Nodal mu_k; nodes outside covered blocks carry mu_0 = 1.
  std::map<int, ScalarField> mu;
  /// Nodal sum_k k mu_k.
  ScalarField d_blocks;

  /// int mu_k over the covered blocks.
  double integral(int k) const;
};

EmpiricalPartition empirical_partition(const MicroProblem& problem,
                                       const DegreeAssignment& degrees, int m);

/// Mean of a nodal field over a block, weighted by hole coverage.
double block_mean(const MicroProblem& problem, const BlockTiling& tiling, const ScalarField& field,
                  int bx, int by);

struct GammaCheckOptions {
  int m = 1;
  DualSolveOptions dual;
  int threads = 1;
};

struct GammaRow {
  double epsilon = 0.0;
  int holes = 0;
  double micro_energy = 0.0;
  double e0 = 0.0;
  double gap = 0.0;
  double degree_bound = 0.0;  // eps^2 sum d_j^2
  double vorticity_error = 0.0;
  long moves = 0;
  bool valid = false;
};

struct GammaReport {
  double lambda = 0.0;
  double gamma = 0.0;
  double e0 = 0.0;
  std::vector<GammaRow> rows;
};

/// Minimized micro energy per eps against the limit minimum E0(D*) from the
/// dual solver. Requires epsilons strictly decreasing.
GammaReport gamma_convergence_report(const DomainPtr& domain, double lambda, double gamma,
                                     const std::vector<double>& epsilons,
                                     const GammaCheckOptions& opts = {});

}  // namespace vortexhom
