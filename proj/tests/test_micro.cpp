#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vortexhom/critical.hpp"
#include "vortexhom/errors.hpp"
#include "vortexhom/micro.hpp"

using namespace vortexhom;

namespace {

constexpr double pi = std::numbers::pi;

DomainPtr square(int n) {
  static DomainPtr s65 = build_domain(Shape::unit_square, 65);
  static DomainPtr s129 = build_domain(Shape::unit_square, 129);
  return n == 65 ? s65 : n == 129 ? s129 : build_domain(Shape::unit_square, n);
}

DegreeAssignment random_degrees(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(-2, 2);
  DegreeAssignment d;
  for (int i = 0; i < n; ++i) d.d.push_back(u(rng));
  return d;
}

// Brute force over [-dmax, dmax]^n straight from the quadratic form.
double brute_minimum(const MicroQuadratic& q, int dmax) {
  std::vector<int> d(q.size, -dmax);
  double best = INFINITY;
  while (true) {
    best = std::min(best, q.energy(d));
    int j = 0;
    while (j < q.size && d[j] == dmax) d[j++] = -dmax;
    if (j == q.size) break;
    ++d[j];
  }
  return best;
}

}  // namespace

TEST_SUITE("micro") {

TEST_CASE("hole lattice") {
  auto p = build_micro(square(65), 1.0 / 8, 0.0, 1.0);
  CHECK(p.cells_per_side() == 8);
  CHECK(p.num_holes() == 36);  // cells touching the boundary are dropped
  for (const auto& h : p.holes()) {
    double w = 0.0;
    for (const auto& [node, a] : h.coverage) {
      CHECK(p.domain().is_interior(node));
      w += a;
    }
    // coverage fractions add up to eps^2 / h^2
    CHECK(w == doctest::Approx(64.0).epsilon(1e-12));
  }
  CHECK(p.hole_radius() == doctest::Approx(std::exp(-64.0)));
  CHECK(build_micro(square(65), 2.0, 0.0, 1.0).num_holes() == 0);
  auto q = build_micro(square(129), 1.0 / 16, 0.0, 1.0);
  CHECK(q.epsilon() / square(129)->h() == doctest::Approx(8.0));
  CHECK(q.num_holes() == 14 * 14);
  CHECK_THROWS_AS(build_micro(square(65), 3.0 / 64, 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(build_micro(square(65), 0.25, 0.0, 0.0), DomainError);

  auto disk = build_micro(build_domain(Shape::unit_disk, 65), 0.125, 0.0, 1.0);
  for (const auto& h : disk.holes()) CHECK(std::hypot(h.cx, h.cy) < 1.0);
}

TEST_CASE("energy examples") {
  auto p = build_micro(square(65), 0.125, 0.0, 1.0);
  DegreeAssignment zero{std::vector<int>(p.num_holes(), 0)};
  CHECK(micro_energy(p, zero).total == 0.0);

  DegreeAssignment one = zero;
  one.d[7] = 1;
  auto e = micro_energy(p, one);
  CHECK(e.self_part == doctest::Approx(pi * 0.125 * 0.125).epsilon(1e-14));
  CHECK(e.field_part > 0.0);
  CHECK(e.total == doctest::Approx(e.field_part + e.self_part));

  // With no field the energy is even in d.
  std::mt19937_64 rng(9);
  for (int t = 0; t < 3; ++t) {
    auto d = random_degrees(p.num_holes(), rng);
    DegreeAssignment neg = d;
    for (int& v : neg.d) v = -v;
    CHECK(micro_energy(p, d).total == doctest::Approx(micro_energy(p, neg).total).epsilon(1e-9));
  }
  CHECK_THROWS_AS(micro_energy(p, DegreeAssignment{{1, 2}}), PreconditionError);
  auto v = spread_vorticity(p, one);
  double mass = 0.0;
  for (int node : p.domain().interior_nodes()) mass += v[node];
  CHECK(mass * p.domain().h() * p.domain().h() == doctest::Approx(0.125 * 0.125));
}

TEST_CASE("quadratic form reproduces the energy") {
  auto p = build_micro(square(65), 0.125, 9.0, 1.0);
  auto q = build_quadratic(p, 2);
  REQUIRE(q.size == p.num_holes());
  for (int i = 0; i < q.size; ++i) {
    CHECK(q.at(i, i) > 2 * pi * 0.125 * 0.125);
    for (int j = 0; j < q.size; ++j) CHECK(q.at(i, j) == q.at(j, i));
  }
  std::mt19937_64 rng(4);
  for (int t = 0; t < 6; ++t) {
    auto d = random_degrees(q.size, rng);
    const double direct = micro_energy(p, d).total;
    CHECK(q.energy(d.d) == doctest::Approx(direct).epsilon(1e-8).scale(1.0));
    // positive definite: d^T Q d >= 2 pi gamma eps^2 |d|^2
    double quad = 0.0;
    for (int i = 0; i < q.size; ++i)
      for (int j = 0; j < q.size; ++j) quad += d.d[i] * q.at(i, j) * d.d[j];
    CHECK(quad >= 2 * pi * 0.125 * 0.125 * d.sum_squares() * (1 - 1e-12));
  }
  // Threads do not change the model.
  auto q1 = build_quadratic(p, 1);
  CHECK(q1.q == q.q);
  CHECK(q1.b == q.b);
}

TEST_CASE("minimization") {
  auto p0 = build_micro(square(65), 0.125, 0.0, 1.0);
  auto r0 = minimize_degrees(p0);
  CHECK(r0.degrees.sum_squares() == 0);
  CHECK(r0.energy.total == 0.0);

  for (double eps : {0.25, 0.2}) {
    for (double lambda : {0.0, 6.0, 12.0, 20.0, 40.0}) {
      auto p = build_micro(square(65), eps, lambda, 1.0);
      REQUIRE(p.num_holes() <= 9);
      auto q = build_quadratic(p);
      MinimizeOptions ex;
      ex.mode = MinimizeOptions::Mode::exact;
      auto exact = minimize_degrees(p, q, ex);
      auto desc = minimize_degrees(p, q);
      if (p.num_holes() <= 4) CHECK(exact.model_energy == doctest::Approx(brute_minimum(q, 2)).epsilon(1e-12));
      CHECK(desc.model_energy >= exact.model_energy - 1e-12);
      CHECK(exact.degrees.d == desc.degrees.d);
      CHECK(exact.energy.total == doctest::Approx(exact.model_energy).epsilon(1e-8).scale(1.0));
    }
  }
  MinimizeOptions ex;
  ex.mode = MinimizeOptions::Mode::exact;
  CHECK_THROWS_AS(minimize_degrees(p0, ex), PreconditionError);

  // Descent ends at a local minimum: no single +-1 move lowers the model.
  auto p = build_micro(square(65), 0.125, 30.0, 1.0);
  auto q = build_quadratic(p);
  auto r = minimize_degrees(p, q);
  auto d = r.degrees.d;
  for (int j = 0; j < q.size; ++j) {
    for (int s : {1, -1}) {
      d[j] += s;
      CHECK(q.energy(d) >= r.model_energy - 1e-12);
      d[j] -= s;
    }
  }
}

TEST_CASE("recovery sequence") {
  auto p = build_micro(square(129), 1.0 / 16, 0.0, 1.0);
  auto t = block_tiling(p, 1);
  CHECK(t.block == 3);
  auto in_block = [&](int j) {
    for (int by = 0; by < t.blocks_per_side; ++by)
      for (int bx = 0; bx < t.blocks_per_side; ++bx)
        if (t.valid[by * t.blocks_per_side + bx])
          for (int k : t.holes_in(p, bx, by))
          if (k == j) return true;
    return false;
  };

  auto two = recovery_sequence(p, ScalarField(p.domain_ptr(), 2.0), 1);
  for (int j = 0; j < p.num_holes(); ++j) CHECK(two.d[j] == (in_block(j) ? 2 : 0));
  auto zero = recovery_sequence(p, ScalarField(p.domain_ptr(), 0.0), 1);
  CHECK(zero.sum_squares() == 0);

  auto half = recovery_sequence(p, ScalarField(p.domain_ptr(), 0.5), 1);
  int valid = 0;
  for (int by = 0; by < t.blocks_per_side; ++by) {
    for (int bx = 0; bx < t.blocks_per_side; ++bx) {
      if (!t.valid[by * t.blocks_per_side + bx]) continue;
      ++valid;
      int ones = 0, zeros = 0;
      for (int j : t.holes_in(p, bx, by)) {
        if (half.d[j] == 1) ++ones;
        if (half.d[j] == 0) ++zeros;
      }
      CHECK(zeros == 4);
      CHECK(ones == 5);
    }
  }
  CHECK(valid == 16);
  CHECK_THROWS_AS(block_tiling(p, 0), PreconditionError);
  CHECK_THROWS_AS(recovery_sequence(p, ScalarField(square(65), 1.0), 1), PreconditionError);
}

TEST_CASE("empirical partition") {
  auto p = build_micro(square(129), 1.0 / 16, 0.0, 1.0);
  const DomainPtr& d = p.domain_ptr();
  ScalarField target(d, 0.0);
  for (int node : d->interior_nodes()) {
    target[node] = 1.3 + 0.8 * std::sin(3 * d->x(node)) * std::cos(2 * d->y(node));
  }
  for (int m : {1, 2}) {
    auto deg = recovery_sequence(p, target, m);
    auto part = empirical_partition(p, deg, m);
    const int cells = (2 * m + 1) * (2 * m + 1);
    REQUIRE_FALSE(part.blocks.empty());

    // sum_k k^2 int mu_k = eps^2 sum d_j^2
    double second = 0.0;
    for (const auto& [k, f] : part.mu) second += k * k * part.integral(k);
    CHECK(second == doctest::Approx(deg.scaled_sum_squares(p.epsilon())).epsilon(1e-12));

    for (int node : d->interior_nodes()) {
      double s = 0.0, mean = 0.0;
      for (const auto& [k, f] : part.mu) {
        CHECK(f[node] >= 0.0);
        s += f[node];
        mean += k * f[node];
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(mean == doctest::Approx(part.d_blocks[node]).epsilon(1e-12).scale(1.0));
    }
    for (const auto& b : part.blocks) {
      const double target_mean = block_mean(p, part.tiling, target, b.bx, b.by);
      CHECK(std::abs(b.mean_degree - target_mean) <= 1.0 / cells + 1e-12);
      const int lower = static_cast<int>(std::floor(target_mean));
      const double alpha = lower + 1 - target_mean;
      const auto it = b.counts.find(lower);
      const double mu_lower = it == b.counts.end() ? 0.0 : static_cast<double>(it->second) / cells;
      CHECK(std::abs(mu_lower - alpha) <= 1.0 / cells + 1e-12);
      CHECK(b.counts.size() <= 2);
    }
  }
}

TEST_CASE("gamma report") {
  auto d = square(65);
  auto zero = gamma_convergence_report(d, 0.0, 1.0, {0.25, 0.125});
  REQUIRE(zero.rows.size() == 2);
  for (const auto& r : zero.rows) {
    CHECK(r.valid);
    CHECK(r.micro_energy == 0.0);
    CHECK(r.gap == 0.0);
    CHECK(r.degree_bound == 0.0);
  }
  CHECK_THROWS_AS(gamma_convergence_report(d, 1.0, 1.0, {0.125, 0.25}), PreconditionError);
  CHECK_THROWS_AS(gamma_convergence_report(d, 1.0, 1.0, {}), PreconditionError);
  CHECK_THROWS_AS(gamma_convergence_report(d, 1.0, 1.0, {0.25, 1.0 / 32}), PreconditionError);

  // Below lambda_cr1 nothing nucleates and E0 is the vortex-free energy.
  const double lambda = 0.8 * lambda_cr1(d, 1.0);
  auto low = gamma_convergence_report(d, lambda, 1.0, {0.25, 0.125, 0.0625});
  for (const auto& r : low.rows) {
    CHECK(r.degree_bound == 0.0);
    CHECK(std::abs(r.gap) <= 1e-6 * low.e0);
  }

  // Above it the gap shrinks and eps^2 sum d^2 stays bounded.
  auto hi = gamma_convergence_report(d, 12.0, 1.0, {0.125, 0.0625});
  CHECK(hi.rows[0].gap > 0.0);
  CHECK(hi.rows[1].gap < hi.rows[0].gap);
  for (const auto& r : hi.rows) CHECK(r.degree_bound > 0.0);
  CHECK(hi.rows[1].degree_bound <= 2.0 * hi.rows[0].degree_bound);
}

}  // TEST_SUITE
