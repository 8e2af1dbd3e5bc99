#include <doctest.h>

#include <cmath>
#include <random>

#include "vortexhom/elliptic.hpp"
#include "vortexhom/errors.hpp"

using namespace vortexhom;

namespace {

double inv_i0_1() { return 1.0 / std::cyl_bessel_i(0.0, 1.0); }

int centre(const GridDomain& d) { return (d.rows() / 2) * d.cols() + d.cols() / 2; }

// E1 of u = I0(r)/I0(1) with lambda = 1, by Simpson's rule in r.
double bessel_energy() {
  const double i01 = std::cyl_bessel_i(0.0, 1.0);
  auto integrand = [&](double r) {
    const double du = std::cyl_bessel_i(1.0, r) / i01;
    const double u = std::cyl_bessel_i(0.0, r) / i01 - 1.0;
    return 0.5 * (du * du + u * u) * 2.0 * M_PI * r;
  };
  const int n = 2000;
  double s = integrand(0.0) + integrand(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * integrand(static_cast<double>(i) / n);
  return s / (3.0 * n);
}

ScalarField random_field(const DomainPtr& d, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  ScalarField g(d, 0.0);
  for (int node : d->interior_nodes()) g[node] = u(rng);
  return g;
}

}  // namespace

TEST_SUITE("elliptic") {

TEST_CASE("constants and zero") {
  for (auto shape : {Shape::unit_square, Shape::unit_disk}) {
    auto d = build_domain(shape, 33);
    auto u = solve_london(ScalarField(d, 0.7), 0.7, 1e-12);
    for (int node : d->interior_nodes()) CHECK(u[node] == doctest::Approx(0.7).epsilon(1e-12));
    auto z = solve_london(ScalarField(d, 0.0), 0.0, 1e-12);
    CHECK(z.max_abs_interior() == 0.0);
    auto a = apply_london(ScalarField(d, 0.7));
    for (int node : d->interior_nodes()) CHECK(a[node] == doctest::Approx(0.7).epsilon(1e-12));
  }
}

TEST_CASE("disk: u(0) against 1/I0(1), second order") {
  double prev = 0.0;
  for (int n : {65, 129, 257}) {
    auto d = build_domain(Shape::unit_disk, n);
    auto u = solve_london(ScalarField(d, 0.0), 1.0, 1e-11);
    const double err = std::abs(u[centre(*d)] - inv_i0_1());
    CHECK(err < 1e-4);
    if (prev > 0.0) CHECK(std::log2(prev / err) >= 1.8);
    prev = err;
    double worst = 0.0;
    for (int node : d->interior_nodes()) {
      const double r = std::hypot(d->x(node), d->y(node));
      worst = std::max(worst, std::abs(u[node] - std::cyl_bessel_i(0.0, r) * inv_i0_1()));
    }
    CHECK(worst < 2e-4);
  }
}

TEST_CASE("residual contract and inverse relation") {
  auto d = build_domain(Shape::unit_disk, 129);
  std::mt19937_64 rng(1);
  auto g = random_field(d, rng, -2.0, 2.0);
  LondonSolveInfo info;
  auto u = solve_london(g, 0.3, {1e-10, 200000}, &info);
  CHECK(info.residual <= 1e-10 * (1.0 + g.max_abs_interior()));
  CHECK(info.iterations > 0);
  auto back = apply_london(u);
  double worst = 0.0;
  for (int node : d->interior_nodes()) worst = std::max(worst, std::abs(back[node] - g[node]));
  CHECK(worst <= 1e-8);
  for (int node = 0; node < d->size(); ++node) {
    if (d->is_boundary(node)) CHECK(u[node] == 0.3);
  }
}

TEST_CASE("apply_london is linear") {
  auto d = build_domain(Shape::unit_disk, 65);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t) {
    auto u = random_field(d, rng, -1.0, 1.0);
    auto v = random_field(d, rng, -1.0, 1.0);
    u.set_boundary(0.0);
    v.set_boundary(0.0);
    const double a = 1.7, b = -0.4;
    ScalarField w(d, 0.0);
    for (int node : d->interior_nodes()) w[node] = a * u[node] + b * v[node];
    auto au = apply_london(u), av = apply_london(v), aw = apply_london(w);
    for (int node : d->interior_nodes()) {
      CHECK(aw[node] == doctest::Approx(a * au[node] + b * av[node]).epsilon(1e-10).scale(1e3));
    }
  }
}

TEST_CASE("discrete maximum principle") {
  auto d = build_domain(Shape::unit_disk, 65);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    auto g = random_field(d, rng, 0.0, 3.0);
    auto u = solve_london(g, 0.1 * t, 1e-10);
    CHECK(u.min_interior() >= -1e-12);
  }
}

TEST_CASE("dihedral symmetry on the square") {
  const int n = 65;
  auto d = build_domain(Shape::unit_square, n);
  ScalarField g(d, 0.0);
  for (int node : d->interior_nodes()) {
    const double x = d->x(node) - 0.5, y = d->y(node) - 0.5;
    g[node] = x * x * y * y + std::cos(3 * x) + std::cos(3 * y);
  }
  auto u = solve_london(g, 1.0, 1e-12);
  auto at = [&](int r, int c) { return u[r * n + c]; };
  for (int r = 1; r < n - 1; ++r) {
    for (int c = 1; c < n - 1; ++c) {
      const double v = at(r, c);
      CHECK(at(c, r) == doctest::Approx(v).epsilon(1e-9));
      CHECK(at(n - 1 - r, c) == doctest::Approx(v).epsilon(1e-9));
      CHECK(at(r, n - 1 - c) == doctest::Approx(v).epsilon(1e-9));
    }
  }
}

TEST_CASE("energy E1") {
  auto d = build_domain(Shape::unit_disk, 129);
  CHECK(energy_e1(ScalarField(d, 2.5), 2.5) == 0.0);

  auto u = solve_london(ScalarField(d, 0.0), 1.0, 1e-11);
  const double e = energy_e1(u, 1.0);
  CHECK(e > 0.0);
  CHECK(e == doctest::Approx(bessel_energy()).epsilon(0.02));

  ScalarField u3(d, 0.0);
  for (int node = 0; node < d->size(); ++node) u3[node] = 3.0 * u[node];
  CHECK(energy_e1(u3, 3.0) == doctest::Approx(9.0 * e).epsilon(1e-12));

  // E1 = 1/2 h^2 w^T A w with w = u - lambda.
  std::mt19937_64 rng(4);
  auto v = random_field(d, rng, -1.0, 1.0);
  v.set_boundary(0.4);
  std::vector<double> w = v.interior_values(), aw(w.size());
  for (double& x : w) x -= 0.4;
  apply_scaled_operator(*d, w, aw);
  double quad = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) quad += w[i] * aw[i];
  CHECK(energy_e1(v, 0.4) == doctest::Approx(0.5 * quad).epsilon(1e-12));
}

TEST_CASE("sparse factorization agrees with CG") {
  auto d = build_domain(Shape::unit_disk, 65);
  std::mt19937_64 rng(5);
  auto g = random_field(d, rng, -1.0, 1.0);
  LondonFactorization fac(d);
  const auto w = fac.solve(g.interior_values());
  auto u = solve_london(g, 0.0, 1e-12);
  const auto uv = u.interior_values();
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(uv[i]).epsilon(1e-9).scale(1));
  CHECK_THROWS_AS(fac.solve(std::vector<double>(3)), PreconditionError);
}

TEST_CASE("errors") {
  auto d = build_domain(Shape::unit_disk, 65);
  CHECK_THROWS_AS(solve_london(ScalarField(d, 0.0), 1.0, 0.0), PreconditionError);
  ScalarField bad(d, 0.0);
  bad[d->interior_nodes()[3]] = NAN;
  CHECK_THROWS_AS(solve_london(bad, 1.0, 1e-8), PreconditionError);
  try {
    solve_london(ScalarField(d, 0.0), 1.0, {1e-10, 2});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > 0.0);
  }
}

}  // TEST_SUITE
