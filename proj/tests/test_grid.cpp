#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vortexhom/errors.hpp"
#include "vortexhom/grid.hpp"

using namespace vortexhom;

namespace {

std::string square_mask(int n, int hole_r = -1, int hole_c = -1) {
  std::ostringstream s;
  s << n << ' ' << n << '\n';
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      int v = (r == 0 || c == 0 || r == n - 1 || c == n - 1) ? 2 : 1;
      if (r == hole_r && c == hole_c) v = 2;
      s << v << (c + 1 == n ? '\n' : ' ');
    }
  }
  return s.str();
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("unit square counts") {
  auto d = build_domain(Shape::unit_square, 33);
  CHECK(d->num_interior() == 31 * 31);
  CHECK(d->num_boundary() == 4 * 31);
  CHECK(d->h() == doctest::Approx(1.0 / 32));
  CHECK(d->box_side() == doctest::Approx(1.0));
  CHECK(d->interior_area() == doctest::Approx(31.0 * 31.0 / (32.0 * 32.0)));
  CHECK_THROWS_AS(build_domain(Shape::unit_square, 16), PreconditionError);
}

TEST_CASE("unit disk mask") {
  auto d = build_domain(Shape::unit_disk, 17);
  int inside = 0;
  for (int node = 0; node < d->size(); ++node) {
    const double r2 = d->x(node) * d->x(node) + d->y(node) * d->y(node);
    if (d->is_interior(node)) CHECK(r2 < 1.0);
    if (r2 < 1.0) ++inside;
  }
  CHECK(d->num_interior() == inside);
  // Every interior neighbour is interior or boundary; cut weights are >= 1.
  for (int u = 0; u < d->num_interior(); ++u) {
    double wsum = 0.0;
    for (const auto& link : d->links(u)) {
      CHECK(d->kind(link.node) != NodeKind::exterior);
      CHECK(link.weight >= 1.0);
      CHECK(link.weight <= 100.0);
      if (link.unknown >= 0) CHECK(link.weight == 1.0);
      wsum += link.weight;
    }
    CHECK(d->scaled_diagonal(u) == doctest::Approx(wsum + d->h() * d->h()));
  }
  CHECK(d->num_interior() * d->h() * d->h() == doctest::Approx(M_PI).epsilon(0.1));
}

TEST_CASE("links are symmetric") {
  auto d = build_domain(Shape::unit_disk, 33);
  for (int u = 0; u < d->num_interior(); ++u) {
    for (const auto& link : d->links(u)) {
      if (link.unknown < 0) continue;
      bool back = false;
      for (const auto& l2 : d->links(link.unknown)) back = back || l2.unknown == u;
      CHECK(back);
    }
  }
}

TEST_CASE("mask files") {
  auto d = parse_mask(square_mask(9));
  CHECK(d->shape() == Shape::mask_file);
  CHECK(d->num_interior() == 49);
  CHECK(d->h() == doctest::Approx(1.0 / 8));

  // A boundary node in the middle of the interior is a hole.
  CHECK_THROWS_AS(parse_mask(square_mask(9, 4, 4)), ConstructionError);
  // Interior touching exterior, bad values, bad header.
  CHECK_THROWS_AS(parse_mask("3 3\n0 0 0\n0 1 0\n0 0 0\n"), ConstructionError);
  CHECK_THROWS_AS(parse_mask("3 3\n2 2 2\n2 7 2\n2 2 2\n"), ConstructionError);
  CHECK_THROWS_AS(parse_mask("x y\n"), ConstructionError);
  CHECK_THROWS_AS(parse_mask("3 3\n2 2 2\n2 2 2\n2 2 2\n"), ConstructionError);

  // Two interior blocks separated by a boundary column: disconnected.
  std::ostringstream two;
  two << "5 7\n";
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 7; ++c) {
      const bool in = r > 0 && r < 4 && (c == 1 || c == 2 || c == 4 || c == 5);
      two << (in ? 1 : 2) << (c == 6 ? '\n' : ' ');
    }
  }
  CHECK_THROWS_AS(parse_mask(two.str()), ConstructionError);

  const auto path = std::filesystem::temp_directory_path() / "vortexhom_mask_test.txt";
  {
    std::ofstream out(path);
    out << square_mask(17);
  }
  auto f = load_mask_file(path);
  CHECK(f->num_interior() == 15 * 15);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_mask_file("/nonexistent/mask.txt"), ConstructionError);
}

TEST_CASE("scalar fields") {
  auto d = build_domain(Shape::unit_disk, 17);
  ScalarField f(d, 2.0);
  int exterior = 0;
  for (int node = 0; node < d->size(); ++node) {
    if (d->kind(node) == NodeKind::exterior) {
      CHECK(std::isnan(f[node]));
      ++exterior;
    } else {
      CHECK(f[node] == 2.0);
    }
  }
  CHECK(exterior > 0);
  std::vector<double> v(d->num_interior());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -static_cast<double>(i);
  f.set_interior_values(v);
  CHECK(f.interior_values() == v);
  CHECK(f.min_interior() == -static_cast<double>(v.size() - 1));
  CHECK(f.max_abs_interior() == static_cast<double>(v.size() - 1));
  f.set_boundary(5.0);
  for (int node = 0; node < d->size(); ++node) {
    if (d->is_boundary(node)) CHECK(f[node] == 5.0);
  }
  CHECK_THROWS_AS(f.set_interior_values(std::vector<double>(3)), PreconditionError);
  CHECK_THROWS_AS(ScalarField(d, std::vector<double>(5)), PreconditionError);
}

}  // TEST_SUITE
