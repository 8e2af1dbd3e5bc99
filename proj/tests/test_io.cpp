#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vortexhom/errors.hpp"
#include "vortexhom/io.hpp"

using namespace vortexhom;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vortexhom_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("field csv round trip") {
  auto d = build_domain(Shape::unit_disk, 17);
  ScalarField f(d, 0.0);
  for (int node : d->interior_nodes()) f[node] = std::sin(node * 0.37) / 3.0;
  const auto path = scratch("f.csv");
  io::write_field_csv(path, f);
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));
  auto g = io::read_field_csv(path, d);
  for (int node = 0; node < d->size(); ++node) {
    if (d->kind(node) == NodeKind::exterior) {
      CHECK(std::isnan(g[node]));
    } else {
      CHECK(g[node] == f[node]);  // %.17g is exact
    }
  }
  const std::string text = io::field_csv(f);
  CHECK(std::count(text.begin(), text.end(), '\n') == d->rows());
  CHECK(text.find("nan") != std::string::npos);

  CHECK_THROWS_AS(io::read_field_csv(path, build_domain(Shape::unit_disk, 33)), PreconditionError);
  CHECK_THROWS_AS(io::read_field_csv(scratch("missing.csv"), d), PreconditionError);
}

TEST_CASE("ppm heatmap") {
  auto d = build_domain(Shape::unit_disk, 17);
  ScalarField f(d, 0.0);
  for (int node : d->interior_nodes()) f[node] = d->x(node);
  const std::string ppm = io::heatmap_ppm(f, -1.0, 1.0);
  std::istringstream s(ppm);
  std::string magic;
  int w, h, maxv;
  s >> magic >> w >> h >> maxv;
  CHECK(magic == "P3");
  CHECK(w == 17);
  CHECK(h == 17);
  CHECK(maxv == 255);
  int count = 0, v, black = 0;
  int rgb[3], k = 0;
  while (s >> v) {
    CHECK(v >= 0);
    CHECK(v <= 255);
    rgb[k++] = v;
    if (k == 3) {
      if (rgb[0] == 0 && rgb[1] == 0 && rgb[2] == 0) ++black;
      k = 0;
      ++count;
    }
  }
  CHECK(count == 17 * 17);
  CHECK(black == d->size() - d->num_interior() - d->num_boundary());
}

TEST_CASE("degrees csv and gamma csv") {
  auto d = build_domain(Shape::unit_square, 33);
  auto p = build_micro(d, 0.25, 0.0, 1.0);
  DegreeAssignment deg{std::vector<int>(p.num_holes(), 1)};
  const std::string s = io::degrees_csv(p, deg);
  CHECK(s.rfind("j,ix,iy,d\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == p.num_holes() + 1);

  GammaReport rep;
  rep.rows.push_back({0.25, 4, 1.0, 0.5, 0.5, 0.25, 0.1, 3, true});
  const std::string g = io::gamma_csv(rep);
  CHECK(g.rfind("epsilon,holes,micro_energy,e0,gap,degree_bound,vorticity_error\n", 0) == 0);
  auto j = io::gamma_json(rep);
  CHECK(j["rows"][0]["holes"] == 4);
  CHECK(j["rows"][0]["gap"] == 0.5);
}

TEST_CASE("dual json outputs") {
  auto d = build_domain(Shape::unit_disk, 33);
  auto s = solve_dual(d, 4.0, 1.0, DualMode::full());
  auto rep = classify_regions(s, default_band_tol(s, 1e-8));
  auto sj = io::solution_json(s);
  CHECK(sj["lambda"] == 4.0);
  CHECK(sj["converged"] == true);
  auto rj = io::regions_json(rep, s);
  CHECK(rj["deepest_level"] == rep.deepest_level);
  REQUIRE(rj["bands"].size() == rep.band_stats.size());
  CHECK(rj["bands"][0]["threshold"] == -0.5);
  CHECK(rj["bands"][0].contains("core_d_mean"));
  auto dj = io::duality_json(verify_duality(s, 0.02));
  CHECK(dj.contains("relative_mismatch"));
  CHECK(dj["passed"] == true);

  auto codes = io::region_field(rep, d);
  for (int node : d->interior_nodes()) {
    CHECK(codes[node] >= 0.0);
    CHECK(codes[node] <= rep.deepest_level);
  }
  // round trip through a file
  const auto path = scratch("regions.json");
  io::write_text_atomic(path, rj.dump(2));
  CHECK(io::json::parse(slurp(path)) == rj);
}

TEST_CASE("phase csv header") {
  PhaseRow r;
  r.lambda = 1.0;
  r.valid = true;
  r.omega_areas = {0.5, 0.1};
  r.band_areas = {0.2, 0.0};
  const std::string s = io::phase_csv({r});
  CHECK(s.rfind("lambda,J,scenario,area_omega_1,area_omega_2,area_band_1,area_band_2,max_abs_f\n", 0) == 0);
  PhaseRow bad;
  bad.valid = false;
  CHECK(io::phase_csv({bad}).find("invalid") != std::string::npos);
}

}  // TEST_SUITE
