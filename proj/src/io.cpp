#include "vortexhom/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vortexhom/errors.hpp"

namespace vortexhom::io {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::array<std::array<int, 3>, 256> make_ramp() {
  std::array<std::array<int, 3>, 256> ramp{};
  for (int i = 0; i < 256; ++i) {
    if (i < 128) {
      const int t = i * 2;
      ramp[i] = {t, t, 255};
    } else {
      const int t = (255 - i) * 2 + 1;
      ramp[i] = {255, t, t};
    }
  }
  return ramp;
}

const std::array<std::array<int, 3>, 256> kRamp = make_ramp();

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string field_csv(const ScalarField& field) {
  const GridDomain& dom = field.domain();
  std::string s;
  s.reserve(static_cast<std::size_t>(dom.size()) * 12);
  for (int r = 0; r < dom.rows(); ++r) {
    for (int c = 0; c < dom.cols(); ++c) {
      if (c) s += ',';
      s += num(field[r * dom.cols() + c]);
    }
    s += '\n';
  }
  return s;
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field) {
  write_text_atomic(path, field_csv(field));
}

ScalarField read_field_csv(const std::filesystem::path& path, const DomainPtr& domain) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open field file " + path.string());
  std::vector<double> values;
  values.reserve(domain->size());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ls, cell, ',')) {
      values.push_back(cell == "nan" ? kExteriorSentinel : std::stod(cell));
      ++cols;
    }
    if (cols != domain->cols()) throw PreconditionError("field file: wrong number of columns");
    ++rows;
  }
  if (rows != domain->rows()) throw PreconditionError("field file: wrong number of rows");
  ScalarField f(domain, std::move(values));
  for (int node : domain->interior_nodes()) {
    if (!std::isfinite(f[node])) throw PreconditionError("field file: non-finite interior value");
  }
  return f;
}

std::string degrees_csv(const MicroProblem& problem, const DegreeAssignment& degrees) {
  std::ostringstream s;
  s << "j,ix,iy,d\n";
  for (int j = 0; j < problem.num_holes(); ++j) {
    const Hole& h = problem.holes()[j];
    s << j << ',' << h.ix << ',' << h.iy << ',' << degrees.d[j] << '\n';
  }
  return s.str();
}

std::string heatmap_ppm(const ScalarField& field, double lo, double hi) {
  const GridDomain& dom = field.domain();
  std::ostringstream s;
  s << "P3\n" << dom.cols() << ' ' << dom.rows() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (int r = dom.rows() - 1; r >= 0; --r) {
    for (int c = 0; c < dom.cols(); ++c) {
      const int node = r * dom.cols() + c;
      const double v = field[node];
      if (dom.kind(node) == NodeKind::exterior || !std::isfinite(v)) {
        s << "0 0 0";
      } else {
        const int idx = std::clamp(static_cast<int>(std::floor((v - lo) / span * 255.0 + 0.5)), 0, 255);
        s << kRamp[idx][0] << ' ' << kRamp[idx][1] << ' ' << kRamp[idx][2];
      }
      s << (c + 1 == dom.cols() ? '\n' : ' ');
    }
  }
  return s.str();
}

void write_heatmap(const std::filesystem::path& path, const ScalarField& field) {
  double lo = 0.0, hi = 0.0;
  if (field.domain().num_interior() > 0) {
    lo = field.min_interior();
    hi = field.max_interior();
  }
  write_text_atomic(path, heatmap_ppm(field, lo, hi));
}

std::string phase_csv(const std::vector<PhaseRow>& rows) {
  std::size_t k = 0;
  for (const auto& r : rows) k = std::max(k, r.omega_areas.size());
  std::ostringstream s;
  s << "lambda,J,scenario";
  for (std::size_t i = 1; i <= k; ++i) s << ",area_omega_" << i;
  for (std::size_t i = 1; i <= k; ++i) s << ",area_band_" << i;
  s << ",max_abs_f\n";
  for (const auto& r : rows) {
    s << num(r.lambda) << ',' << (r.valid ? r.deepest_level : -1) << ','
      << (r.valid ? to_string(r.scenario) : std::string("invalid"));
    for (std::size_t i = 0; i < k; ++i) s << ',' << num(i < r.omega_areas.size() ? r.omega_areas[i] : 0.0);
    for (std::size_t i = 0; i < k; ++i) s << ',' << num(i < r.band_areas.size() ? r.band_areas[i] : 0.0);
    s << ',' << num(r.max_abs_f) << '\n';
  }
  return s.str();
}

json solution_json(const DualSolution& sol) {
  return json{{"lambda", sol.lambda},         {"gamma", sol.gamma},
              {"objective", sol.objective},   {"iterations", sol.iterations},
              {"converged", sol.converged},   {"mode", sol.mode.describe()}};
}

json regions_json(const RegimeReport& rep, const DualSolution& sol) {
  json levels = json::array();
  for (std::size_t k = 0; k < rep.level_stats.size(); ++k) {
    const auto& st = rep.level_stats[k];
    levels.push_back({{"k", k}, {"nodes", st.nodes}, {"area", st.area},
                      {"d_min", st.d_min}, {"d_mean", st.d_mean}, {"d_max", st.d_max}});
  }
  json bands = json::array();
  for (std::size_t k = 0; k < rep.band_stats.size(); ++k) {
    const auto& st = rep.band_stats[k];
    const auto& core = rep.band_core_stats[k];
    bands.push_back({{"k", k + 1}, {"threshold", -(2.0 * (k + 1) - 1.0) * sol.gamma / 2.0},
                     {"nodes", st.nodes}, {"area", st.area}, {"d_min", st.d_min},
                     {"d_mean", st.d_mean}, {"d_max", st.d_max},
                     {"core_nodes", core.nodes}, {"core_d_mean", core.d_mean}});
  }
  return json{{"lambda", sol.lambda},
              {"gamma", sol.gamma},
              {"band_tol", rep.band_tol},
              {"deepest_level", rep.deepest_level},
              {"scenario", to_string(rep.scenario)},
              {"omega_areas", rep.omega_areas},
              {"band_areas", rep.band_areas},
              {"levels", levels},
              {"bands", bands}};
}

json duality_json(const DualityReport& rep) {
  return json{{"relative_mismatch", rep.relative_mismatch},
              {"e0", rep.e0},
              {"e1", rep.e1},
              {"dual_objective", rep.dual_objective},
              {"duality_gap", rep.duality_gap},
              {"passed", rep.passed}};
}

json ladder_json(const CriticalLadder& ladder) {
  json vals = json::array();
  for (const auto& v : ladder.values) {
    vals.push_back({{"j", v.level}, {"lambda", v.lambda}, {"bracket", {v.bracket_lo, v.bracket_hi}},
                    {"tol", v.tol}, {"evaluations", v.evaluations}, {"residual", v.residual}});
  }
  return json{{"gamma", ladder.gamma},
              {"critical_fields", vals},
              {"thresholds", ladder.thresholds},
              {"strictly_increasing", ladder.strictly_increasing()}};
}

json gamma_json(const GammaReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"epsilon", r.epsilon}, {"holes", r.holes}, {"micro_energy", r.micro_energy},
                    {"e0", r.e0}, {"gap", r.gap}, {"degree_bound", r.degree_bound},
                    {"vorticity_error", r.vorticity_error}, {"moves", r.moves}, {"valid", r.valid}});
  }
  return json{{"lambda", rep.lambda}, {"gamma", rep.gamma}, {"e0", rep.e0}, {"rows", rows}};
}

std::string gamma_csv(const GammaReport& rep) {
  std::ostringstream s;
  s << "epsilon,holes,micro_energy,e0,gap,degree_bound,vorticity_error\n";
  for (const auto& r : rep.rows) {
    s << num(r.epsilon) << ',' << r.holes << ',' << num(r.micro_energy) << ',' << num(r.e0) << ','
      << num(r.gap) << ',' << num(r.degree_bound) << ',' << num(r.vorticity_error) << '\n';
  }
  return s.str();
}

ScalarField region_field(const RegimeReport& rep, const DomainPtr& domain) {
  ScalarField out(domain, 0.0);
  for (int node : domain->interior_nodes()) {
    double code = 0.0;
    for (int k = 1; k <= rep.deepest_level; ++k) {
      if (rep.omega_masks[k - 1][node]) code = k;
      if (rep.band_masks[k - 1][node]) code = k - 0.5;
    }
    out[node] = code;
  }
  return out;
}

}  // namespace vortexhom::io
