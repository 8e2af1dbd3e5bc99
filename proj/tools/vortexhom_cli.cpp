// Command-line front end: dual, critical, micro, gamma-check, oracle-check.
//
// Exit codes: 0 ok, 2 bad input, 3 a solver did not converge, 4 a property
// check failed. Errors are reported as one line of JSON on stderr (and in
// <out>/error.json when the output directory can be written).

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vortexhom/critical.hpp"
#include "vortexhom/dual.hpp"
#include "vortexhom/errors.hpp"
#include "vortexhom/io.hpp"
#include "vortexhom/micro.hpp"
#include "vortexhom/multiplicity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vortexhom;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kNoConvergence = 3;
constexpr int kPropertyFailure = 4;

// Flat run configuration. Every field has the name of its long flag, so a
// config file is just a JSON object of flag values.
struct RunConfig {
  std::string domain = "square";
  int n = 129;
  double lambda = 0.0;
  double gamma = 1.0;
  double tol = 1e-8;
  long max_sweeps = 100000;
  std::string out = "out";
  unsigned long seed = 1;
  int threads = 1;
  // dual
  std::string mode = "full";
  int levels = 1;
  double bound = 0.5;
  double delta = 0.05;
  // critical
  double lambda_tol = 1e-6;
  double phase_max = 0.0;
  double phase_step = 0.5;
  // micro / gamma-check
  double epsilon = 0.125;
  bool exact = false;
  int max_holes = 9;
  int dmax = 2;
  std::string recover;
  int M = 1;
  std::vector<double> epsilons{0.125, 0.0625, 0.03125};
  // oracle-check
  int samples = 10000;
};

json to_json(const RunConfig& c) {
  return json{{"domain", c.domain},   {"n", c.n},
              {"lambda", c.lambda},   {"gamma", c.gamma},
              {"tol", c.tol},         {"max-sweeps", c.max_sweeps},
              {"out", c.out},
              {"seed", c.seed},       {"threads", c.threads},
              {"mode", c.mode},       {"levels", c.levels},
              {"bound", c.bound},     {"delta", c.delta},
              {"lambda-tol", c.lambda_tol}, {"phase-max", c.phase_max},
              {"phase-step", c.phase_step}, {"epsilon", c.epsilon},
              {"exact", c.exact},     {"max-holes", c.max_holes},
              {"dmax", c.dmax},       {"recover", c.recover},
              {"M", c.M},             {"epsilons", c.epsilons},
              {"samples", c.samples}};
}

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw CliError{code, msg}; }

// Fills every field whose flag was not given on the command line from the
// config file. Unknown keys are rejected so typos do not pass silently.
void apply_config_file(const std::string& path, CLI::App& sub, RunConfig& c) {
  std::ifstream in(path);
  if (!in) fail(kValidation, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(kValidation, std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(kValidation, "config file must hold a flat JSON object");

  std::map<std::string, std::function<void(const json&)>> setters{
      {"domain", [&](const json& v) { c.domain = v.get<std::string>(); }},
      {"n", [&](const json& v) { c.n = v.get<int>(); }},
      {"lambda", [&](const json& v) { c.lambda = v.get<double>(); }},
      {"gamma", [&](const json& v) { c.gamma = v.get<double>(); }},
      {"tol", [&](const json& v) { c.tol = v.get<double>(); }},
      {"max-sweeps", [&](const json& v) { c.max_sweeps = v.get<long>(); }},
      {"out", [&](const json& v) { c.out = v.get<std::string>(); }},
      {"seed", [&](const json& v) { c.seed = v.get<unsigned long>(); }},
      {"threads", [&](const json& v) { c.threads = v.get<int>(); }},
      {"mode", [&](const json& v) { c.mode = v.get<std::string>(); }},
      {"levels", [&](const json& v) { c.levels = v.get<int>(); }},
      {"bound", [&](const json& v) { c.bound = v.get<double>(); }},
      {"delta", [&](const json& v) { c.delta = v.get<double>(); }},
      {"lambda-tol", [&](const json& v) { c.lambda_tol = v.get<double>(); }},
      {"phase-max", [&](const json& v) { c.phase_max = v.get<double>(); }},
      {"phase-step", [&](const json& v) { c.phase_step = v.get<double>(); }},
      {"epsilon", [&](const json& v) { c.epsilon = v.get<double>(); }},
      {"exact", [&](const json& v) { c.exact = v.get<bool>(); }},
      {"max-holes", [&](const json& v) { c.max_holes = v.get<int>(); }},
      {"dmax", [&](const json& v) { c.dmax = v.get<int>(); }},
      {"recover", [&](const json& v) { c.recover = v.get<std::string>(); }},
      {"M", [&](const json& v) { c.M = v.get<int>(); }},
      {"epsilons", [&](const json& v) { c.epsilons = v.get<std::vector<double>>(); }},
      {"samples", [&](const json& v) { c.samples = v.get<int>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "command") continue;  // written by run_config.json
    auto it = setters.find(key);
    if (it == setters.end()) fail(kValidation, "unknown config key '" + key + "'");
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt && opt->count() > 0) continue;  // flags win
    try {
      it->second(value);
    } catch (const json::exception&) {
      fail(kValidation, "config key '" + key + "' has the wrong type");
    }
  }
}

void validate_common(const RunConfig& c) {
  if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) fail(kValidation, "gamma must be positive");
  if (!std::isfinite(c.lambda) || c.lambda < 0.0) fail(kValidation, "lambda must be nonnegative");
  if (!(c.tol > 0.0)) fail(kValidation, "tol must be positive");
  if (c.threads < 1) fail(kValidation, "threads must be at least 1");
  if (c.max_sweeps < 1) fail(kValidation, "max-sweeps must be positive");
}

DomainPtr make_domain(const RunConfig& c) {
  if (c.domain == "square") return build_domain(Shape::unit_square, c.n);
  if (c.domain == "disk") return build_domain(Shape::unit_disk, c.n);
  if (c.domain.rfind("mask:", 0) == 0) return load_mask_file(c.domain.substr(5));
  fail(kValidation, "domain must be square, disk or mask:<path>");
}

fs::path out_path(const RunConfig& c, const std::string& name) { return fs::path(c.out) / name; }

void write_json(const fs::path& p, const json& j) { io::write_text_atomic(p, j.dump(2) + "\n"); }

void write_run_config(const RunConfig& c, const std::string& command) {
  json j = to_json(c);
  j["command"] = command;
  write_json(out_path(c, "run_config.json"), j);
}

DualMode parse_mode(const RunConfig& c) {
  if (c.mode == "full") return DualMode::full();
  if (c.mode == "truncated") return DualMode::truncated(c.levels);
  if (c.mode == "obstacle") return DualMode::obstacle(c.bound, c.levels);
  if (c.mode == "mollified") return DualMode::mollified(c.delta);
  fail(kValidation, "mode must be full, truncated, obstacle or mollified");
}

DualSolveOptions dual_options(const RunConfig& c) {
  DualSolveOptions o;
  o.tol = c.tol;
  o.max_sweeps = c.max_sweeps;
  return o;
}

int cmd_dual(const RunConfig& c) {
  validate_common(c);
  const DualMode mode = parse_mode(c);
  auto dom = make_domain(c);
  DualSolution sol = solve_dual(dom, c.lambda, c.gamma, mode, dual_options(c));
  write_run_config(c, "dual");
  json sidecar = io::solution_json(sol);
  io::write_field_csv(out_path(c, "f.csv"), sol.f);
  io::write_heatmap(out_path(c, "f.ppm"), sol.f);
  if (!sol.converged) {
    write_json(out_path(c, "solution.json"), sidecar);
    fail(kNoConvergence, "dual solve did not converge after " + std::to_string(sol.iterations) +
                             " sweeps");
  }
  const RegimeReport rep = classify_regions(sol, default_band_tol(sol, c.tol));
  const DualityReport dr = verify_duality(sol, 0.02);
  io::write_field_csv(out_path(c, "D.csv"), dr.vorticity.d);
  io::write_heatmap(out_path(c, "D.ppm"), dr.vorticity.d);
  io::write_heatmap(out_path(c, "regions.ppm"), io::region_field(rep, dom));
  json regions = io::regions_json(rep, sol);
  regions["duality"] = io::duality_json(dr);
  write_json(out_path(c, "regions.json"), regions);
  sidecar["duality"] = io::duality_json(dr);
  write_json(out_path(c, "solution.json"), sidecar);
  std::printf("converged in %ld sweeps, objective %.10g, J = %d (%s), duality mismatch %.3e\n",
              sol.iterations, sol.objective, rep.deepest_level, to_string(rep.scenario).c_str(),
              dr.relative_mismatch);
  if (!dr.passed) fail(kPropertyFailure, "duality check failed");
  return kOk;
}

int cmd_critical(const RunConfig& c) {
  validate_common(c);
  if (c.levels < 1) fail(kValidation, "levels must be at least 1");
  if (!(c.phase_step > 0.0)) fail(kValidation, "phase-step must be positive");
  auto dom = make_domain(c);
  CriticalOptions opts;
  opts.lambda_tol = c.lambda_tol;
  opts.dual = dual_options(c);
  CriticalLadder ladder;
  try {
    ladder = critical_ladder(dom, c.gamma, c.levels, opts);
  } catch (const PreconditionError& e) {
    fail(kNoConvergence, e.what());
  }
  write_run_config(c, "critical");
  write_json(out_path(c, "ladder.json"), io::ladder_json(ladder));
  for (const auto& v : ladder.values) std::printf("lambda_cr%d = %.8f\n", v.level, v.lambda);

  // Phase diagram from 0 to a little past the last critical field unless set.
  const double top = c.phase_max > 0.0 ? c.phase_max : ladder.values.back().lambda + 2.0;
  std::vector<double> grid;
  for (int i = 0; i * c.phase_step <= top + 1e-12; ++i) grid.push_back(i * c.phase_step);
  const auto rows = phase_diagram(dom, c.gamma, grid, dual_options(c), c.threads);
  io::write_text_atomic(out_path(c, "phase.csv"), io::phase_csv(rows));

  for (const auto& r : rows) {
    if (!r.valid) fail(kNoConvergence, "phase diagram row at lambda " + std::to_string(r.lambda) +
                                           " did not converge");
  }
  if (!ladder.strictly_increasing()) fail(kPropertyFailure, "critical ladder is not increasing");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].deepest_level < rows[i - 1].deepest_level) {
      fail(kPropertyFailure, "deepest level decreases along the phase diagram");
    }
  }
  return kOk;
}

void dump_partition(const RunConfig& c, const MicroProblem& p, const DegreeAssignment& deg,
                    const ScalarField* target) {
  EmpiricalPartition part = empirical_partition(p, deg, c.M);
  json blocks = json::array();
  for (auto& b : part.blocks) {
    if (target) b.target_mean = block_mean(p, part.tiling, *target, b.bx, b.by);
    json counts = json::object();
    for (const auto& [k, n] : b.counts) counts[std::to_string(k)] = n;
    blocks.push_back({{"bx", b.bx}, {"by", b.by}, {"counts", counts},
                      {"mean_degree", b.mean_degree}, {"target_mean", b.target_mean}});
  }
  json integrals = json::object();
  for (const auto& [k, field] : part.mu) {
    integrals[std::to_string(k)] = part.integral(k);
    io::write_field_csv(out_path(c, "mu_" + std::to_string(k) + ".csv"), field);
  }
  io::write_field_csv(out_path(c, "D_blocks.csv"), part.d_blocks);
  write_json(out_path(c, "partition.json"),
             json{{"M", c.M}, {"block", part.tiling.block}, {"blocks", blocks},
                  {"integrals", integrals}});
}

json energy_json(const MicroEnergyBreakdown& e) {
  return json{{"field_part", e.field_part}, {"self_part", e.self_part}, {"total", e.total}};
}

int cmd_micro(const RunConfig& c) {
  validate_common(c);
  if (c.M < 1) fail(kValidation, "M must be at least 1");
  if (c.dmax < 0 || c.max_holes < 0) fail(kValidation, "dmax and max-holes must be nonnegative");
  auto dom = make_domain(c);
  const MicroProblem p = build_micro(dom, c.epsilon, c.lambda, c.gamma);
  write_run_config(c, "micro");
  json report{{"epsilon", c.epsilon}, {"lambda", c.lambda}, {"gamma", c.gamma},
              {"holes", p.num_holes()}, {"cells_per_side", p.cells_per_side()},
              {"hole_radius", p.hole_radius()}};

  DegreeAssignment deg;
  bool property_ok = true;
  std::optional<ScalarField> target;
  if (!c.recover.empty()) {
    target = io::read_field_csv(c.recover, dom);
    deg = recovery_sequence(p, *target, c.M);
    const MicroEnergyBreakdown e = micro_energy(p, deg);
    report["mode"] = "recover";
    report["energy"] = energy_json(e);
  } else {
    const MicroQuadratic q = build_quadratic(p, c.threads);
    MinimizeOptions mo;
    mo.threads = c.threads;
    const MinimizeResult descent = minimize_degrees(p, q, mo);
    report["descent"] = {{"energy", energy_json(descent.energy)}, {"moves", descent.moves}};
    deg = descent.degrees;
    report["mode"] = "descent";
    if (c.exact) {
      mo.mode = MinimizeOptions::Mode::exact;
      mo.max_holes = c.max_holes;
      mo.d_max = c.dmax;
      if (p.num_holes() > c.max_holes) {
        fail(kValidation, "exact mode refuses " + std::to_string(p.num_holes()) +
                              " holes (max-holes " + std::to_string(c.max_holes) + ")");
      }
      const MinimizeResult ex = minimize_degrees(p, q, mo);
      const double diff = descent.energy.total - ex.energy.total;
      report["exact"] = {{"energy", energy_json(ex.energy)}};
      report["descent_minus_exact"] = diff;
      report["mode"] = "exact";
      deg = ex.degrees;
      std::printf("exact %.12g, descent %.12g, difference %.3e\n", ex.energy.total,
                  descent.energy.total, diff);
      property_ok = std::abs(diff) <= 1e-9 * (1.0 + std::abs(ex.energy.total));
    }
    report["energy"] = report[report["mode"] == "exact" ? "exact" : "descent"]["energy"];
  }
  report["sum_squares"] = deg.sum_squares();
  report["scaled_sum_squares"] = deg.scaled_sum_squares(c.epsilon);
  io::write_text_atomic(out_path(c, "degrees.csv"), io::degrees_csv(p, deg));
  io::write_field_csv(out_path(c, "D_eps.csv"), spread_vorticity(p, deg));
  dump_partition(c, p, deg, target ? &*target : nullptr);
  write_json(out_path(c, "micro.json"), report);
  std::printf("%d holes, energy %.12g, eps^2 sum d^2 = %.6g\n", p.num_holes(),
              report["energy"]["total"].get<double>(), deg.scaled_sum_squares(c.epsilon));
  if (!property_ok) fail(kPropertyFailure, "descent did not reach the exhaustive-search minimum");
  return kOk;
}

int cmd_gamma_check(const RunConfig& c) {
  validate_common(c);
  if (c.epsilons.empty()) fail(kValidation, "epsilons must not be empty");
  for (std::size_t i = 1; i < c.epsilons.size(); ++i) {
    if (!(c.epsilons[i] < c.epsilons[i - 1])) fail(kValidation, "epsilons must be strictly decreasing");
  }
  auto dom = make_domain(c);
  GammaCheckOptions o;
  o.m = c.M;
  o.dual = dual_options(c);
  o.threads = c.threads;
  const GammaReport rep = gamma_convergence_report(dom, c.lambda, c.gamma, c.epsilons, o);
  write_run_config(c, "gamma-check");
  io::write_text_atomic(out_path(c, "gamma.csv"), io::gamma_csv(rep));
  write_json(out_path(c, "gamma.json"), io::gamma_json(rep));
  for (const auto& r : rep.rows) {
    std::printf("eps %.6g: %d holes, micro %.10g, E0 %.10g, gap %.3e\n", r.epsilon, r.holes,
                r.micro_energy, r.e0, r.gap);
    if (!r.valid) fail(kNoConvergence, "a sub-solve failed at eps " + std::to_string(r.epsilon));
  }
  // Gap trend, allowing for the dual solver's own accuracy.
  const double noise = 1e-6 * (1.0 + std::abs(rep.e0));
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (std::abs(rep.rows[i].gap) > std::abs(rep.rows[i - 1].gap) + noise) {
      fail(kPropertyFailure, "energy gap grows as eps decreases");
    }
  }
  return kOk;
}

int cmd_oracle_check(const RunConfig& c) {
  validate_common(c);
  if (c.samples < 1) fail(kValidation, "samples must be positive");
  std::mt19937_64 rng(c.seed);
  const PinningStrength g(c.gamma);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  double cell_err = 0.0;
  std::uniform_real_distribution<double> ud(-6.0, 6.0);
  for (int i = 0; i < c.samples; ++i) {
    const double d = ud(rng);
    cell_err = std::max(cell_err, std::abs(cell_minimum_oracle(d, 8).value - phi(d)));
  }

  // kappa grid with step 2pi/64 contains every multiple of 2pi.
  double conj_err = 0.0;
  bool reliable = true;
  std::uniform_real_distribution<double> uf(-5.0 * c.gamma, 5.0 * c.gamma);
  const int conj_samples = std::max(1, c.samples / 10);
  for (int i = 0; i < conj_samples; ++i) {
    const double f = uf(rng);
    const LegendreEstimate est = legendre_numeric(f, g, 7.0 * two_pi, two_pi / 64.0);
    reliable = reliable && est.reliable;
    conj_err = std::max(conj_err, std::abs(est.value - phi_star(f, g)));
  }

  // Mollifier bounds on [-5 gamma, 5 gamma]: 0 <= phi*_delta - phi* <= pi delta (2 k_max + 1).
  bool moll_ok = true;
  const double delta = c.delta;
  for (int i = 0; i < conj_samples; ++i) {
    const double f = uf(rng);
    const double diff = phi_star_mollified(f, g, delta) - phi_star(f, g);
    const int kmax = phi_star_band(std::abs(f) + delta, g);
    if (diff < -1e-12 || diff > std::numbers::pi * delta * (2 * kmax + 1) + 1e-12) moll_ok = false;
  }

  const bool ok = cell_err <= 1e-9 && conj_err <= 1e-9 && reliable && moll_ok;
  write_run_config(c, "oracle-check");
  write_json(out_path(c, "oracle.json"),
             json{{"seed", c.seed},
                  {"samples", c.samples},
                  {"cell_problem_max_error", cell_err},
                  {"conjugate_max_error", conj_err},
                  {"conjugate_grid_reliable", reliable},
                  {"mollifier_bounds_hold", moll_ok},
                  {"passed", ok}});
  std::printf("cell problem max error %.3e, conjugate max error %.3e, mollifier bounds %s\n",
              cell_err, conj_err, moll_ok ? "ok" : "violated");
  if (!ok) fail(kPropertyFailure, "oracle suite failed");
  return kOk;
}

void report_error(const RunConfig& c, int code, const std::string& msg) {
  const json j{{"error", msg}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
  try {
    if (!c.out.empty() && fs::is_directory(c.out)) write_json(out_path(c, "error.json"), j);
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vortex pinning homogenization: dual limit problem and micro lattice"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", config_path, "flat JSON file of flag values; flags win");
    s->add_option("--domain", cfg.domain, "square | disk | mask:<path>");
    s->add_option("--n", cfg.n, "nodes per side");
    s->add_option("--lambda", cfg.lambda, "rescaled external field");
    s->add_option("--gamma", cfg.gamma, "pinning strength");
    s->add_option("--tol", cfg.tol, "solver tolerance");
    s->add_option("--max-sweeps", cfg.max_sweeps, "sweep cap of the dual solver");
    s->add_option("--out", cfg.out, "output directory");
    s->add_option("--seed", cfg.seed, "seed for randomized suites");
    s->add_option("--threads", cfg.threads, "worker threads (1 = reference mode)");
  };

  auto* dual = app.add_subcommand("dual", "solve the dual limit problem");
  common(dual);
  dual->add_option("--mode", cfg.mode, "full | truncated | obstacle | mollified");
  dual->add_option("--levels", cfg.levels, "kink terms for truncated/obstacle modes");
  dual->add_option("--bound", cfg.bound, "obstacle bound");
  dual->add_option("--delta", cfg.delta, "mollifier half-width");

  auto* crit = app.add_subcommand("critical", "critical-field ladder and phase diagram");
  common(crit);
  crit->add_option("--levels", cfg.levels, "number of critical fields");
  crit->add_option("--lambda-tol", cfg.lambda_tol, "bisection tolerance");
  crit->add_option("--phase-max", cfg.phase_max, "largest lambda of the phase diagram");
  crit->add_option("--phase-step", cfg.phase_step, "lambda spacing of the phase diagram");

  auto* micro = app.add_subcommand("micro", "integer degrees on the hole lattice");
  common(micro);
  micro->add_option("--epsilon", cfg.epsilon, "lattice period");
  micro->add_flag("--exact", cfg.exact, "exhaustive search, compared with descent");
  micro->add_option("--max-holes", cfg.max_holes, "size cap for --exact");
  micro->add_option("--dmax", cfg.dmax, "degree range for --exact");
  micro->add_option("--recover", cfg.recover, "target D field (CSV) for the recovery sequence");
  micro->add_option("--M", cfg.M, "block half-width: blocks of (2M+1)^2 holes");

  auto* gam = app.add_subcommand("gamma-check", "micro minima against the limit minimum");
  common(gam);
  gam->add_option("--epsilons", cfg.epsilons, "decreasing lattice periods")->delimiter(',');
  gam->add_option("--M", cfg.M, "block half-width for the vorticity error");

  auto* orc = app.add_subcommand("oracle-check", "cell-problem and conjugate oracle suites");
  common(orc);
  orc->add_option("--samples", cfg.samples, "random samples for the cell problem");
  orc->add_option("--delta", cfg.delta, "mollifier half-width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error(RunConfig{.out = ""}, kValidation, e.what());
    return kValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!config_path.empty()) apply_config_file(config_path, *sub, cfg);
    fs::create_directories(cfg.out);
    if (sub == dual) return cmd_dual(cfg);
    if (sub == crit) return cmd_critical(cfg);
    if (sub == micro) return cmd_micro(cfg);
    if (sub == gam) return cmd_gamma_check(cfg);
    return cmd_oracle_check(cfg);
  } catch (const CliError& e) {
    report_error(cfg, e.code, e.message);
    return e.code;
  } catch (const SolverError& e) {
    report_error(cfg, kNoConvergence, e.what());
    return kNoConvergence;
  } catch (const std::logic_error& e) {
    // DomainError, PreconditionError and friends: bad input.
    report_error(cfg, kValidation, e.what());
    return kValidation;
  } catch (const std::exception& e) {
    report_error(cfg, kValidation, e.what());
    return kValidation;
  }
}
