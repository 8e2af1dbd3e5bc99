#include "vortexhom/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vortexhom/elliptic.hpp"
#include "vortexhom/errors.hpp"
#include "vortexhom/multiplicity.hpp"

namespace vortexhom {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact minimizer of 1/2 a t^2 - c t + psi(t) together with the closed
// interval on which psi is affine around it (degenerate at kinks and at
// active bounds).
struct NodeProx {
  double t;
  double lo;
  double hi;
};

int kink_levels(const DualMode& mode) {
  switch (mode.kind) {
    case DualMode::Kind::full_phi_star: return std::numeric_limits<int>::max();
    case DualMode::Kind::truncated:
    case DualMode::Kind::obstacle: return mode.levels;
    case DualMode::Kind::mollified: return 0;
  }
  return 0;
}

NodeProx prox_kinked(double a, double c, double gamma, int levels, double bound) {
  const double mag = std::abs(c);
  double t = mag / a;
  double lo = 0.0;
  double hi = levels == 0 ? kInf : 0.5 * gamma;
  if (levels > 0 && t > hi) {
    for (int k = 1;; ++k) {
      const double lower = (k - 0.5) * gamma;
      const double upper = k == levels ? kInf : (k + 0.5) * gamma;
      const double tk = (mag - 2.0 * kPi * k) / a;
      if (tk < lower) {
        t = lo = hi = lower;
        break;
      }
      if (tk <= upper) {
        t = tk;
        lo = lower;
        hi = upper;
        break;
      }
    }
  }
  if (t > bound) t = lo = hi = bound;
  if (c < 0.0) return {-t, -hi, -lo};
  return {t, lo, hi};
}

double mollified_node_objective(double t, double a, double c, const PinningStrength& g,
                                double delta) {
  return 0.5 * a * t * t - c * t + phi_star_mollified(t, g, delta);
}

double prox_mollified(double a, double c, const PinningStrength& g, double delta) {
  const double t0 = c / a;
  const double s0 = phi_star_mollified_slope(t0, g, delta);
  if (s0 == 0.0) return t0;
  double lo = std::min(t0, t0 - s0 / a);
  double hi = std::max(t0, t0 - s0 / a);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gmid = a * mid - c + phi_star_mollified_slope(mid, g, delta);
    (gmid > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double default_omega(const GridDomain& dom) {
  const int m = std::max(dom.rows(), dom.cols()) - 1;
  const double h2 = dom.h() * dom.h();
  const double rho = 4.0 * std::cos(kPi / m) / (4.0 + h2);
  return 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
}

void validate_mode(const DualMode& mode) {
  switch (mode.kind) {
    case DualMode::Kind::full_phi_star: break;
    case DualMode::Kind::truncated:
      if (mode.levels < 0) throw DomainError("truncated mode needs levels >= 0");
      break;
    case DualMode::Kind::obstacle:
      if (mode.levels < 0 || !(mode.bound > 0.0)) {
        throw DomainError("obstacle mode needs levels >= 0 and a positive bound");
      }
      break;
    case DualMode::Kind::mollified:
      if (!(mode.delta > 0.0)) throw DomainError("mollified mode needs delta > 0");
      break;
  }
}

}  // namespace

std::string DualMode::describe() const {
  switch (kind) {
    case Kind::full_phi_star: return "full_phi_star";
    case Kind::truncated: return "truncated(" + std::to_string(levels) + ")";
    case Kind::obstacle:
      return "obstacle(" + std::to_string(bound) + "," + std::to_string(levels) + ")";
    case Kind::mollified: return "mollified(" + std::to_string(delta) + ")";
  }
  return "unknown";
}

double dual_penalty(double f, double gamma, const DualMode& mode) {
  const PinningStrength g(gamma);
  switch (mode.kind) {
    case DualMode::Kind::full_phi_star: return phi_star(f, g);
    case DualMode::Kind::mollified: return phi_star_mollified(f, g, mode.delta);
    case DualMode::Kind::truncated:
    case DualMode::Kind::obstacle: {
      if (mode.kind == DualMode::Kind::obstacle && std::abs(f) > mode.bound) return kInf;
      double s = 0.0;
      for (int i = 1; i <= mode.levels; ++i) s += 2.0 * kPi * std::max(0.0, std::abs(f) - (i - 0.5) * gamma);
      return s;
    }
  }
  return 0.0;
}

double dual_objective(const ScalarField& f, double lambda, double gamma, const DualMode& mode) {
  const GridDomain& dom = f.domain();
  const double h2 = dom.h() * dom.h();
  const auto w = f.interior_values();
  std::vector<double> aw(w.size());
  apply_scaled_operator(dom, w, aw);
  double quad = 0.0;
  double pointwise = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    quad += w[i] * aw[i];
    pointwise += dual_penalty(w[i], gamma, mode) + lambda * w[i];
  }
  return 0.5 * quad + h2 * pointwise;
}

DualSolution solve_dual(DomainPtr domain, double lambda, double gamma, const DualMode& mode,
                        const DualSolveOptions& opts) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive");
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
  if (!(opts.tol > 0.0)) throw DomainError("tol must be positive");
  validate_mode(mode);
  const PinningStrength g(gamma);
  const GridDomain& dom = *domain;
  const int n = dom.num_interior();
  const double h2 = dom.h() * dom.h();
  const double omega = opts.omega > 0.0 ? opts.omega : default_omega(dom);
  if (!(omega > 0.0 && omega < 2.0)) throw DomainError("omega must lie in (0, 2)");

  const int levels = kink_levels(mode);
  const double bound = mode.kind == DualMode::Kind::obstacle ? mode.bound : kInf;
  const bool smooth = mode.kind == DualMode::Kind::mollified;

  std::vector<double> w(n, 0.0);
  if (opts.initial) {
    if (&opts.initial->domain() != domain.get()) {
      throw PreconditionError("solve_dual: initial iterate lives on another domain");
    }
    w = opts.initial->interior_values();
    for (double& v : w) v = std::clamp(v, -bound, bound);
  }

  DualSolution sol;
  sol.lambda = lambda;
  sol.gamma = gamma;
  sol.mode = mode;

  // The error after a sweep is about update * rho / (1 - rho), where rho is
  // the observed contraction of successive updates.
  double prev_update = 0.0;
  double log_rate_sum = 0.0;
  std::vector<double> log_rates;
  long sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double max_update = 0.0;
    for (int u = 0; u < n; ++u) {
      double coupling = 0.0;
      for (const auto& link : dom.links(u)) {
        if (link.unknown >= 0) coupling += w[link.unknown];
      }
      const double a = dom.scaled_diagonal(u) / h2;
      const double c = coupling / h2 - lambda;
      const double old = w[u];
      double next;
      if (smooth) {
        const double t = prox_mollified(a, c, g, mode.delta);
        next = old + omega * (t - old);
        if (mollified_node_objective(next, a, c, g, mode.delta) >
            mollified_node_objective(old, a, c, g, mode.delta)) {
          next = t;
        }
      } else {
        const NodeProx p = prox_kinked(a, c, gamma, levels, bound);
        next = std::clamp(old + omega * (p.t - old), p.lo, p.hi);
      }
      w[u] = next;
      max_update = std::max(max_update, std::abs(next - old));
    }
    sol.last_update = max_update;
    if (opts.record_history) {
      ScalarField tmp(domain, 0.0);
      tmp.set_interior_values(w);
      sol.objective_history.push_back(dual_objective(tmp, lambda, gamma, mode));
    }
    if (max_update == 0.0) {
      sol.converged = true;
      ++sweep;
      break;
    }
    if (prev_update > 0.0) {
      const double lr = std::log(max_update / prev_update);
      log_rates.push_back(lr);
      log_rate_sum += lr;
      if (log_rates.size() > 20) {
        log_rate_sum -= log_rates[log_rates.size() - 21];
      }
    }
    prev_update = max_update;
    if (log_rates.size() >= 5) {
      const std::size_t window = std::min<std::size_t>(20, log_rates.size());
      double rho = std::exp(log_rate_sum / static_cast<double>(window));
      rho = std::clamp(rho, omega - 1.0, 0.9999);
      rho = std::max(rho, 0.0);
      if (max_update <= opts.tol * (1.0 - rho)) {
        sol.converged = true;
        ++sweep;
        break;
      }
    }
  }
  sol.iterations = sweep;
  sol.f = ScalarField(domain, 0.0);
  sol.f.set_interior_values(w);
  sol.objective = dual_objective(sol.f, lambda, gamma, mode);
  return sol;
}

VorticityField recover_vorticity(const DualSolution& sol) {
  if (!sol.converged) throw PreconditionError("recover_vorticity: solution did not converge");
  const ScalarField lf = apply_london(sol.f);
  const GridDomain& dom = sol.f.domain();
  VorticityField out{ScalarField(sol.f.domain_ptr(), 0.0), sol.lambda, sol.gamma};
  for (int node : dom.interior_nodes()) out.d[node] = (lf[node] + sol.lambda) / (2.0 * kPi);
  return out;
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::vortex_free: return "vortex_free";
    case Scenario::fractional_coexistence: return "fractional_coexistence";
    case Scenario::saturated: return "saturated";
  }
  return "unknown";
}

double default_band_tol(const DualSolution& sol, double tol) {
  const double h = sol.f.domain().h();
  return 10.0 * tol + sol.gamma * h * h;
}

RegimeReport classify_regions(const DualSolution& sol, double band_tol) {
  if (!sol.converged) throw PreconditionError("classify_regions: solution did not converge");
  const GridDomain& dom = sol.f.domain();
  const double gamma = sol.gamma;
  const double h2 = dom.h() * dom.h();
  const VorticityField vort = recover_vorticity(sol);

  RegimeReport rep;
  rep.band_tol = band_tol;
  const double fmin = sol.f.min_interior();
  const int kmax = static_cast<int>(std::floor(std::abs(std::min(fmin, 0.0)) / gamma + 0.5)) + 1;

  auto threshold = [&](int k) { return -(2.0 * k - 1.0) * gamma / 2.0; };
  for (int k = 1; k <= kmax; ++k) {
    std::vector<char> om(dom.size(), 0), band(dom.size(), 0);
    long n_om = 0, n_band = 0;
    for (int node : dom.interior_nodes()) {
      const double v = sol.f[node];
      if (v < threshold(k) - band_tol) {
        om[node] = 1;
        ++n_om;
      }
      if (std::abs(v - threshold(k)) <= band_tol) {
        band[node] = 1;
        ++n_band;
      }
    }
    if (n_om + n_band == 0) break;
    rep.deepest_level = k;
    rep.omega_masks.push_back(std::move(om));
    rep.band_masks.push_back(std::move(band));
    rep.omega_areas.push_back(n_om * h2);
    rep.band_areas.push_back(n_band * h2);
  }

  auto stats_over = [&](auto&& pred) {
    RegionStats s;
    s.d_min = kInf;
    s.d_max = -kInf;
    double sum = 0.0;
    for (int node : dom.interior_nodes()) {
      if (!pred(node)) continue;
      const double d = vort.d[node];
      ++s.nodes;
      sum += d;
      s.d_min = std::min(s.d_min, d);
      s.d_max = std::max(s.d_max, d);
    }
    if (s.nodes == 0) {
      s.d_min = s.d_max = 0.0;
    } else {
      s.d_mean = sum / s.nodes;
    }
    s.area = s.nodes * h2;
    return s;
  };

  const int J = rep.deepest_level;
  auto in_omega = [&](int k, int node) {
    if (k == 0) return true;
    if (k > J) return false;
    return rep.omega_masks[k - 1][node] != 0;
  };
  auto in_band = [&](int k, int node) {
    if (k < 1 || k > J) return false;
    return rep.band_masks[k - 1][node] != 0;
  };
  for (int k = 0; k <= J; ++k) {
    rep.level_stats.push_back(stats_over([&](int node) {
      return in_omega(k, node) && !in_omega(k + 1, node) && !in_band(k, node) &&
             !in_band(k + 1, node);
    }));
  }
  for (int k = 1; k <= J; ++k) {
    rep.band_stats.push_back(stats_over([&](int node) { return in_band(k, node); }));
    // Nodes whose whole stencil lies on the band: D there is free of the
    // free-boundary transition layer.
    rep.band_core_stats.push_back(stats_over([&](int node) {
      if (!in_band(k, node)) return false;
      for (const auto& link : dom.links(dom.unknown_of(node))) {
        if (link.weight != 1.0 || !in_band(k, link.node)) return false;
      }
      return true;
    }));
  }

  if (J == 0) {
    rep.scenario = Scenario::vortex_free;
  } else if (sol.lambda <= 2.0 * kPi * J + (J - 0.5) * gamma) {
    rep.scenario = Scenario::fractional_coexistence;
  } else {
    rep.scenario = Scenario::saturated;
  }
  return rep;
}

DualityReport verify_duality(const DualSolution& sol, double tol) {
  if (!sol.converged) throw PreconditionError("verify_duality: solution did not converge");
  const GridDomain& dom = sol.f.domain();
  const double h2 = dom.h() * dom.h();
  DualityReport rep;
  rep.vorticity = recover_vorticity(sol);

  ScalarField source(sol.f.domain_ptr(), 0.0);
  for (int node : dom.interior_nodes()) source[node] = 2.0 * kPi * rep.vorticity.d[node];
  LondonSolveOptions lo;
  lo.tol = 1e-11;
  rep.hbar = solve_london(source, sol.lambda, lo);

  double diff2 = 0.0, norm2 = 0.0, phi_int = 0.0;
  for (int node : dom.interior_nodes()) {
    const double e = rep.hbar[node] - (sol.f[node] + sol.lambda);
    diff2 += e * e;
    norm2 += rep.hbar[node] * rep.hbar[node];
    phi_int += phi(rep.vorticity.d[node]);
  }
  rep.relative_mismatch = norm2 > 0.0 ? std::sqrt(diff2 / norm2) : std::sqrt(diff2);
  rep.e1 = energy_e1(rep.hbar, sol.lambda);
  rep.e0 = rep.e1 + kPi * sol.gamma * h2 * phi_int;
  rep.dual_objective = sol.objective;
  rep.duality_gap = rep.e0 + sol.objective;
  rep.passed = rep.relative_mismatch <= tol;
  return rep;
}

}  // namespace vortexhom
