#include "vortexhom/multiplicity.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vortexhom/errors.hpp"

namespace vortexhom {

namespace {

constexpr double kPi = std::numbers::pi;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(what) + ": argument must be finite");
  }
}

}  // namespace

PinningStrength::PinningStrength(double gamma) : gamma_(gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0) {
    throw DomainError("gamma must be positive");
  }
}

double PartitionTuple::total() const {
  double s = 0.0;
  for (const auto& [k, w] : weights) s += w;
  return s;
}

double PartitionTuple::mean() const {
  double s = 0.0;
  for (const auto& [k, w] : weights) s += k * w;
  return s;
}

double PartitionTuple::second_moment() const {
  double s = 0.0;
  for (const auto& [k, w] : weights) s += static_cast<double>(k) * k * w;
  return s;
}

double PartitionTuple::weight(int k) const {
  auto it = weights.find(k);
  return it == weights.end() ? 0.0 : it->second;
}

void PartitionTuple::validate() const {
  for (const auto& [k, w] : weights) {
    if (!(w >= 0.0)) throw DomainError("partition weight is negative");
    if (std::abs(k) > truncation) throw DomainError("partition index exceeds truncation");
  }
  if (std::abs(total() - 1.0) > 1e-12) throw DomainError("partition weights do not sum to one");
}

double phi(double d) {
  require_finite(d, "phi");
  const double a = std::abs(d);
  const double k = std::floor(a);
  return (2.0 * k + 1.0) * a - k - k * k;
}

int phi_star_band(double f, const PinningStrength& gamma) {
  require_finite(f, "phi_star");
  return static_cast<int>(std::floor(std::abs(f) / gamma.value() + 0.5));
}

double phi_star(double f, const PinningStrength& gamma) {
  const int k = phi_star_band(f, gamma);
  if (k == 0) return 0.0;
  return 2.0 * kPi * k * std::abs(f) - kPi * gamma.value() * k * k;
}

double phi_star_primitive(double f, const PinningStrength& gamma) {
  require_finite(f, "phi_star_primitive");
  const double g = gamma.value();
  const double a = std::abs(f);
  // integral of sum_i 2pi (t - (i-1/2)g)_+ from 0 to a
  double s = 0.0;
  for (int i = 1; (i - 0.5) * g < a; ++i) {
    const double r = a - (i - 0.5) * g;
    s += kPi * r * r;
  }
  return f < 0.0 ? -s : s;
}

double phi_star_mollified(double f, const PinningStrength& gamma, double delta) {
  require_finite(f, "phi_star_mollified");
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw DomainError("phi_star_mollified: delta must be positive");
  }
  // Average of each kink term 2pi(|t| - c)_+ over [a, b]. Windows that do not
  // straddle a kink are affine there and are averaged exactly at the midpoint,
  // which avoids cancellation between large primitives.
  const double a = f - delta;
  const double b = f + delta;
  const double g = gamma.value();
  auto ramp_primitive = [](double t, double c) {
    const double r = std::max(0.0, std::abs(t) - c);
    return t < 0.0 ? -0.5 * r * r : 0.5 * r * r;
  };
  double s = 0.0;
  for (int i = 1; (i - 0.5) * g < std::max(std::abs(a), std::abs(b)); ++i) {
    const double c = (i - 0.5) * g;
    if (a >= c) {
      s += f - c;
    } else if (b <= -c) {
      s += -f - c;
    } else {
      s += (ramp_primitive(b, c) - ramp_primitive(a, c)) / (2.0 * delta);
    }
  }
  return 2.0 * kPi * s;
}

double phi_star_mollified_slope(double f, const PinningStrength& gamma, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw DomainError("phi_star_mollified: delta must be positive");
  }
  return (phi_star(f + delta, gamma) - phi_star(f - delta, gamma)) / (2.0 * delta);
}

CellMinimum cell_minimum_oracle(double d, int truncation) {
  require_finite(d, "cell_minimum_oracle");
  if (truncation < 1 || std::abs(d) > truncation - 1) {
    throw TruncationError("cell_minimum_oracle: |D| must not exceed K - 1");
  }
  CellMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  best.argmin.truncation = truncation;

  // An optimal vertex of the LP has at most two nonzero weights.
  for (int k = -truncation; k <= truncation; ++k) {
    if (static_cast<double>(k) == d) {
      const double v = static_cast<double>(k) * k;
      if (v < best.value) {
        best.value = v;
        best.argmin.weights = {{k, 1.0}};
      }
    }
    for (int l = k + 1; l <= truncation; ++l) {
      if (!(k < d && d < l)) continue;
      const double wk = (l - d) / (l - k);
      const double wl = (d - k) / (l - k);
      const double v = static_cast<double>(k) * k * wk + static_cast<double>(l) * l * wl;
      if (v < best.value) {
        best.value = v;
        best.argmin.weights = {{k, wk}, {l, wl}};
      }
    }
  }
  return best;
}

CellMinimum cell_minimum_oracle(double d) {
  require_finite(d, "cell_minimum_oracle");
  return cell_minimum_oracle(d, static_cast<int>(std::ceil(std::abs(d))) + 3);
}

LegendreEstimate legendre_numeric(double f, const PinningStrength& gamma,
                                  double kappa_range, double kappa_step) {
  require_finite(f, "legendre_numeric");
  if (!(kappa_step > 0.0) || !(kappa_range > 0.0)) {
    throw DomainError("legendre_numeric: step and range must be positive");
  }
  const long n = static_cast<long>(std::floor(kappa_range / kappa_step + 1e-9));
  LegendreEstimate est;
  est.value = -std::numeric_limits<double>::infinity();
  long arg = 0;
  for (long i = -n; i <= n; ++i) {
    const double kappa = static_cast<double>(i) * kappa_step;
    const double v = f * kappa - kPi * gamma.value() * phi(kappa / (2.0 * kPi));
    if (v > est.value) {
      est.value = v;
      arg = i;
    }
  }
  est.argmax_kappa = static_cast<double>(arg) * kappa_step;
  est.reliable = (arg != n && arg != -n);
  return est;
}

}  // namespace vortexhom
