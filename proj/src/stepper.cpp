#include "sasim/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "sasim/error.hpp"

namespace sasim::stepper {

std::string_view to_string(VarClass c) noexcept {
  switch (c) {
    case VarClass::angle: return "angle";
    case VarClass::speed: return "speed";
    case VarClass::voltage: return "voltage";
    case VarClass::mechanical: return "mechanical";
    case VarClass::slip: return "slip";
    case VarClass::state: return "state";
  }
  return "unknown";
}

ToleranceSet ToleranceSet::uniform(double eps) {
  ToleranceSet t;
  t.eps.fill(eps);
  return t;
}

ToleranceSet ToleranceSet::machine(double angle_deg_per_s, double voltage_pu_per_s, double mechanical_pu_per_s) {
  ToleranceSet t;
  t[VarClass::angle] = angle_deg_per_s * std::numbers::pi / 180.0;
  t[VarClass::voltage] = voltage_pu_per_s;
  t[VarClass::mechanical] = mechanical_pu_per_s;
  return t;
}

void ToleranceSet::validate() const {
  for (std::size_t i = 0; i < kClassCount; ++i) {
    if (!(eps[i] > 0.0)) {
      throw Error(ErrorKind::contract_violation,
                  "tolerance for class " + std::string(to_string(static_cast<VarClass>(i))) + " must be > 0");
    }
  }
}

void StepperConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::contract_violation, "alpha must lie in (0, 1)");
  if (!(h_pre > 0.0)) throw Error(ErrorKind::contract_violation, "h_pre must be > 0");
  if (!(h_min > 0.0 && h_min <= h_max)) throw Error(ErrorKind::contract_violation, "require 0 < h_min <= h_max");
  if (samples < 2) throw Error(ErrorKind::contract_violation, "at least two bound samples are required");
  if (!(stability_margin >= 0.0 && stability_margin <= 1.0)) {
    throw Error(ErrorKind::contract_violation, "stability_margin must lie in [0, 1]");
  }
}

double taylor_stability_interval(std::size_t order) {
  if (order == 0) throw Error(ErrorKind::contract_violation, "taylor_stability_interval: order must be >= 1");
  auto amp = [order](double x) {
    double term = 1.0, sum = 1.0;
    for (std::size_t k = 1; k <= order; ++k) {
      term *= -x / static_cast<double>(k);
      sum += term;
    }
    return std::abs(sum);
  };
  // first exit from the unit disc on a fine grid, then bisection
  constexpr double step = 1e-3;
  double lo = 0.0;
  while (amp(lo + step) <= 1.0) lo += step;
  double hi = lo + step;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (amp(mid) <= 1.0 ? lo : hi) = mid;
  }
  return lo;
}

double spectral_radius(const DerivativeFn& f, double t, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  std::vector<double> xp(x.begin(), x.end()), f0(n), f1(n);
  f(t, x, f0);
  Eigen::MatrixXd j(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    const double d = 1e-7 * std::max(1.0, std::abs(x[c]));
    xp[c] = x[c] + d;
    f(t, xp, f1);
    xp[c] = x[c];
    for (std::size_t r = 0; r < n; ++r) j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (f1[r] - f0[r]) / d;
  }
  if (!j.allFinite()) throw Error(ErrorKind::propagation_invalid, "spectral_radius: non-finite Jacobian");
  return j.eigenvalues().cwiseAbs().maxCoeff();
}

double stability_window(double rho, std::size_t order, double margin) {
  if (rho <= 0.0 || margin <= 0.0) return kUnconstrained;
  return margin * taylor_stability_interval(order) / rho;
}

ClassBounds error_rate_bound(const series::SeriesVector& sas, const DerivativeFn& f, std::span<const VarClass> classes,
                             double h, std::size_t samples) {
  if (!(h > 0.0)) throw Error(ErrorKind::contract_violation, "error_rate_bound: h must be > 0");
  if (samples < 2) throw Error(ErrorKind::contract_violation, "error_rate_bound: need at least two samples");
  if (classes.size() != sas.size()) throw Error(ErrorKind::contract_violation, "error_rate_bound: class map size mismatch");

  const series::SeriesVector dsas = sas.differentiate();
  const std::size_t n = sas.size();
  std::vector<double> x(n), dx(n), fx(n);
  ClassBounds r{};
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = sas.t0() + h * static_cast<double>(i) / static_cast<double>(samples - 1);
    sas.evaluate_into(t, x);
    dsas.evaluate_into(t, dx);
    f(t, x, fx);
    for (std::size_t k = 0; k < n; ++k) {
      const double e = std::abs(fx[k] - dx[k]);
      if (!std::isfinite(e)) {
        std::ostringstream msg;
        msg << "non-finite residual in component " << k << " at t = " << t;
        throw Error(ErrorKind::propagation_invalid, msg.str());
      }
      auto& slot = r[static_cast<std::size_t>(classes[k])];
      slot = std::max(slot, e);
    }
  }
  return r;
}

void merge_bounds(ClassBounds& into, const ClassBounds& other) noexcept {
  for (std::size_t i = 0; i < kClassCount; ++i) into[i] = std::max(into[i], other[i]);
}

double adaptive_window(double r_probe, double h_pre, const StepperConfig& cfg, double eps) {
  if (!(r_probe > 0.0) || !std::isfinite(eps)) return cfg.h_max;
  if (!std::isfinite(r_probe)) return cfg.h_min;
  const double growth = std::expm1(cfg.alpha * h_pre);
  const double h = std::log1p(eps * growth / r_probe);
  return std::clamp(h, cfg.h_min, cfg.h_max);
}

double multi_class_window(const ClassBounds& r_probe, double h_pre, const StepperConfig& cfg, const ToleranceSet& tol) {
  double h = cfg.h_max;
  for (std::size_t i = 0; i < kClassCount; ++i) {
    if (std::isfinite(tol.eps[i])) h = std::min(h, adaptive_window(r_probe[i], h_pre, cfg, tol.eps[i]));
  }
  return h;
}

bool within(const ClassBounds& r, const ToleranceSet& tol) noexcept {
  for (std::size_t i = 0; i < kClassCount; ++i) {
    if (r[i] > tol.eps[i]) return false;
  }
  return true;
}

WindowChoice select_window(const BoundFn& bound, double h_pre, double h_limit, const StepperConfig& cfg,
                           const ToleranceSet& tol) {
  if (!(h_limit > 0.0)) throw Error(ErrorKind::contract_violation, "select_window: no time left in the window");
  WindowChoice out;
  out.r_probe = bound(cfg.alpha * h_pre);
  ++out.evaluations;
  out.predicted = multi_class_window(out.r_probe, h_pre, cfg, tol);
  double h = std::min(out.predicted, h_limit);

  if (!cfg.verify) {
    out.h = h;
    return out;
  }

  ClassBounds r = bound(h);
  ++out.evaluations;
  if (within(r, tol)) {
    out.h = h;
    out.r = r;
    return out;
  }
  // Largest h with r(h) <= eps, to a relative resolution of 1e-3.
  double lo = 0.0, hi = h;
  ClassBounds r_lo{};
  while (hi - lo > 1e-3 * hi && hi >= 0.5 * cfg.h_min) {
    const double mid = lo > 0.0 ? 0.5 * (lo + hi) : 0.5 * hi;
    const ClassBounds r_mid = bound(mid);
    ++out.evaluations;
    if (within(r_mid, tol)) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
    }
  }
  if (lo < cfg.h_min && lo < h_limit) {
    out.underflow = true;
    out.h = std::min(cfg.h_min, h_limit);
    out.r = bound(out.h);
    ++out.evaluations;
    return out;
  }
  out.h = lo;
  out.r = r_lo;
  return out;
}

}  // namespace sasim::stepper
