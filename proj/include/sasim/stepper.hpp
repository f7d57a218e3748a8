#pragma once

// Error-rate bound of a truncated series solution and the adaptive window
// length derived from it.

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string_view>

#include "sasim/series.hpp"

namespace sasim::stepper {

/// Variable classes that carry separate error-rate tolerances.
enum class VarClass : std::size_t { angle = 0, speed, voltage, mechanical, slip, state };
inline constexpr std::size_t kClassCount = 6;

std::string_view to_string(VarClass c) noexcept;

/// Per-class error-rate values (units of the variable per second).
using ClassBounds = std::array<double, kClassCount>;

inline constexpr double kUnconstrained = std::numeric_limits<double>::infinity();

/// Error-rate tolerances. Angles are held in rad/s; kUnconstrained disables a class.
struct ToleranceSet {
  ClassBounds eps{kUnconstrained, kUnconstrained, kUnconstrained, kUnconstrained, kUnconstrained, kUnconstrained};

  double& operator[](VarClass c) { return eps[static_cast<std::size_t>(c)]; }
  double operator[](VarClass c) const { return eps[static_cast<std::size_t>(c)]; }

  /// Same tolerance for every class.
  static ToleranceSet uniform(double eps);
  /// Rotor angle in deg/s, generator and motor voltages in pu/s, mechanical power in pu/s.
  static ToleranceSet machine(double angle_deg_per_s, double voltage_pu_per_s, double mechanical_pu_per_s);

  /// Throws Error(contract_violation) unless every tolerance is > 0.
  void validate() const;
};

struct StepperConfig {
  double alpha = 0.95;   // safety factor on the probe length
  double h_pre = 1e-3;   // initial previous-window length (s)
  double h_min = 1e-4;   // (s)
  double h_max = 0.1;    // cap (s)
  std::size_t samples = 16;  // points used for the supremum, both endpoints included
  /// Check the bound over the predicted window and shrink by bisection when it exceeds the tolerance.
  bool verify = true;
  /// Fraction of the truncated series' real-axis stability interval allowed for h times the
  /// spectral radius of each device Jacobian (voltage held). 0 disables the cap.
  double stability_margin = 0.9;

  void validate() const;
};

/// Evaluates f at state x and absolute time t, writing into `out`.
using DerivativeFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

/// Per-class max over `samples` equispaced times in [t0, t0 + h] of |f(x_sas(t)) - d/dt x_sas(t)|.
/// `classes` assigns a class to each component. Throws Error(propagation_invalid) on a non-finite residual.
ClassBounds error_rate_bound(const series::SeriesVector& sas, const DerivativeFn& f, std::span<const VarClass> classes,
                             double h, std::size_t samples);

/// Accumulates another subsystem's bound by per-class maximum.
void merge_bounds(ClassBounds& into, const ClassBounds& other) noexcept;

/// Window from one probe value: ln(eps (e^{alpha h_pre} - 1) / r_probe + 1), clamped to [h_min, h_max].
double adaptive_window(double r_probe, double h_pre, const StepperConfig& cfg, double eps);

/// Minimum of adaptive_window over classes with finite tolerance.
double multi_class_window(const ClassBounds& r_probe, double h_pre, const StepperConfig& cfg, const ToleranceSet& tol);

/// True when every constrained class satisfies r <= eps.
bool within(const ClassBounds& r, const ToleranceSet& tol) noexcept;

/// Largest X such that |sum_{k<=n} (-x)^k / k!| <= 1 for every x in [0, X].
double taylor_stability_interval(std::size_t order);

/// Spectral radius of the Jacobian of f at (t, x), by forward differences.
double spectral_radius(const DerivativeFn& f, double t, std::span<const double> x);

/// margin * taylor_stability_interval(order) / rho; infinite when rho or margin is zero.
double stability_window(double rho, std::size_t order, double margin);

/// Bound of the current window's series as a function of the window length.
using BoundFn = std::function<ClassBounds(double h)>;

struct WindowChoice {
  double h = 0.0;          // accepted window length
  double predicted = 0.0;  // extrapolated length before verification and limits
  ClassBounds r_probe{};   // bound at the probe length alpha * h_pre
  ClassBounds r{};         // bound over the accepted window
  std::size_t evaluations = 0;
  bool underflow = false;  // the tolerance could not be met at h_min
};

/// Probe at alpha * h_pre, extrapolate, cap at h_limit (next event or end time),
/// then verify and bisect down when verification is enabled.
WindowChoice select_window(const BoundFn& bound, double h_pre, double h_limit, const StepperConfig& cfg,
                           const ToleranceSet& tol);

}  // namespace sasim::stepper
