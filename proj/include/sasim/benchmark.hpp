#pragma once

// Damped linear oscillator x'' - 2 sigma x' + (omega^2 + sigma^2) x = 0 with its
// closed-form solution, used to measure series and Runge-Kutta accuracy.

#include <cstddef>
#include <optional>
#include <vector>

#include "sasim/series.hpp"
#include "sasim/stepper.hpp"

namespace sasim::benchmark {

struct LinearBenchmark {
  double omega = 3.141592653589793;
  double sigma = -0.1;
  double x0 = 0.0;
  double v0 = 3.141592653589793;

  void validate() const;
  /// Closed-form position and velocity at t for initial state (x, v) at t_start.
  std::pair<double, double> exact_from(double x, double v, double t_start, double t) const;
  std::pair<double, double> exact(double t) const { return exact_from(x0, v0, 0.0, t); }
};

/// Order-n series of x for the initial state (x, v) at t0, built by propagation
/// of the first-order system (x, v). The velocity is its derivative.
series::PowerSeries benchmark_series(const LinearBenchmark& b, double x, double v, double t0, std::size_t order);

/// Residual x'' - 2 sigma x' + (omega^2 + sigma^2) x of the series on [t0, t0 + h].
double benchmark_bound(const LinearBenchmark& b, const series::PowerSeries& xs, double h, std::size_t samples);

enum class BenchmarkMethod { sas, rk4 };

struct BenchmarkOptions {
  BenchmarkMethod method = BenchmarkMethod::sas;
  std::size_t order = 5;
  double dt = 0.01;                 // fixed window or step
  std::optional<double> eps;        // adaptive windows when set (sas only)
  stepper::StepperConfig stepper{.h_max = 10.0};
  double t_end = 10.0;
  std::size_t dense_samples = 16;   // error samples per window in addition to the end point
};

struct BenchmarkWindow {
  double t0 = 0.0, h = 0.0;
  double r_practical = 0.0;   // series residual bound over the window
  double r_exact = 0.0;       // sup |d/dt (x_sas - x_true)| against the local exact solution
  double local_error = 0.0;   // |x_sas - x_true| at the window end, local exact solution, inf-norm over (x, v)
  bool underflow = false;
};

struct BenchmarkReport {
  std::vector<double> t, x, v;           // window-end states, starting at t = 0
  std::vector<BenchmarkWindow> windows;
  double max_error = 0.0;                // max |x - x_true| over window ends
  double max_error_dense = 0.0;          // including intra-window samples
  double final_error = 0.0;              // |x(t_end) - x_true(t_end)|
  double first_window = 0.0;
  double mean_window = 0.0;
};

BenchmarkReport run_linear_benchmark(const LinearBenchmark& b, const BenchmarkOptions& opts);

}  // namespace sasim::benchmark
