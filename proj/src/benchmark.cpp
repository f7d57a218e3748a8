#include "sasim/benchmark.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sasim/error.hpp"

namespace sasim::benchmark {

using series::PowerSeries;
using series::SeriesVector;

void LinearBenchmark::validate() const {
  if (omega == 0.0 || !std::isfinite(omega)) throw Error(ErrorKind::contract_violation, "benchmark omega must be nonzero");
  if (!std::isfinite(sigma) || !std::isfinite(x0) || !std::isfinite(v0)) {
    throw Error(ErrorKind::contract_violation, "benchmark parameters must be finite");
  }
}

std::pair<double, double> LinearBenchmark::exact_from(double x, double v, double t_start, double t) const {
  const double tau = t - t_start;
  const double a = x;
  const double b = (v - sigma * x) / omega;
  const double e = std::exp(sigma * tau);
  const double c = std::cos(omega * tau), s = std::sin(omega * tau);
  const double pos = e * (a * c + b * s);
  const double vel = sigma * pos + e * omega * (b * c - a * s);
  return {pos, vel};
}

PowerSeries benchmark_series(const LinearBenchmark& b, double x, double v, double t0, std::size_t order) {
  const double k = b.omega * b.omega + b.sigma * b.sigma;
  auto field = [&](const SeriesVector& s) {
    return SeriesVector(std::vector<PowerSeries>{s[1], 2.0 * b.sigma * s[1] - k * s[0]});
  };
  const std::array<double, 2> x0{x, v};
  return series::propagate(field, x0, t0, order)[0];
}

double benchmark_bound(const LinearBenchmark& b, const PowerSeries& xs, double h, std::size_t samples) {
  const double k = b.omega * b.omega + b.sigma * b.sigma;
  const PowerSeries d1 = series::differentiate(xs);
  const PowerSeries d2 = series::differentiate(d1);
  double r = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = xs.t0() + h * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double e = std::abs(d2.evaluate(t) - 2.0 * b.sigma * d1.evaluate(t) + k * xs.evaluate(t));
    if (!std::isfinite(e)) throw Error(ErrorKind::propagation_invalid, "benchmark residual is not finite");
    r = std::max(r, e);
  }
  return r;
}

namespace {

std::array<double, 2> rk4_step(const LinearBenchmark& b, std::array<double, 2> y, double dt) {
  const double k = b.omega * b.omega + b.sigma * b.sigma;
  auto f = [&](const std::array<double, 2>& s) { return std::array<double, 2>{s[1], 2.0 * b.sigma * s[1] - k * s[0]}; };
  auto axpy = [](const std::array<double, 2>& s, double a, const std::array<double, 2>& d) {
    return std::array<double, 2>{s[0] + a * d[0], s[1] + a * d[1]};
  };
  const auto k1 = f(y);
  const auto k2 = f(axpy(y, 0.5 * dt, k1));
  const auto k3 = f(axpy(y, 0.5 * dt, k2));
  const auto k4 = f(axpy(y, dt, k3));
  for (std::size_t i = 0; i < 2; ++i) y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return y;
}

}  // namespace

BenchmarkReport run_linear_benchmark(const LinearBenchmark& b, const BenchmarkOptions& opts) {
  b.validate();
  if (!(opts.t_end > 0.0)) throw Error(ErrorKind::contract_violation, "benchmark t_end must be > 0");
  const bool adaptive = opts.eps.has_value();
  if (adaptive && opts.method != BenchmarkMethod::sas) {
    throw Error(ErrorKind::contract_violation, "adaptive windows require the series method");
  }
  if (!adaptive && !(opts.dt > 0.0)) throw Error(ErrorKind::contract_violation, "benchmark dt must be > 0");
  if (opts.method == BenchmarkMethod::sas && opts.order < 1) {
    throw Error(ErrorKind::contract_violation, "series order must be >= 1");
  }
  if (adaptive) opts.stepper.validate();

  BenchmarkReport rep;
  double t = 0.0, x = b.x0, v = b.v0;
  rep.t.push_back(t);
  rep.x.push_back(x);
  rep.v.push_back(v);

  const stepper::ToleranceSet tol = adaptive ? stepper::ToleranceSet::uniform(*opts.eps) : stepper::ToleranceSet{};
  const std::size_t m = opts.stepper.samples;
  double h_pre = opts.stepper.h_pre;
  std::size_t step = 0;
  auto fixed_end = [&](std::size_t k) {
    const double te = static_cast<double>(k) * opts.dt;
    return opts.t_end - te <= 1e-9 * opts.dt ? opts.t_end : te;
  };

  while (t < opts.t_end) {
    BenchmarkWindow w;
    w.t0 = t;
    const double remaining = opts.t_end - t;
    double t_next = 0.0;
    double x_next = 0.0, v_next = 0.0;

    if (opts.method == BenchmarkMethod::rk4) {
      ++step;
      t_next = fixed_end(step);
      w.h = t_next - t;
      const auto y = rk4_step(b, {x, v}, w.h);
      x_next = y[0];
      v_next = y[1];
    } else {
      const PowerSeries xs = benchmark_series(b, x, v, t, opts.order);
      if (adaptive) {
        auto bound = [&](double h) {
          stepper::ClassBounds r{};
          r[static_cast<std::size_t>(stepper::VarClass::state)] = benchmark_bound(b, xs, h, m);
          return r;
        };
        const auto choice = stepper::select_window(bound, h_pre, remaining, opts.stepper, tol);
        w.h = choice.h;
        w.underflow = choice.underflow;
        // Land exactly on t_end when the window reaches it.
        t_next = choice.h >= remaining ? opts.t_end : t + choice.h;
        h_pre = choice.h;
      } else {
        ++step;
        t_next = fixed_end(step);
        w.h = t_next - t;
      }
      const PowerSeries dxs = series::differentiate(xs);
      x_next = xs.evaluate(t_next);
      v_next = dxs.evaluate(t_next);

      // Window diagnostics against the local exact solution from (x, v).
      w.r_practical = benchmark_bound(b, xs, w.h, m);
      const PowerSeries d2 = series::differentiate(dxs);
      double r_exact = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double ti = t + w.h * static_cast<double>(i) / static_cast<double>(m - 1);
        const auto [xt, vt] = b.exact_from(x, v, t, ti);
        const double k = b.omega * b.omega + b.sigma * b.sigma;
        const double at = 2.0 * b.sigma * vt - k * xt;
        r_exact = std::max({r_exact, std::abs(dxs.evaluate(ti) - vt), std::abs(d2.evaluate(ti) - at)});
      }
      w.r_exact = r_exact;
      const auto [xl, vl] = b.exact_from(x, v, t, t_next);
      w.local_error = std::max(std::abs(x_next - xl), std::abs(v_next - vl));

      for (std::size_t i = 1; i < opts.dense_samples; ++i) {
        const double ti = t + w.h * static_cast<double>(i) / static_cast<double>(opts.dense_samples);
        rep.max_error_dense = std::max(rep.max_error_dense, std::abs(xs.evaluate(ti) - b.exact(ti).first));
      }
    }

    if (!std::isfinite(x_next) || !std::isfinite(v_next)) {
      throw Error(ErrorKind::propagation_diverged, "benchmark state became non-finite");
    }
    t = t_next;
    x = x_next;
    v = v_next;
    rep.t.push_back(t);
    rep.x.push_back(x);
    rep.v.push_back(v);
    rep.windows.push_back(w);
    const double err = std::abs(x - b.exact(t).first);
    rep.max_error = std::max(rep.max_error, err);
    rep.max_error_dense = std::max(rep.max_error_dense, err);
  }

  rep.final_error = std::abs(x - b.exact(t).first);
  if (!rep.windows.empty()) {
    rep.first_window = rep.windows.front().h;
    rep.mean_window = opts.t_end / static_cast<double>(rep.windows.size());
  }
  return rep;
}

}  // namespace sasim::benchmark
