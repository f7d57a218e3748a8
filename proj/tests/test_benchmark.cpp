#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "sasim/benchmark.hpp"
#include "sasim/error.hpp"

using Catch::Approx;
using namespace sasim;
using namespace sasim::benchmark;

namespace {

BenchmarkReport fixed(std::size_t order, double dt = 0.01) {
  BenchmarkOptions o;
  o.order = order;
  o.dt = dt;
  return run_linear_benchmark(LinearBenchmark{}, o);
}

BenchmarkReport rk4(double dt) {
  BenchmarkOptions o;
  o.method = BenchmarkMethod::rk4;
  o.dt = dt;
  return run_linear_benchmark(LinearBenchmark{}, o);
}

BenchmarkReport adaptive(std::size_t order, double eps) {
  BenchmarkOptions o;
  o.order = order;
  o.eps = eps;
  return run_linear_benchmark(LinearBenchmark{}, o);
}

const std::size_t kOrders[] = {3, 4, 5, 6, 7, 8};
const double kEps[] = {0.0025, 0.004, 0.006, 0.007, 0.009, 0.015};

}  // namespace

TEST_CASE("closed form is consistent with restarts", "[benchmark]") {
  const LinearBenchmark b;
  CHECK(b.exact(0.0).first == 0.0);
  CHECK(b.exact(0.0).second == Approx(b.v0).epsilon(1e-15));
  for (double t1 : {0.3, 2.5, 7.1}) {
    const auto [x1, v1] = b.exact(t1);
    for (double t2 : {t1 + 0.01, t1 + 1.3}) {
      const auto a = b.exact_from(x1, v1, t1, t2);
      const auto e = b.exact(t2);
      CHECK(a.first == Approx(e.first).margin(1e-12));
      CHECK(a.second == Approx(e.second).margin(1e-12));
    }
  }
  // x = e^{sigma t} sin(omega t)
  CHECK(b.exact(1.7).first == Approx(std::exp(-0.17) * std::sin(1.7 * b.omega)).margin(1e-15));
  LinearBenchmark bad;
  bad.omega = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("fixed-window errors by order", "[benchmark][fixed]") {
  // values frozen from this implementation
  const double expected[] = {31.42, 0.1019, 9.57e-4, 7.44e-6, 4.737e-8, 2.445e-10};
  std::vector<double> err;
  for (std::size_t n = 1; n <= 8; ++n) err.push_back(fixed(n).max_error);
  for (std::size_t n = 1; n <= 6; ++n) {
    INFO("order " << n);
    CHECK(err[n - 1] == Approx(expected[n - 1]).epsilon(2e-3));
  }
  CHECK(err[6] <= 1e-11);
  CHECK(err[7] <= 1e-11);
  // strictly decreasing from order 4 to 6
  CHECK(err[3] > err[4]);
  CHECK(err[4] > err[5]);
  // orders 2 and 3 inside their acceptance bands
  CHECK(err[1] >= 0.05);
  CHECK(err[1] <= 0.2);
  CHECK(err[2] >= 4e-4);
  CHECK(err[2] <= 2e-3);
}

TEST_CASE("fixed-window series are one propagation per window", "[benchmark][fixed]") {
  const auto rep = fixed(3);
  REQUIRE(rep.windows.size() == 1000);
  CHECK(rep.t.back() == 10.0);
  for (const auto& w : rep.windows) CHECK(w.h == Approx(0.01).epsilon(1e-9));
  CHECK(rep.first_window == Approx(0.01).epsilon(1e-12));
  // the velocity handed over is the derivative of the position series, so an
  // order-1 series carries the initial velocity unchanged
  const auto e = fixed(1);
  for (std::size_t i = 1; i <= 5; ++i) {
    CHECK(e.v[i] == e.v[0]);
    CHECK(e.x[i] == Approx(0.01 * static_cast<double>(i) * e.v[0]).epsilon(1e-14));
  }
}

TEST_CASE("RK4 reference", "[benchmark][rk4]") {
  const auto a = rk4(0.01);
  const auto b = rk4(0.005);
  CHECK(a.max_error == Approx(9.41e-8).epsilon(5e-3));
  const double ratio = a.max_error / b.max_error;
  CHECK(ratio > 14.0);
  CHECK(ratio < 18.0);
  BenchmarkOptions bad;
  bad.method = BenchmarkMethod::rk4;
  bad.eps = 0.01;
  CHECK_THROWS_AS(run_linear_benchmark(LinearBenchmark{}, bad), Error);
}

TEST_CASE("adaptive first window for order 5", "[benchmark][adaptive]") {
  const auto rep = adaptive(5, 0.006);
  CHECK(rep.first_window == Approx(0.152).epsilon(0.25));
  CHECK(rep.first_window == Approx(0.1514).epsilon(1e-3));
}

TEST_CASE("adaptive windows over orders 3 to 8", "[benchmark][adaptive][property]") {
  double prev_mean = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto rep = adaptive(kOrders[i], kEps[i]);
    INFO("order " << kOrders[i] << " eps " << kEps[i]);
    CHECK(rep.mean_window >= prev_mean);
    prev_mean = rep.mean_window;
    CHECK(rep.max_error >= 1e-4);
    CHECK(rep.max_error <= 1e-2);
    CHECK(rep.final_error <= kEps[i] * 10.0);
    std::size_t violations = 0;
    double total = 0.0;
    for (const auto& w : rep.windows) {
      total += w.h;
      if (w.local_error > w.r_exact * w.h) {
        ++violations;
        CHECK(w.local_error <= 1.1 * w.r_exact * w.h);
      }
      CHECK(w.r_practical <= kEps[i]);
      CHECK(!w.underflow);
    }
    CHECK(violations * 100 <= rep.windows.size());
    CHECK(total == Approx(10.0).epsilon(1e-12));
  }
}

TEST_CASE("adaptive means frozen", "[benchmark][adaptive]") {
  const double means[] = {0.0118, 0.0585, 0.1316, 0.2128, 0.3125, 0.4348};
  for (std::size_t i = 0; i < 6; ++i) {
    INFO("order " << kOrders[i]);
    CHECK(adaptive(kOrders[i], kEps[i]).mean_window == Approx(means[i]).epsilon(5e-3));
  }
}
