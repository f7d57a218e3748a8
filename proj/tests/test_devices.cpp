#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "catch_amalgamated.hpp"
#include "sasim/devices.hpp"
#include "sasim/error.hpp"

using Catch::Approx;
using namespace sasim;
using namespace sasim::devices;

namespace {

constexpr double kPi = std::numbers::pi;

// Straight-line machine algebra written from the dq definitions with std::complex,
// independent of the templated right-hand side.
struct GenOracle {
  GeneratorState rates;
  double pe;
  Complex ig;
};

GenOracle gen_oracle(const GeneratorState& x, const GeneratorParams& p, Complex v) {
  const Complex rot = std::exp(Complex(0.0, -(x[gen::delta] - kPi / 2)));
  const Complex vdq = rot * v;
  const double vd = vdq.real(), vq = vdq.imag();
  // Stator: e''d - vd = ra id - x''q iq, e''q - vq = x''d id + ra iq
  const double a11 = p.ra, a12 = -p.xq2, a21 = p.xd2, a22 = p.ra;
  const double b1 = x[gen::ed2] - vd, b2 = x[gen::eq2] - vq;
  const double det = a11 * a22 - a12 * a21;
  const double id = (b1 * a22 - a12 * b2) / det;
  const double iq = (a11 * b2 - a21 * b1) / det;
  const Complex ig = std::exp(Complex(0.0, x[gen::delta] - kPi / 2)) * Complex(id, iq);
  const double pe = std::real(v * std::conj(ig));

  GenOracle o;
  auto& r = o.rates;
  r[gen::delta] = p.omega_s * x[gen::domega];
  r[gen::domega] = (x[gen::pm] - pe - p.d * x[gen::domega]) / (2 * p.h);
  r[gen::eq1] = (x[gen::efd] - x[gen::eq1] - (p.xd - p.xd1) * (x[gen::eq1] - x[gen::eq2]) / (p.xd1 - p.xd2)) / p.td01;
  r[gen::ed1] = (-x[gen::ed1] - (p.xq - p.xq1) * (x[gen::ed1] - x[gen::ed2]) / (p.xq1 - p.xq2)) / p.tq01;
  r[gen::eq2] = (x[gen::eq1] - x[gen::eq2] - (p.xd1 - p.xd2) * id) / p.td02;
  r[gen::ed2] = (x[gen::ed1] - x[gen::ed2] + (p.xq1 - p.xq2) * iq) / p.tq02;
  r[gen::efd] = (p.ka * (p.v_ref - std::abs(v)) - x[gen::efd]) / p.te;
  r[gen::pm] = (p.p_ref - x[gen::pm] - x[gen::domega] / p.droop) / p.tg;
  o.pe = pe;
  o.ig = ig;
  return o;
}

GeneratorParams random_generator(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GeneratorParams p;
  p.xd2 = 0.1 + 0.2 * u(rng);
  p.xd1 = p.xd2 + 0.05 + 0.25 * u(rng);
  p.xd = p.xd1 + 0.2 + 1.3 * u(rng);
  p.xq2 = 0.1 + 0.2 * u(rng);
  p.xq1 = p.xq2 + 0.05 + 0.4 * u(rng);
  p.xq = p.xq1 + 1.2 * u(rng);
  p.td01 = 3 + 6 * u(rng);
  p.td02 = 0.02 + 0.03 * u(rng);
  p.tq01 = 0.3 + 0.5 * u(rng);
  p.tq02 = 0.03 + 0.04 * u(rng);
  p.h = 2 + 20 * u(rng);
  p.d = 2 * u(rng);
  p.ra = 0.01 * u(rng);
  p.ka = 10 + 40 * u(rng);
  p.te = 0.02 + 0.1 * u(rng);
  p.droop = 0.03 + 0.04 * u(rng);
  p.tg = 0.2 + 0.4 * u(rng);
  return p;
}

MotorParams representative_motor() {
  MotorParams m;
  m.rs = 0.031;
  m.xs = 3.1;
  m.xs1 = 0.178;
  m.xr = 3.08;
  m.rr = 0.018;
  m.h = 0.7;
  return m;
}

double max_abs(const auto& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

template <std::size_t N>
std::array<double, N> rk4_reference(std::array<double, N> x, double t0, double h, const PolarVoltageSeries& v,
                                    const auto& rates_of) {
  const int steps = static_cast<int>(std::lround(h / 1e-6));
  const double dt = h / steps;
  auto f = [&](double t, const std::array<double, N>& s) { return rates_of(s, v.evaluate(t)); };
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    auto add = [&](const std::array<double, N>& a, const std::array<double, N>& k, double c) {
      std::array<double, N> out;
      for (std::size_t j = 0; j < N; ++j) out[j] = a[j] + c * k[j];
      return out;
    };
    const auto k1 = f(t, x);
    const auto k2 = f(t + dt / 2, add(x, k1, dt / 2));
    const auto k3 = f(t + dt / 2, add(x, k2, dt / 2));
    const auto k4 = f(t + dt, add(x, k3, dt));
    for (std::size_t j = 0; j < N; ++j) x[j] += dt / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    t += dt;
  }
  return x;
}

PolarVoltageSeries ramp_voltage(double t0) {
  PolarVoltageSeries v;
  v.magnitude = series::PowerSeries(t0, {0.98, -0.6, 2.0});
  v.angle = series::PowerSeries(t0, {0.12, 0.8, -3.0});
  return v;
}

}  // namespace

TEST_CASE("generator derivatives match the straight-line oracle", "[devices][generator]") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_generator(rng);
    p.v_ref = 1.0 + 0.2 * u(rng);
    p.p_ref = 0.5 + 0.5 * u(rng);
    GeneratorState x;
    for (auto& c : x) c = u(rng);
    x[gen::delta] = 3 * u(rng);
    x[gen::domega] = 0.05 * u(rng);
    const Complex v = std::polar(0.6 + 0.5 * std::abs(u(rng)), kPi * u(rng));
    const auto ev = generator_derivatives(x, p, v);
    const auto o = gen_oracle(x, p, v);
    for (std::size_t i = 0; i < gen::size; ++i) CHECK(ev.rates[i] == Approx(o.rates[i]).margin(1e-10).epsilon(1e-12));
    CHECK(std::abs(ev.current - o.ig) <= 1e-12 * (1 + std::abs(o.ig)));
    // stator power identity
    CHECK(std::abs(ev.pe - std::real(v * std::conj(ev.current))) <= 1e-10);
    CHECK(ev.pe == Approx(o.pe).margin(1e-12));
  }
}

TEST_CASE("dq rotation round trip", "[devices][generator][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Complex ph(u(rng) / 5, u(rng) / 5);
    const double delta = u(rng);
    const Complex back = std::polar(1.0, delta - kPi / 2) * (std::polar(1.0, -(delta - kPi / 2)) * ph);
    CHECK(std::abs(back - ph) <= 1e-12);
  }
}

TEST_CASE("generator initialization zeroes every derivative", "[devices][generator][init][property]") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto params = random_generator(rng);
    const double p = 0.05 + 1.4 * u(rng);
    const double q = -0.4 + 1.1 * u(rng);
    const Complex v = std::polar(0.95 + 0.13 * u(rng), -0.6 + 1.2 * u(rng));
    const auto init = init_generator(params, p, q, v);
    const auto ev = generator_derivatives(init.state, init.params, v);
    worst = std::max(worst, max_abs(ev.rates));
    // terminal power is the scheduled one
    const Complex s = v * std::conj(ev.current);
    CHECK(s.real() == Approx(p).margin(1e-10));
    CHECK(s.imag() == Approx(q).margin(1e-10));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("loaded generator initialization checked by the oracle", "[devices][generator][init]") {
  GeneratorParams params;
  params.xd = 1.8;
  params.xd1 = 0.3;
  params.xd2 = 0.23;
  params.xq = 1.7;
  params.xq1 = 0.55;
  params.xq2 = 0.25;
  params.td01 = 8.0;
  params.td02 = 0.03;
  params.tq01 = 0.4;
  params.tq02 = 0.05;
  params.h = 6.5;
  params.d = 1.0;
  params.ra = 0.003;
  const Complex v = std::polar(1.02, 5.0 * kPi / 180.0);
  const auto init = init_generator(params, 0.8, 0.2, v);
  const auto o = gen_oracle(init.state, init.params, v);
  CHECK(max_abs(o.rates) < 1e-8);
  const Complex s = v * std::conj(o.ig);
  CHECK(s.real() == Approx(0.8).margin(1e-12));
  CHECK(s.imag() == Approx(0.2).margin(1e-12));
}

TEST_CASE("unloaded generator", "[devices][generator][init]") {
  const auto init = init_generator(GeneratorParams{}, 0.0, 0.0, Complex(1.0, 0.0));
  CHECK(init.state[gen::domega] == 0.0);
  CHECK(init.state[gen::pm] == Approx(0.0).margin(1e-15));
  const auto ev = generator_derivatives(init.state, init.params, Complex(1.0, 0.0));
  CHECK(ev.pe == Approx(0.0).margin(1e-15));
  CHECK(max_abs(ev.rates) <= 1e-12);
}

TEST_CASE("generator initialization errors", "[devices][generator][errors]") {
  try {
    (void)init_generator(GeneratorParams{}, 0.5, 0.1, Complex(0.0, 0.0));
    FAIL("expected an initialization error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::initialization);
  }
  GeneratorParams bad;
  bad.xd1 = 0.1;  // below x''d
  CHECK_THROWS_AS(init_generator(bad, 0.5, 0.1, Complex(1.0, 0.0)), Error);
  bad = GeneratorParams{};
  bad.h = 0.0;
  CHECK_THROWS_AS(init_generator(bad, 0.5, 0.1, Complex(1.0, 0.0)), Error);
}

TEST_CASE("Norton admittance", "[devices][generator]") {
  GeneratorParams p;
  p.ra = 0.01;
  p.xd2 = 0.2;
  CHECK(std::abs(norton_admittance(p) - 1.0 / Complex(0.01, 0.2)) <= 1e-15);
}

TEST_CASE("generator series", "[devices][generator][sas]") {
  GeneratorParams params;
  const Complex v = std::polar(1.01, 0.2);
  const auto init = init_generator(params, 0.7, 0.25, v);

  SECTION("equilibrium under constant voltage stays constant") {
    const auto s = generator_sas(init.state, init.params, PolarVoltageSeries::constant(0.0, v, 3), 0.0, 4);
    for (std::size_t i = 0; i < gen::size; ++i)
      for (std::size_t k = 1; k <= 4; ++k) CHECK(std::abs(s[i][k]) <= 1e-9);
  }

  auto x = init.state;
  x[gen::delta] += 0.15;
  x[gen::eq2] -= 0.04;
  x[gen::domega] = 0.002;
  const auto vs = ramp_voltage(0.0);

  SECTION("order 1 is one Euler step") {
    const auto s = generator_sas(x, init.params, vs, 0.0, 1);
    const auto ev = generator_derivatives(x, init.params, vs.evaluate(0.0));
    for (double h : {1e-3, 0.02}) {
      const auto end = s.evaluate(h);
      for (std::size_t i = 0; i < gen::size; ++i)
        CHECK(end[i] == Approx(x[i] + h * ev.rates[i]).margin(1e-13).epsilon(1e-13));
    }
  }

  SECTION("order 2 error is third order in the window") {
    auto rates_of = [&](const GeneratorState& s, Complex vv) { return generator_derivatives(s, init.params, vv).rates; };
    double err[2];
    const double hs[2] = {0.02, 0.01};
    for (int j = 0; j < 2; ++j) {
      const auto ref = rk4_reference<gen::size>(x, 0.0, hs[j], vs, rates_of);
      const auto sas = generator_sas(x, init.params, vs, 0.0, 2).evaluate(hs[j]);
      err[j] = 0.0;
      for (std::size_t i = 0; i < gen::size; ++i) err[j] = std::max(err[j], std::abs(sas[i] - ref[i]));
    }
    const double ratio = err[0] / err[1];
    INFO("errors " << err[0] << " " << err[1]);
    CHECK(ratio > 6.5);
    CHECK(ratio < 9.5);
  }

  SECTION("origin mismatch") {
    CHECK_THROWS_AS(generator_sas(x, init.params, ramp_voltage(1.0), 0.0, 2), Error);
  }
}

TEST_CASE("motor impedance and current match the direct formulas", "[devices][motor]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    MotorParams p;
    p.rs = 0.05 * u(rng);
    p.xs1 = 0.1 + 0.2 * u(rng);
    p.xs = p.xs1 + 1.0 + 3.0 * u(rng);
    p.xr = 1.0 + 3.0 * u(rng);
    p.rr = 0.005 + 0.05 * u(rng);
    p.h = 0.2 + u(rng);
    p.f2 = 0.5 + u(rng);
    MotorState x{0.2 * u(rng) + 1e-4, u(rng) - 0.5, u(rng) - 0.5};
    const Complex v = std::polar(0.5 + 0.6 * u(rng), 2 * kPi * (u(rng) - 0.5));
    const auto ev = motor_derivatives(x, p, v);

    const double y = x[mot::slip] * p.xr / p.rr;
    const double z_re = p.rs + y * (p.xs - p.xs1) / (1 + y * y);
    const double z_im = p.xs1 + (p.xs - p.xs1) / (1 + y * y);
    CHECK(ev.z_re == Approx(z_re).epsilon(1e-12));
    CHECK(ev.z_im == Approx(z_im).epsilon(1e-12));
    const Complex i = v / Complex(z_re, z_im);
    CHECK(std::abs(ev.current - i) <= 1e-12 * std::abs(i));
    CHECK(ev.t_motor == Approx(x[mot::vd1] * i.real() + x[mot::vq1] * i.imag()).margin(1e-12));
    CHECK(ev.t_load == Approx(p.f2 * std::pow(1 - x[mot::slip], 2.0)).epsilon(1e-12));
    const double k = p.omega_s * p.rr / p.xr;
    CHECK(ev.rates[mot::vd1] ==
          Approx(-k * ((p.xs - p.xs1) * i.imag() + x[mot::vd1]) + p.omega_s * x[mot::slip] * x[mot::vq1]).margin(1e-9));
    CHECK(ev.rates[mot::vq1] ==
          Approx(k * ((p.xs - p.xs1) * i.real() - x[mot::vq1]) - p.omega_s * x[mot::slip] * x[mot::vd1]).margin(1e-9));
  }
}

TEST_CASE("motor at zero voltage decelerates", "[devices][motor]") {
  auto p = representative_motor();
  const auto init = init_motor(p, 0.4, Complex(1.0, 0.0));
  const auto ev = motor_derivatives(init.state, init.params, Complex(0.0, 0.0));
  CHECK(ev.t_motor == 0.0);
  CHECK(ev.rates[mot::slip] == Approx(ev.t_load / (2 * p.h)));
  CHECK(ev.rates[mot::slip] > 0.0);
}

TEST_CASE("motor initialization residual over random feasible points", "[devices][motor][init][property]") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MotorParams p;
    p.rs = 0.005 + 0.04 * u(rng);
    p.xs1 = 0.1 + 0.2 * u(rng);
    p.xs = p.xs1 + 1.5 + 2.0 * u(rng);
    p.xr = p.xs - 0.1 * u(rng);
    p.rr = 0.01 + 0.03 * u(rng);
    p.h = 0.3 + 1.2 * u(rng);
    p.lambda2 = 1.0 + 1.5 * u(rng);
    const double vmag = 0.95 + 0.1 * u(rng);
    const Complex v = std::polar(vmag, -0.5 + u(rng));
    double p_max = 0.0;
    for (double s = 1e-4; s < kMotorSlipMax; s += 1e-4) p_max = std::max(p_max, motor_electrical_power(p, s, vmag));
    const double draw = (0.1 + 0.7 * u(rng)) * p_max;
    const auto init = init_motor(p, draw, v);
    CHECK(init.state[mot::slip] > 0.0);
    CHECK(init.state[mot::slip] < 1.0);
    CHECK(init.power.real() == Approx(draw).epsilon(1e-9));
    worst = std::max(worst, max_abs(motor_derivatives(init.state, init.params, v).rates));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("motor slip matches a brute-force scan of the torque balance", "[devices][motor][init]") {
  const auto p = representative_motor();
  const Complex v(1.0, 0.0);
  const auto init = init_motor(p, 0.4, v);
  // first grid point where the drawn active power reaches 0.4
  double scan = -1.0;
  for (int i = 1; i <= 500000; ++i) {
    const double s = i * 1e-6;
    const double y = s * p.xr / p.rr;
    const Complex z(p.rs + y * (p.xs - p.xs1) / (1 + y * y), p.xs1 + (p.xs - p.xs1) / (1 + y * y));
    if (std::real(v * std::conj(v / z)) >= 0.4) {
      scan = s;
      break;
    }
  }
  REQUIRE(scan > 0.0);
  CHECK(std::abs(init.state[mot::slip] - scan) <= 1e-6);
}

TEST_CASE("motor initialization errors", "[devices][motor][errors]") {
  const auto p = representative_motor();
  CHECK_THROWS_AS(init_motor(p, 0.0, Complex(1.0, 0.0)), Error);
  CHECK_THROWS_AS(init_motor(p, 50.0, Complex(1.0, 0.0)), Error);  // beyond breakdown
  MotorParams bad = p;
  bad.xs1 = bad.xs + 1;
  CHECK_THROWS_AS(init_motor(bad, 0.4, Complex(1.0, 0.0)), Error);
}

TEST_CASE("motor series", "[devices][motor][sas]") {
  const auto p = representative_motor();
  const Complex v = std::polar(0.99, -0.1);
  const auto init = init_motor(p, 0.4, v);

  SECTION("equilibrium under constant voltage stays constant") {
    const auto s = motor_sas(init.state, init.params, PolarVoltageSeries::constant(0.0, v, 2), 0.0, 4);
    for (std::size_t i = 0; i < mot::size; ++i)
      for (std::size_t k = 1; k <= 4; ++k) CHECK(std::abs(s[i][k]) <= 1e-9);
  }

  auto x = init.state;
  x[mot::slip] *= 1.3;
  x[mot::vq1] += 0.03;
  const auto vs = ramp_voltage(0.0);

  SECTION("order 1 is one Euler step") {
    const auto s = motor_sas(x, init.params, vs, 0.0, 1);
    const auto ev = motor_derivatives(x, init.params, vs.evaluate(0.0));
    const auto end = s.evaluate(0.004);
    for (std::size_t i = 0; i < mot::size; ++i)
      CHECK(end[i] == Approx(x[i] + 0.004 * ev.rates[i]).margin(1e-13).epsilon(1e-13));
  }

  SECTION("order 2 error is third order in the window") {
    auto rates_of = [&](const MotorState& s, Complex vv) { return motor_derivatives(s, init.params, vv).rates; };
    double err[2];
    const double hs[2] = {0.01, 0.005};
    for (int j = 0; j < 2; ++j) {
      const auto ref = rk4_reference<mot::size>(x, 0.0, hs[j], vs, rates_of);
      const auto sas = motor_sas(x, init.params, vs, 0.0, 2).evaluate(hs[j]);
      err[j] = 0.0;
      for (std::size_t i = 0; i < mot::size; ++i) err[j] = std::max(err[j], std::abs(sas[i] - ref[i]));
    }
    const double ratio = err[0] / err[1];
    INFO("errors " << err[0] << " " << err[1]);
    CHECK(ratio > 6.5);
    CHECK(ratio < 9.5);
  }
}

TEST_CASE("ZIP load currents", "[devices][zip]") {
  ZipLoad load;
  load.p0 = 1.2;
  load.q0 = 0.4;
  load.v0 = std::polar(0.97, -0.2);

  SECTION("pure impedance draws nothing outside the admittance matrix") {
    CHECK(zip_current(load, std::polar(0.9, 0.1)) == Complex(0.0, 0.0));
    const Complex y = zip_admittance(load);
    const Complex s = load.v0 * std::conj(y * load.v0);
    CHECK(s.real() == Approx(1.2).epsilon(1e-14));
    CHECK(s.imag() == Approx(0.4).epsilon(1e-14));
  }
  SECTION("scheduled power recovered at the initial voltage") {
    load.p_share = {0.2, 0.3, 0.5, 0.0};
    load.q_share = {0.1, 0.6, 0.3, 0.0};
    const Complex i = zip_current(load, load.v0);
    const Complex s = load.v0 * std::conj(i);
    CHECK(s.real() == Approx(0.8 * 1.2).epsilon(1e-14));
    CHECK(s.imag() == Approx(0.9 * 0.4).epsilon(1e-14));
  }
  SECTION("constant power current doubles when the voltage halves") {
    load.p_share = {0.0, 0.0, 1.0, 0.0};
    load.q_share = {0.0, 0.0, 1.0, 0.0};
    const Complex v(0.9, 0.3);
    CHECK(std::abs(zip_current(load, v / 2.0)) == Approx(2 * std::abs(zip_current(load, v))).epsilon(1e-14));
  }
  SECTION("voltage floor") {
    load.p_share = {0.2, 0.3, 0.5, 0.0};
    load.q_share = {0.2, 0.3, 0.5, 0.0};
    const Complex above = zip_current(load, std::polar(kZipVoltageFloor * (1 + 1e-12), 0.3));
    const Complex below = zip_current(load, std::polar(kZipVoltageFloor * (1 - 1e-12), 0.3));
    CHECK(std::abs(above - below) <= 1e-9);
    // impedance behaviour below the floor
    const Complex a = zip_current(load, std::polar(0.2, 0.1));
    const Complex b = zip_current(load, std::polar(0.1, 0.1));
    CHECK(std::abs(a - 2.0 * b) <= 1e-14);
    CHECK(zip_current(load, Complex(0.0, 0.0)) == Complex(0.0, 0.0));
  }
  SECTION("share validation") {
    load.p_share = {0.2, 0.2, 0.5, 0.0};
    CHECK_THROWS_AS(load.validate(), Error);
    load.p_share = {1.2, -0.2, 0.0, 0.0};
    CHECK_THROWS_AS(load.validate(), Error);
    load.p_share = {0.2, 0.3, 0.5, 0.0};
    CHECK_NOTHROW(load.validate());
  }
}
