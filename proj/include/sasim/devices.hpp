#pragma once

// Dynamic element models: sixth-order synchronous generator with a first-order
// exciter and governor, third-order induction motor, and the ZIP static load.
//
// The generator and motor right-hand sides are written once as templates over
// the scalar type, so the same algebra serves plain derivative evaluation
// (double) and series evaluation on a window (series::PowerSeries).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

#include "sasim/series.hpp"
#include "sasim/voltage.hpp"

namespace sasim::devices {

// ---------------------------------------------------------------------------
// Generator

struct GeneratorParams {
  double xd = 1.0, xd1 = 0.3, xd2 = 0.2;  // d-axis synchronous, transient, sub-transient (pu)
  double xq = 0.9, xq1 = 0.5, xq2 = 0.2;  // q-axis counterparts (pu)
  double td01 = 6.0, td02 = 0.03;         // d-axis open-circuit time constants (s)
  double tq01 = 0.5, tq02 = 0.05;         // q-axis open-circuit time constants (s)
  double h = 5.0;                         // inertia (s)
  double d = 0.0;                         // damping (pu)
  double ra = 0.0;                        // armature resistance (pu)
  double omega_s = 2.0 * std::numbers::pi * 60.0;
  double ka = 20.0, te = 0.05;            // exciter gain and time constant
  double v_ref = 1.0, p_ref = 0.0;        // setpoints, overwritten by init_generator
  double droop = 0.05, tg = 0.5;          // governor droop (pu) and time constant (s)
  std::size_t bus = 0;

  /// Throws Error(initialization) when reactance ordering or positivity fails.
  void validate() const;
};

/// State layout: rotor angle, speed deviation, e'q, e'd, e''q, e''d, field voltage, mechanical power.
namespace gen {
inline constexpr std::size_t delta = 0, domega = 1, eq1 = 2, ed1 = 3, eq2 = 4, ed2 = 5, efd = 6, pm = 7;
inline constexpr std::size_t size = 8;
}  // namespace gen
using GeneratorState = std::array<double, gen::size>;

/// Time derivatives and interface quantities of a generator at one instant.
struct GeneratorEval {
  GeneratorState rates{};
  double vd = 0.0, vq = 0.0, id = 0.0, iq = 0.0;
  double pe = 0.0;
  Complex current;  // injected into the terminal bus
};

/// Machine right-hand side with the terminal voltage given in polar form (vm, va).
/// Vd + jVq = exp(-j(delta - pi/2)) V reduces to Vd = vm sin(delta - va), Vq = vm cos(delta - va).
template <class T>
struct GeneratorRhs {
  std::array<T, gen::size> rates;
  T vd, vq, id, iq, pe;
};

template <class T>
GeneratorRhs<T> generator_rhs(const std::array<T, gen::size>& x, const GeneratorParams& p, const T& vm,
                              const T& va) {
  using std::cos;
  using std::sin;
  const T theta = x[gen::delta] - va;
  const T vd = vm * sin(theta);
  const T vq = vm * cos(theta);

  const double den = p.ra * p.ra + p.xd2 * p.xq2;
  const T dd = x[gen::ed2] - vd;
  const T dq = x[gen::eq2] - vq;
  const T id = (dd * p.ra + dq * p.xq2) / den;
  const T iq = (-(dd * p.xd2) + dq * p.ra) / den;
  const T pe = vd * id + vq * iq;

  std::array<T, gen::size> r;
  r[gen::delta] = x[gen::domega] * p.omega_s;
  r[gen::domega] = (x[gen::pm] - pe - p.d * x[gen::domega]) / (2.0 * p.h);
  r[gen::eq1] = (-((p.xd - p.xd2) / (p.xd1 - p.xd2)) * x[gen::eq1] +
                 ((p.xd - p.xd1) / (p.xd1 - p.xd2)) * x[gen::eq2] + x[gen::efd]) /
                p.td01;
  r[gen::ed1] = (-((p.xq - p.xq2) / (p.xq1 - p.xq2)) * x[gen::ed1] +
                 ((p.xq - p.xq1) / (p.xq1 - p.xq2)) * x[gen::ed2]) /
                p.tq01;
  r[gen::eq2] = (x[gen::eq1] - x[gen::eq2] - (p.xd1 - p.xd2) * id) / p.td02;
  r[gen::ed2] = (x[gen::ed1] - x[gen::ed2] + (p.xq1 - p.xq2) * iq) / p.tq02;
  // Polar form: |V| is the magnitude polynomial itself.
  r[gen::efd] = (p.ka * (p.v_ref - vm) - x[gen::efd]) / p.te;
  r[gen::pm] = (p.p_ref - x[gen::pm] - x[gen::domega] / p.droop) / p.tg;
  return {std::move(r), vd, vq, id, iq, pe};
}

GeneratorEval generator_derivatives(const GeneratorState& x, const GeneratorParams& p, Complex v);

/// Norton shunt placed in the admittance matrix: 1 / (Ra + j X''d).
Complex norton_admittance(const GeneratorParams& p);

struct GeneratorInit {
  GeneratorState state{};
  GeneratorParams params;  // v_ref and p_ref balanced
};

/// Steady-state back-solve at terminal power p + jq and voltage v.
GeneratorInit init_generator(const GeneratorParams& params, double p, double q, Complex v);

/// Order-n series of the machine states with the terminal voltage prescribed by `v`.
series::SeriesVector generator_sas(const GeneratorState& x, const GeneratorParams& p, const PolarVoltageSeries& v,
                                   double t0, std::size_t order);

// ---------------------------------------------------------------------------
// Induction motor

struct MotorParams {
  double h = 0.5;                         // inertia (s)
  double rs = 0.01, rr = 0.02;            // stator/rotor resistance (pu)
  double xs = 3.0, xs1 = 0.2, xr = 3.0;   // stator, stator transient and rotor reactance (pu)
  double f1 = 0.0, f2 = 1.0;              // load-torque coefficients
  double lambda1 = 0.0, lambda2 = 2.0;    // load-torque exponents
  double omega_s = 2.0 * std::numbers::pi * 60.0;
  std::size_t bus = 0;

  void validate() const;
};

/// State layout: slip, v'q, v'd.
namespace mot {
inline constexpr std::size_t slip = 0, vq1 = 1, vd1 = 2;
inline constexpr std::size_t size = 3;
}  // namespace mot
using MotorState = std::array<double, mot::size>;

struct MotorEval {
  MotorState rates{};
  double z_re = 0.0, z_im = 0.0;
  double t_motor = 0.0, t_load = 0.0;
  Complex current;  // drawn from the bus, Idm + j Iqm
};

template <class T>
struct MotorRhs {
  std::array<T, mot::size> rates;
  T z_re, z_im, i_re, i_im, t_motor, t_load;
};

namespace detail {
inline double power_term(double s, double lambda) { return std::pow(s, lambda); }
inline series::PowerSeries power_term(const series::PowerSeries& s, double lambda) { return series::pow(s, lambda); }
}  // namespace detail

template <class T>
MotorRhs<T> motor_rhs(const std::array<T, mot::size>& x, const MotorParams& p, const T& vm, const T& va) {
  using std::cos;
  using std::sin;
  const T& s = x[mot::slip];
  const double dx = p.xs - p.xs1;
  const T y = s * (p.xr / p.rr);
  const T inv = 1.0 / (1.0 + y * y);
  const T z_re = p.rs + dx * (y * inv);
  const T z_im = p.xs1 + dx * inv;

  // I = V / (z_re + j z_im)
  const T v_re = vm * cos(va);
  const T v_im = vm * sin(va);
  const T inv_mag2 = 1.0 / (z_re * z_re + z_im * z_im);
  const T i_re = (v_re * z_re + v_im * z_im) * inv_mag2;
  const T i_im = (v_im * z_re - v_re * z_im) * inv_mag2;

  const T t_motor = x[mot::vd1] * i_re + x[mot::vq1] * i_im;
  T t_load = 0.0 * s;
  if (p.f1 != 0.0) t_load += p.f1 * (p.lambda1 == 0.0 ? 1.0 + 0.0 * s : detail::power_term(s, p.lambda1));
  if (p.f2 != 0.0) {
    t_load += p.f2 * (p.lambda2 == 0.0 ? 1.0 + 0.0 * s : detail::power_term(1.0 - s, p.lambda2));
  }

  const double k = p.omega_s * p.rr / p.xr;
  std::array<T, mot::size> r;
  r[mot::slip] = (t_load - t_motor) / (2.0 * p.h);
  r[mot::vd1] = -k * (dx * i_im + x[mot::vd1]) + p.omega_s * (s * x[mot::vq1]);
  r[mot::vq1] = k * (dx * i_re - x[mot::vq1]) - p.omega_s * (s * x[mot::vd1]);
  return {std::move(r), z_re, z_im, i_re, i_im, t_motor, t_load};
}

MotorEval motor_derivatives(const MotorState& x, const MotorParams& p, Complex v);

struct MotorInit {
  MotorState state{};
  MotorParams params;  // f1 and f2 scaled so that torque balances
  Complex power;       // complex power drawn at the equilibrium
};

/// Lower and upper slip of the equilibrium search.
inline constexpr double kMotorSlipMin = 1e-6;
inline constexpr double kMotorSlipMax = 0.5;

/// Electrical power drawn by the motor's steady-state equivalent at slip s.
double motor_electrical_power(const MotorParams& p, double s, double vmag);

/// Finds the smallest slip in (kMotorSlipMin, kMotorSlipMax) drawing `p_draw` at `v`.
MotorInit init_motor(const MotorParams& params, double p_draw, Complex v);

series::SeriesVector motor_sas(const MotorState& x, const MotorParams& p, const PolarVoltageSeries& v, double t0,
                               std::size_t order);

// ---------------------------------------------------------------------------
// ZIP load

struct ZipLoad {
  double p0 = 0.0, q0 = 0.0;  // scheduled load at initialization (pu)
  Complex v0{1.0, 0.0};        // bus voltage at initialization
  // Shares: constant impedance, constant current, constant power, motor.
  std::array<double, 4> p_share{1.0, 0.0, 0.0, 0.0};
  std::array<double, 4> q_share{1.0, 0.0, 0.0, 0.0};
  std::size_t bus = 0;

  /// Shares must lie in [0, 1] and sum to 1 (to 1e-9).
  void validate() const;
};

/// Below this magnitude the constant-current and constant-power shares behave as
/// an impedance fixed at the threshold voltage.
inline constexpr double kZipVoltageFloor = 0.4;

/// Constant-impedance share as a shunt admittance (lives in the admittance matrix).
Complex zip_admittance(const ZipLoad& load);

/// Current drawn by the constant-current and constant-power shares.
Complex zip_current(const ZipLoad& load, Complex v);

}  // namespace sasim::devices
