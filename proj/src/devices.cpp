#include "sasim/devices.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sasim/error.hpp"

namespace sasim::devices {

using series::PowerSeries;
using series::SeriesVector;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

[[noreturn]] void init_fail(const std::string& what) { throw Error(ErrorKind::initialization, what); }

template <std::size_t N>
std::array<PowerSeries, N> unpack(const SeriesVector& x) {
  std::array<PowerSeries, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = x[i];
  return out;
}

template <std::size_t N>
SeriesVector pack(std::array<PowerSeries, N>&& r) {
  return SeriesVector(std::vector<PowerSeries>(std::make_move_iterator(r.begin()), std::make_move_iterator(r.end())));
}

}  // namespace

// ---------------------------------------------------------------------------
// Generator

void GeneratorParams::validate() const {
  std::ostringstream why;
  if (!(xd >= xd1 && xd1 > xd2 && xd2 > 0.0)) why << "require xd >= xd' > xd'' > 0; ";
  if (!(xq >= xq1 && xq1 > xq2 && xq2 > 0.0)) why << "require xq >= xq' > xq'' > 0; ";
  if (!(td01 > 0 && td02 > 0 && tq01 > 0 && tq02 > 0 && te > 0 && tg > 0)) why << "time constants must be > 0; ";
  if (!(h > 0)) why << "inertia must be > 0; ";
  if (!(droop > 0)) why << "droop must be > 0; ";
  if (!(omega_s > 0)) why << "synchronous speed must be > 0; ";
  if (!(ka != 0.0)) why << "exciter gain must be nonzero; ";
  const std::string s = why.str();
  if (!s.empty()) init_fail("generator parameters: " + s);
}

GeneratorEval generator_derivatives(const GeneratorState& x, const GeneratorParams& p, Complex v) {
  const auto r = generator_rhs<double>(x, p, std::abs(v), std::arg(v));
  GeneratorEval out;
  out.rates = r.rates;
  out.vd = r.vd;
  out.vq = r.vq;
  out.id = r.id;
  out.iq = r.iq;
  out.pe = r.pe;
  out.current = std::polar(1.0, x[gen::delta] - kHalfPi) * Complex(r.id, r.iq);
  return out;
}

Complex norton_admittance(const GeneratorParams& p) { return 1.0 / Complex(p.ra, p.xd2); }

GeneratorInit init_generator(const GeneratorParams& params, double p, double q, Complex v) {
  params.validate();
  if (!std::isfinite(p) || !std::isfinite(q) || !std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    init_fail("generator power-flow point is not finite");
  }
  if (std::abs(v) < 1e-6) init_fail("generator terminal voltage is zero");

  const Complex i = std::conj(Complex(p, q) / v);
  const Complex e_q = v + Complex(params.ra, params.xq) * i;
  if (!std::isfinite(std::abs(e_q)) || std::abs(e_q) < 1e-9) init_fail("generator internal voltage is degenerate");
  const double delta = std::arg(e_q);

  const Complex to_dq = std::polar(1.0, -(delta - kHalfPi));
  const Complex v_dq = to_dq * v;
  const Complex i_dq = to_dq * i;
  const double vd = v_dq.real(), vq = v_dq.imag();
  const double id = i_dq.real(), iq = i_dq.imag();

  GeneratorInit out;
  out.params = params;
  auto& x = out.state;
  x[gen::delta] = delta;
  x[gen::domega] = 0.0;
  x[gen::ed2] = vd + params.ra * id - params.xq2 * iq;
  x[gen::eq2] = vq + params.ra * iq + params.xd2 * id;
  x[gen::ed1] = x[gen::ed2] - (params.xq1 - params.xq2) * iq;
  x[gen::eq1] = x[gen::eq2] + (params.xd1 - params.xd2) * id;
  x[gen::efd] = x[gen::eq2] + (params.xd - params.xd2) * id;
  x[gen::pm] = vd * id + vq * iq;
  out.params.v_ref = std::abs(v) + x[gen::efd] / params.ka;
  out.params.p_ref = x[gen::pm];
  return out;
}

SeriesVector generator_sas(const GeneratorState& x, const GeneratorParams& p, const PolarVoltageSeries& v, double t0,
                           std::size_t order) {
  if (v.t0() != t0) throw Error(ErrorKind::contract_violation, "generator_sas: voltage series origin differs from t0");
  auto field = [&](const SeriesVector& xs) {
    const auto vk = v.at_order(xs.order());
    return pack(generator_rhs<PowerSeries>(unpack<gen::size>(xs), p, vk.magnitude, vk.angle).rates);
  };
  return series::propagate(field, x, t0, order);
}

// ---------------------------------------------------------------------------
// Motor

void MotorParams::validate() const {
  std::ostringstream why;
  if (!(h > 0)) why << "inertia must be > 0; ";
  if (!(xs > xs1 && xs1 > 0)) why << "require xs > xs' > 0; ";
  if (!(xr > 0)) why << "rotor reactance must be > 0; ";
  if (!(rr > 0)) why << "rotor resistance must be > 0; ";
  if (!(rs >= 0)) why << "stator resistance must be >= 0; ";
  if (!(omega_s > 0)) why << "synchronous speed must be > 0; ";
  const std::string s = why.str();
  if (!s.empty()) init_fail("motor parameters: " + s);
}

MotorEval motor_derivatives(const MotorState& x, const MotorParams& p, Complex v) {
  const auto r = motor_rhs<double>(x, p, std::abs(v), std::arg(v));
  MotorEval out;
  out.rates = r.rates;
  out.z_re = r.z_re;
  out.z_im = r.z_im;
  out.t_motor = r.t_motor;
  out.t_load = r.t_load;
  out.current = Complex(r.i_re, r.i_im);
  return out;
}

double motor_electrical_power(const MotorParams& p, double s, double vmag) {
  const double y = s * p.xr / p.rr;
  const double dx = p.xs - p.xs1;
  const double z_re = p.rs + y * dx / (1.0 + y * y);
  const double z_im = p.xs1 + dx / (1.0 + y * y);
  return z_re * vmag * vmag / (z_re * z_re + z_im * z_im);
}

MotorInit init_motor(const MotorParams& params, double p_draw, Complex v) {
  params.validate();
  const double vmag = std::abs(v);
  if (!(p_draw > 0.0)) init_fail("motor requires a positive active power draw");
  if (!(vmag > 0.0) || !std::isfinite(vmag)) init_fail("motor terminal voltage is zero or not finite");

  auto residual = [&](double s) { return motor_electrical_power(params, s, vmag) - p_draw; };

  // Bracket the first sign change on a logarithmic grid, then bisect: the smallest
  // root is the stable branch of the torque-slip curve.
  constexpr int kGrid = 4000;
  const double ratio = std::log(kMotorSlipMax / kMotorSlipMin);
  double lo = kMotorSlipMin, hi = 0.0;
  double f_lo = residual(lo);
  if (f_lo >= 0.0) init_fail("motor draws more than the requested power at the minimum slip");
  for (int i = 1; i <= kGrid; ++i) {
    const double s = kMotorSlipMin * std::exp(ratio * i / kGrid);
    const double f = residual(s);
    if (f >= 0.0) {
      hi = s;
      break;
    }
    lo = s;
    f_lo = f;
  }
  if (hi == 0.0) {
    std::ostringstream msg;
    msg << "motor stalls: no equilibrium slip in (" << kMotorSlipMin << ", " << kMotorSlipMax << ") for P = " << p_draw
        << " at |V| = " << vmag;
    init_fail(msg.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) < 0.0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);

  const double y = s * params.xr / params.rr;
  const double dx = params.xs - params.xs1;
  const Complex z(params.rs + y * dx / (1.0 + y * y), params.xs1 + dx / (1.0 + y * y));
  const Complex i = v / z;
  // Steady transient voltage: v' = (xs - xs') (y + j) / (1 + y^2) * I.
  const Complex vp = dx * Complex(y, 1.0) / (1.0 + y * y) * i;

  MotorInit out;
  out.params = params;
  out.state[mot::slip] = s;
  out.state[mot::vd1] = vp.real();
  out.state[mot::vq1] = vp.imag();
  const double t_motor = vp.real() * i.real() + vp.imag() * i.imag();

  const double shape = (params.f1 != 0.0 ? params.f1 * std::pow(s, params.lambda1) : 0.0) +
                       (params.f2 != 0.0 ? params.f2 * std::pow(1.0 - s, params.lambda2) : 0.0);
  if (!(std::abs(shape) > 0.0) || !std::isfinite(shape)) init_fail("motor load-torque curve vanishes at the equilibrium slip");
  const double scale = t_motor / shape;
  out.params.f1 *= scale;
  out.params.f2 *= scale;
  out.power = v * std::conj(i);
  return out;
}

SeriesVector motor_sas(const MotorState& x, const MotorParams& p, const PolarVoltageSeries& v, double t0,
                       std::size_t order) {
  if (v.t0() != t0) throw Error(ErrorKind::contract_violation, "motor_sas: voltage series origin differs from t0");
  auto field = [&](const SeriesVector& xs) {
    const auto vk = v.at_order(xs.order());
    return pack(motor_rhs<PowerSeries>(unpack<mot::size>(xs), p, vk.magnitude, vk.angle).rates);
  };
  return series::propagate(field, x, t0, order);
}

// ---------------------------------------------------------------------------
// ZIP load

void ZipLoad::validate() const {
  for (const auto* shares : {&p_share, &q_share}) {
    double sum = 0.0;
    for (double s : *shares) {
      if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::initialization, "ZIP share outside [0, 1]");
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "ZIP shares sum to " << sum << ", expected 1";
      throw Error(ErrorKind::initialization, msg.str());
    }
  }
  if (!(std::abs(v0) > 0.0)) throw Error(ErrorKind::initialization, "ZIP load initial voltage is zero");
}

Complex zip_admittance(const ZipLoad& load) {
  const double v2 = std::norm(load.v0);
  return Complex(load.p_share[0] * load.p0, -load.q_share[0] * load.q0) / v2;
}

Complex zip_current(const ZipLoad& load, Complex v) {
  const double v0 = std::abs(load.v0);
  const double vm = std::abs(v);
  const double pi = load.p_share[1] * load.p0, qi = load.q_share[1] * load.q0;
  const double pp = load.p_share[2] * load.p0, qp = load.q_share[2] * load.q0;
  if (vm < kZipVoltageFloor) {
    // Impedance equivalent at the floor voltage, continuous with the law above it.
    const double vf = kZipVoltageFloor;
    const Complex s_floor(pi * vf / v0 + pp, qi * vf / v0 + qp);
    return std::conj(s_floor) / (vf * vf) * v;
  }
  const Complex num(pi * vm / v0 + pp, -(qi * vm / v0 + qp));
  return num / std::conj(v);
}

}  // namespace sasim::devices
